#pragma once

// Links parsed units into one flat instruction array. Unit-local labels become
// absolute code addresses; predicate references stay symbolic and are looked
// up through `entries` when they are called.

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "eam/wam_reader.hpp"

namespace eam {

class LinkError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Slots a predicate's AND-boxes need. x registers occupy [0, x_slots) and y
// registers [x_slots, x_slots + y_slots) of the box's locals array.
struct FrameLayout {
  std::uint32_t x_slots = 0;
  std::uint32_t y_slots = 0;

  std::uint32_t size() const { return x_slots + y_slots; }
  std::uint32_t slot(const Reg& r) const { return r.bank == RegBank::x ? r.index : x_slots + r.index; }
  bool operator==(const FrameLayout&) const = default;
};

struct Program {
  std::vector<WamInstruction> code;
  std::map<PredRef, CodeAddress> entries;
  std::map<PredRef, std::uint32_t> clause_vars;
  std::map<PredRef, FrameLayout> frames;
  std::vector<PredRef> order;   // predicates in link order
  std::vector<PredRef> owner;   // owning predicate of each address

  std::size_t size() const { return code.size(); }

  const WamInstruction& instruction_at(CodeAddress a) const {
    if (a.index() >= code.size())
      throw std::logic_error("code address " + std::to_string(a.value) + " out of range (program length " +
                             std::to_string(code.size()) + ")");
    return code[a.index()];
  }

  std::optional<CodeAddress> entry(const PredRef& p) const {
    auto it = entries.find(p);
    if (it == entries.end()) return std::nullopt;
    return it->second;
  }

  // Address one past the predicate's last instruction.
  CodeAddress end_of(const PredRef& p) const {
    auto start = entries.at(p).index();
    auto end = start;
    while (end < owner.size() && owner[end] == p) ++end;
    return CodeAddress{end};
  }

  bool operator==(const Program&) const = default;
};

namespace detail {

inline void register_use(const Operand& op, std::uint32_t& max_x, std::uint32_t& max_y, std::uint32_t& max_any) {
  if (auto* r = std::get_if<Reg>(&op)) {
    auto& m = r->bank == RegBank::x ? max_x : max_y;
    m = std::max(m, r->index + 1);
    max_any = std::max(max_any, r->index + 1);
  } else if (auto* a = std::get_if<ArgIndex>(&op)) {
    max_x = std::max(max_x, a->index + 1);
    max_any = std::max(max_any, a->index + 1);
  }
}

}  // namespace detail

inline Program link(const std::vector<WamUnit>& units) {
  Program prog;
  for (const auto& unit : units) {
    auto key = unit.key();
    if (prog.entries.count(key))
      throw LinkError("duplicate predicate " + unit.name + "/" + std::to_string(unit.arity));

    // label id -> absolute address of the next real instruction
    std::map<std::int64_t, CodeAddress> labels;
    std::size_t addr = prog.code.size();
    for (const auto& ins : unit.body) {
      if (ins.opcode == Opcode::label) labels[std::get<Label>(ins.as<Target>(0)).id] = CodeAddress{addr};
      else ++addr;
    }
    auto unit_end = addr;

    auto resolve = [&](Target& t) {
      auto* l = std::get_if<Label>(&t);
      if (!l) return;
      auto it = labels.find(l->id);
      if (it == labels.end() || it->second.index() >= unit_end)
        throw LinkError("unresolved label " + std::to_string(l->id) + " in " + unit.name + "/" + std::to_string(unit.arity));
      t = it->second;
    };

    std::uint32_t max_x = 0, max_y = 0, max_any = 0;
    prog.entries[key] = CodeAddress{prog.code.size()};
    for (auto ins : unit.body) {
      if (ins.opcode == Opcode::label) continue;
      for (auto& op : ins.operands) {
        detail::register_use(op, max_x, max_y, max_any);
        if (auto* t = std::get_if<Target>(&op)) resolve(*t);
        if (auto* tab = std::get_if<SwitchTable>(&op))
          for (auto& c : tab->cases) resolve(c.target);
      }
      if (ins.opcode == Opcode::allocate) max_y = std::max(max_y, ins.as<Count>(0).n);
      prog.code.push_back(std::move(ins));
      prog.owner.push_back(key);
    }
    if (prog.code.size() == prog.entries[key].index())
      throw LinkError("predicate " + unit.name + "/" + std::to_string(unit.arity) + " has no instructions");
    prog.clause_vars[key] = std::max(max_any, unit.arity);
    prog.frames[key] = FrameLayout{std::max(max_x, unit.arity), max_y};
    prog.order.push_back(key);
  }
  return prog;
}

}  // namespace eam
