#pragma once

// Heap terms and the binding protocol.
//
// A binding attempt has exactly one of four outcomes:
//   bind_ok    - unbound variable local to the current group; written.
//   bind_susp  - unbound variable owned by another group; the attempt is
//                recorded on the variable and the current box must stop.
//   check_ok   - already bound to a compatible value.
//   check_fail - already bound to something else; the caller prunes.
//
// Locality and suspension bookkeeping are delegated to a context type, so the
// protocol can run against the full configuration or a small test fixture:
//
//   struct Ctx {
//     TermStore& terms();
//     SuspensionTable& suspensions();
//     AndId group_head(AndId) const;
//     void on_suspend(AndId box, SuspId);   // box-side mirror of the record
//     void on_wake(SuspId);                 // record moved to the wake queue
//   };

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <type_traits>
#include <utility>
#include <variant>
#include <vector>

#include "eam/ids.hpp"

namespace eam {

enum class BindOutcome { bind_ok, bind_susp, check_ok, check_fail };

inline const char* to_string(BindOutcome o) {
  switch (o) {
    case BindOutcome::bind_ok: return "BIND_OK";
    case BindOutcome::bind_susp: return "BIND_SUSP";
    case BindOutcome::check_ok: return "CHECK_OK";
    case BindOutcome::check_fail: return "CHECK_FAIL";
  }
  return "?";
}

inline bool proceeds(BindOutcome o) { return o == BindOutcome::bind_ok || o == BindOutcome::check_ok; }

struct VarCell {
  AndId home;
  std::optional<TermRef> binding;
  std::vector<SuspId> suspensions;
};
struct AtomCell {
  std::string name;
};
struct IntCell {
  std::int64_t value = 0;
};
struct StructCell {
  std::string functor;
  std::vector<TermRef> args;
};
using Cell = std::variant<VarCell, AtomCell, IntCell, StructCell>;

struct SuspensionRecord {
  enum class State { registered, queued, retired };

  AndId suspended_box;
  CodeAddress resume_at;
  TermRef var;    // the unbound variable the attempt was made on
  TermRef value;  // what it tried to bind it to
  State state = State::registered;
  // Structure-argument cursor when the attempt came from a unify_* instruction.
  std::vector<TermRef> cursor;
  std::uint32_t cursor_pos = 0;
};

class SuspensionTable {
 public:
  SuspId add(SuspensionRecord r) {
    records_.push_back(r);
    return SuspId{records_.size() - 1};
  }
  SuspensionRecord& operator[](SuspId id) { return records_.at(id.index()); }
  const SuspensionRecord& operator[](SuspId id) const { return records_.at(id.index()); }
  std::size_t size() const { return records_.size(); }

 private:
  std::vector<SuspensionRecord> records_;
};

// Plain tree copy of a term, detached from the store. Unbound variables keep
// their store index so answers print as _G<index>.
struct TermValue {
  enum class Kind { var, atom, integer, structure };
  Kind kind = Kind::atom;
  std::string name;        // atom name or functor
  std::int64_t value = 0;  // integer value or variable index
  std::vector<TermValue> args;
  bool operator==(const TermValue&) const = default;
};

inline constexpr const char* cyclic_marker = "@cyclic";

inline bool is_cyclic(const TermValue& t) {
  if (t.kind == TermValue::Kind::atom) return t.name == cyclic_marker;
  for (const auto& a : t.args)
    if (is_cyclic(a)) return true;
  return false;
}

inline void write_term(std::string& out, const TermValue& t) {
  switch (t.kind) {
    case TermValue::Kind::var: out += "_G" + std::to_string(t.value); break;
    case TermValue::Kind::atom: out += t.name; break;
    case TermValue::Kind::integer: out += std::to_string(t.value); break;
    case TermValue::Kind::structure:
      out += t.name + "(";
      for (std::size_t i = 0; i < t.args.size(); ++i) {
        if (i) out += ",";
        write_term(out, t.args[i]);
      }
      out += ")";
      break;
  }
}

inline std::string to_string(const TermValue& t) {
  std::string out;
  write_term(out, t);
  return out;
}

// Renumbers variables 0, 1, ... in order of first appearance across `terms`,
// so answers compare equal up to variable renaming.
inline void canonicalize(std::vector<TermValue>& terms) {
  std::map<std::int64_t, std::int64_t> rename;
  auto walk = [&](auto&& self, TermValue& t) -> void {
    if (t.kind == TermValue::Kind::var) {
      auto [it, fresh] = rename.try_emplace(t.value, static_cast<std::int64_t>(rename.size()));
      t.value = it->second;
    }
    for (auto& a : t.args) self(self, a);
  };
  for (auto& t : terms) walk(walk, t);
}

class TermStore {
 public:
  TermRef new_var(AndId home) { return push(VarCell{home, std::nullopt, {}}); }
  TermRef new_atom(std::string name) { return push(AtomCell{std::move(name)}); }
  TermRef new_int(std::int64_t v) { return push(IntCell{v}); }
  TermRef new_struct(std::string functor, std::vector<TermRef> args) {
    return push(StructCell{std::move(functor), std::move(args)});
  }

  const Cell& cell(TermRef t) const { return cells_.at(t.index()); }
  Cell& cell(TermRef t) { return cells_.at(t.index()); }
  std::size_t size() const { return cells_.size(); }

  VarCell* var(TermRef t) { return std::get_if<VarCell>(&cell(t)); }
  const VarCell* var(TermRef t) const { return std::get_if<VarCell>(&cell(t)); }

  TermRef deref(TermRef t) const {
    for (;;) {
      const auto* v = var(t);
      if (!v || !v->binding) return t;
      t = *v->binding;
    }
  }

  bool is_unbound(TermRef t) const {
    const auto* v = var(deref(t));
    return v != nullptr;
  }

  // Deref-closed copy of `t`. Without an occurs check terms can be cyclic; a
  // structure met again inside itself is written as the atom `@cyclic`.
  TermValue snapshot(TermRef t) const {
    std::vector<TermRef> path;
    return snapshot(t, path);
  }

  std::string to_string(TermRef t) const { return eam::to_string(snapshot(t)); }

 private:
  TermValue snapshot(TermRef t, std::vector<TermRef>& path) const {
    t = deref(t);
    TermValue out;
    std::visit(
        [&](const auto& c) {
          using C = std::decay_t<decltype(c)>;
          if constexpr (std::is_same_v<C, VarCell>) {
            out.kind = TermValue::Kind::var;
            out.value = static_cast<std::int64_t>(t.value);
          } else if constexpr (std::is_same_v<C, AtomCell>) {
            out.name = c.name;
          } else if constexpr (std::is_same_v<C, IntCell>) {
            out.kind = TermValue::Kind::integer;
            out.value = c.value;
          } else if (std::find(path.begin(), path.end(), t) != path.end()) {
            out.name = cyclic_marker;
          } else {
            out.kind = TermValue::Kind::structure;
            out.name = c.functor;
            path.push_back(t);
            for (auto a : c.args) out.args.push_back(snapshot(a, path));
            path.pop_back();
          }
        },
        cell(t));
    return out;
  }

  TermRef push(Cell c) {
    cells_.push_back(std::move(c));
    return TermRef{cells_.size() - 1};
  }

  std::vector<Cell> cells_;
};

inline TermRef new_var(TermStore& store, AndId home) { return store.new_var(home); }
inline TermRef deref(const TermStore& store, TermRef t) { return store.deref(t); }

template <class Ctx>
bool is_local(const Ctx& ctx, TermRef v, AndId current) {
  const auto* cell = ctx.terms().var(ctx.terms().deref(v));
  return cell && ctx.group_head(cell->home) == ctx.group_head(current);
}

namespace detail {

template <class Ctx>
void write_binding(Ctx& ctx, TermRef var, TermRef value) {
  auto& cell = *ctx.terms().var(var);
  cell.binding = value;
  auto woken = std::move(cell.suspensions);
  cell.suspensions.clear();
  for (auto id : woken) {
    ctx.suspensions()[id].state = SuspensionRecord::State::queued;
    ctx.on_wake(id);
  }
}

template <class Ctx>
BindOutcome suspend(Ctx& ctx, TermRef var, TermRef value, AndId current, CodeAddress resume_at) {
  auto id = ctx.suspensions().add({current, resume_at, var, value, SuspensionRecord::State::registered, {}, 0});
  ctx.terms().var(var)->suspensions.push_back(id);
  ctx.on_suspend(current, id);
  return BindOutcome::bind_susp;
}

}  // namespace detail

namespace detail {

template <class Ctx>
BindOutcome unify(Ctx& ctx, TermRef a, TermRef b, AndId current, CodeAddress resume_at,
                  std::vector<std::pair<TermRef, TermRef>>& path) {
  auto& store = ctx.terms();
  a = store.deref(a);
  b = store.deref(b);
  if (a == b) return BindOutcome::check_ok;
  bool a_var = store.var(a) != nullptr;
  bool b_var = store.var(b) != nullptr;

  if (a_var && b_var) {
    bool a_local = is_local(ctx, a, current);
    bool b_local = is_local(ctx, b, current);
    if (a_local && b_local) {
      // younger cell points at the older one
      if (a.value > b.value) write_binding(ctx, a, b);
      else write_binding(ctx, b, a);
      return BindOutcome::bind_ok;
    }
    if (a_local) {
      write_binding(ctx, a, b);
      return BindOutcome::bind_ok;
    }
    if (b_local) {
      write_binding(ctx, b, a);
      return BindOutcome::bind_ok;
    }
    return suspend(ctx, a, b, current, resume_at);
  }
  if (a_var || b_var) {
    auto var = a_var ? a : b;
    auto value = a_var ? b : a;
    if (!is_local(ctx, var, current)) return suspend(ctx, var, value, current, resume_at);
    write_binding(ctx, var, value);
    return BindOutcome::bind_ok;
  }

  const auto& ca = store.cell(a);
  const auto& cb = store.cell(b);
  if (ca.index() != cb.index()) return BindOutcome::check_fail;
  if (auto* x = std::get_if<AtomCell>(&ca))
    return x->name == std::get<AtomCell>(cb).name ? BindOutcome::check_ok : BindOutcome::check_fail;
  if (auto* x = std::get_if<IntCell>(&ca))
    return x->value == std::get<IntCell>(cb).value ? BindOutcome::check_ok : BindOutcome::check_fail;

  const auto& sa = std::get<StructCell>(ca);
  const auto& sb = std::get<StructCell>(cb);
  if (sa.functor != sb.functor || sa.args.size() != sb.args.size()) return BindOutcome::check_fail;
  // a pair already open on this path is assumed equal (rational trees)
  for (const auto& [x, y] : path)
    if ((x == a && y == b) || (x == b && y == a)) return BindOutcome::check_ok;
  // copies: unify may grow the store and invalidate the references above
  auto args_a = sa.args;
  auto args_b = sb.args;
  path.emplace_back(a, b);
  auto result = BindOutcome::check_ok;
  for (std::size_t i = 0; i < args_a.size(); ++i) {
    auto r = unify(ctx, args_a[i], args_b[i], current, resume_at, path);
    if (!proceeds(r)) {
      result = r;
      break;
    }
    if (r == BindOutcome::bind_ok) result = r;
  }
  path.pop_back();
  return result;
}

}  // namespace detail

// General unification over the binding protocol. Arguments of structures are
// unified left to right; the first outcome that is not OK is returned.
template <class Ctx>
BindOutcome unify(Ctx& ctx, TermRef a, TermRef b, AndId current, CodeAddress resume_at) {
  std::vector<std::pair<TermRef, TermRef>> path;
  return detail::unify(ctx, a, b, current, resume_at, path);
}

// Binding attempt of `value` onto `v`. When `v` is already bound this is the
// structural check; otherwise the locality rule decides between writing and
// suspending.
template <class Ctx>
BindOutcome bind(Ctx& ctx, TermRef v, TermRef value, AndId current, CodeAddress resume_at) {
  return unify(ctx, v, value, current, resume_at);
}

}  // namespace eam
