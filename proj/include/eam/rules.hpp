#pragma once

// Tree rewrites: AND-try, OR-try, deterministic promotion and OR-split.
// Binding, suspension and AND-collapse are the outcomes of `unify` (terms.hpp)
// plus `prune` (boxes.hpp); the machine applies them per instruction.

#include <stdexcept>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "eam/boxes.hpp"
#include "eam/program.hpp"
#include "eam/trace.hpp"

namespace eam {

class UnknownPredicate : public std::runtime_error {
 public:
  explicit UnknownPredicate(const PredRef& p)
      : std::runtime_error("unknown predicate " + p.name + "/" + std::to_string(p.arity)), pred(p) {}
  PredRef pred;
};

// Opens a goal of `caller`: a fresh OR-box under the caller's group head whose
// OR-continuation starts at the callee's first clause.
inline OrId and_try(Configuration& c, const Program& prog, AndId caller, const PredRef& callee,
                    const std::vector<TermRef>& args, CodeAddress return_to) {
  auto entry = prog.entry(callee);
  if (!entry) throw UnknownPredicate(callee);
  auto o = new_or_box(c, c.group_head(caller), callee.arity);
  auto& ob = c.or_box(o);
  ob.args = args;
  ob.alt = *entry;
  ob.context = return_to;
  ob.pred = callee;
  return o;
}

// Opens the next alternative of `o` as a fresh AND-box. The alternative is
// consumed; the clause's own try/retry/trust instruction re-arms it.
inline AndId or_try(Configuration& c, const Program& prog, OrId o) {
  auto& ob = c.or_box(o);
  if (!ob.alt) throw std::logic_error("or_try on an OR-box with no alternative left");
  auto at = *ob.alt;
  ob.alt.reset();
  auto frame = prog.frames.at(ob.pred);
  auto a = new_and_box(c, o, frame.size());
  auto& box = c.and_box(a);
  box.clause = at;
  box.frame = frame;
  return a;
}

inline bool can_promote(const Configuration& c, OrId o) {
  const auto& ob = c.or_box(o);
  if (!ob.alive || !ob.parent || ob.alt || ob.children.size() != 1) return false;
  auto st = status(c, ob.children[0]);
  return st == BoxStatus::suspended || st == BoxStatus::solved;
}

inline bool can_split(const Configuration& c, OrId o) {
  const auto& ob = c.or_box(o);
  return ob.alive && ob.parent && !ob.alt && ob.children.size() >= 2;
}

// Merges the single child of `o` into o's parent group. The child's OR-boxes
// take o's place among the parent's children; its pending continuations join
// the parent's queue, still tagged with their owners. Returns the promoted box.
inline AndId promote(Configuration& c, OrId o) {
  auto& ob = c.or_box(o);
  if (!ob.parent || ob.alt || ob.children.size() != 1)
    throw std::logic_error("promote needs exactly one child and no untried alternatives");
  auto promoted = ob.children[0];
  auto head = *ob.parent;

  auto tail = c.group_members(head).back();
  for (auto m : c.group_members(promoted)) c.and_box(m).group_head = head;
  c.and_box(tail).group_next = promoted;

  auto& parent = c.and_box(head);
  auto& child = c.and_box(promoted);
  auto pos = std::find(parent.children.begin(), parent.children.end(), o);
  auto moved = child.children;
  child.children.clear();
  pos = parent.children.erase(pos);
  parent.children.insert(pos, moved.begin(), moved.end());
  for (auto m : moved) c.or_box(m).parent = head;
  for (auto& e : child.and_continuation) parent.and_continuation.push_back(e);
  child.and_continuation.clear();

  ob.children.clear();
  ob.alive = false;
  return promoted;
}

// Splits `o` (two or more children, all alternatives opened): its parent group
// is copied as a new rightmost sibling under the grandparent OR-box. The
// original keeps o's leftmost child; the copy keeps the others. Returns the
// copy of `o`.
inline OrId or_split(Configuration& c, OrId o) {
  {
    const auto& ob = c.or_box(o);
    if (!ob.parent || ob.children.size() < 2) throw std::logic_error("or_split needs at least two children");
  }
  auto original = *c.or_box(o).parent;
  auto grand = c.and_box(original).parent;

  std::vector<NodeId> order;
  std::unordered_set<NodeId> inside;
  for_each_in_subtree(
      c, original,
      [&](AndId a) {
        order.push_back(a);
        inside.insert(a);
      },
      [&](OrId x) { order.push_back(x); });

  std::unordered_map<NodeId, NodeId> map;
  for (auto id : order) {
    if (c.is_and(id)) map[id] = c.add_and(AndBox{});
    else map[id] = c.add_or(OrBox{});
  }

  auto& store = c.terms();
  std::unordered_map<TermRef, TermRef> memo;
  auto copy = [&](auto&& self, TermRef t) -> TermRef {
    if (auto it = memo.find(t); it != memo.end()) return it->second;
    Cell cell = store.cell(t);
    TermRef out = t;
    if (auto* v = std::get_if<VarCell>(&cell)) {
      if (inside.count(v->home)) {
        out = store.new_var(map.at(v->home));
        memo[t] = out;
        if (v->binding) {
          auto b = self(self, *v->binding);
          store.var(out)->binding = b;
        }
      }
    } else if (auto* s = std::get_if<StructCell>(&cell)) {
      std::vector<TermRef> args;
      bool changed = false;
      for (auto a : s->args) {
        args.push_back(self(self, a));
        changed |= args.back() != a;
      }
      if (changed) out = store.new_struct(s->functor, std::move(args));
    }
    memo[t] = out;
    return out;
  };
  auto copy_term = [&](TermRef t) { return copy(copy, t); };

  for (auto id : order) {
    auto to = map.at(id);
    if (c.is_and(id)) {
      AndBox src = c.and_box(id);
      AndBox dst;
      dst.id = to;
      for (auto l : src.locals) dst.locals.push_back(copy_term(l));
      for (auto ch : src.children) dst.children.push_back(map.at(ch));
      for (auto e : src.and_continuation) dst.and_continuation.push_back({e.resume_at, map.at(e.owner)});
      if (id == original) dst.parent = grand;
      else if (auto it = map.find(src.parent); it != map.end()) dst.parent = it->second;
      else dst.parent = src.parent;  // promoted member: its old OR-box is gone
      dst.clause = src.clause;
      dst.frame = src.frame;
      if (src.group_next) dst.group_next = map.at(*src.group_next);
      dst.group_head = map.at(src.group_head);
      dst.alive = src.alive;
      c.and_box(to) = std::move(dst);
    } else {
      OrBox src = c.or_box(id);
      OrBox dst;
      dst.id = to;
      for (auto a : src.args) dst.args.push_back(copy_term(a));
      dst.alt = src.alt;
      for (auto ch : src.children) dst.children.push_back(map.at(ch));
      dst.parent = map.at(*src.parent);
      dst.context = src.context;
      dst.pred = src.pred;
      dst.alive = src.alive;
      c.or_box(to) = std::move(dst);
    }
  }

  // Suspension records are duplicated for the copy and registered on the
  // copied variable, or on the same variable when it lives outside.
  for (auto id : order) {
    if (!c.is_and(id)) continue;
    auto records = c.and_box(id).suspensions;
    for (auto sid : records) {
      auto rec = c.suspensions()[sid];
      if (rec.state == SuspensionRecord::State::retired) continue;
      SuspensionRecord dup{map.at(id), rec.resume_at, copy_term(rec.var), copy_term(rec.value), rec.state, {}, rec.cursor_pos};
      for (auto t : rec.cursor) dup.cursor.push_back(copy_term(t));
      auto nid = c.suspensions().add(dup);
      if (dup.state == SuspensionRecord::State::registered) store.var(dup.var)->suspensions.push_back(nid);
      else c.wake_queue.push_back(nid);
      c.and_box(map.at(id)).suspensions.push_back(nid);
    }
  }

  c.or_box(grand).children.push_back(map.at(original));

  auto keep_first = [&](OrId which, bool keep_leftmost) {
    auto kids = c.or_box(which).children;
    std::vector<AndId> kept;
    for (std::size_t i = 0; i < kids.size(); ++i) {
      if ((i == 0) == keep_leftmost) kept.push_back(kids[i]);
      else kill_subtree(c, kids[i]);
    }
    c.or_box(which).children = kept;
  };
  auto counterpart = map.at(o);
  keep_first(o, true);
  keep_first(counterpart, false);
  return counterpart;
}

}  // namespace eam
