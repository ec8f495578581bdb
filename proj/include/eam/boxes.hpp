#pragma once

// The AND-OR configuration tree.
//
// Boxes live in one id-indexed arena. AND-boxes that were promoted into an
// ancestor stay in the arena as members of the ancestor's group: they keep
// their own locals (so resumed code still finds its registers) but they are no
// longer tree nodes. Only group heads appear as children of OR-boxes, and
// every OR-box's parent is a group head.

#include <algorithm>
#include <cassert>
#include <deque>
#include <functional>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "eam/program.hpp"
#include "eam/terms.hpp"

namespace eam {

struct ContinuationEntry {
  CodeAddress resume_at;
  AndId owner;  // box whose registers the code at resume_at addresses
  bool operator==(const ContinuationEntry&) const = default;
};

enum class BoxStatus { running, waiting, suspended, solved, failed };

inline const char* to_string(BoxStatus s) {
  switch (s) {
    case BoxStatus::running: return "running";
    case BoxStatus::waiting: return "waiting";
    case BoxStatus::suspended: return "suspended";
    case BoxStatus::solved: return "solved";
    case BoxStatus::failed: return "failed";
  }
  return "?";
}

struct AndBox {
  AndId id;
  std::vector<TermRef> locals;
  std::vector<OrId> children;
  std::deque<ContinuationEntry> and_continuation;
  std::vector<SuspId> suspensions;  // records whose suspended_box is this box
  OrId parent;
  CodeAddress clause;  // address the box's clause code started at
  FrameLayout frame;
  std::optional<AndId> group_next;
  AndId group_head;
  bool alive = true;
  bool reported = false;  // root child already turned into an answer
};

struct OrBox {
  OrId id;
  std::vector<TermRef> args;
  std::optional<CodeAddress> alt;
  std::vector<AndId> children;
  std::optional<AndId> parent;  // empty only for the root
  CodeAddress context;          // return address of the call that made it
  PredRef pred;
  bool alive = true;
  bool reported = false;  // root child already turned into an answer
};

class Configuration {
 public:
  Configuration() = default;

  // -- binding context -----------------------------------------------------
  TermStore& terms() { return terms_; }
  const TermStore& terms() const { return terms_; }
  SuspensionTable& suspensions() { return susp_; }
  const SuspensionTable& suspensions() const { return susp_; }
  AndId group_head(AndId a) const { return and_box(a).group_head; }
  void on_suspend(AndId box, SuspId id) { and_box(box).suspensions.push_back(id); }
  void on_wake(SuspId id) { wake_queue.push_back(id); }

  // -- arena ---------------------------------------------------------------
  bool is_and(NodeId id) const { return std::holds_alternative<AndBox>(nodes_.at(id.index())); }
  bool is_or(NodeId id) const { return std::holds_alternative<OrBox>(nodes_.at(id.index())); }
  AndBox& and_box(AndId id) { return std::get<AndBox>(nodes_.at(id.index())); }
  const AndBox& and_box(AndId id) const { return std::get<AndBox>(nodes_.at(id.index())); }
  OrBox& or_box(OrId id) { return std::get<OrBox>(nodes_.at(id.index())); }
  const OrBox& or_box(OrId id) const { return std::get<OrBox>(nodes_.at(id.index())); }
  std::size_t node_count() const { return nodes_.size(); }

  AndId add_and(AndBox box) {
    box.id = NodeId{nodes_.size()};
    box.group_head = box.id;
    nodes_.emplace_back(std::move(box));
    return NodeId{nodes_.size() - 1};
  }
  OrId add_or(OrBox box) {
    box.id = NodeId{nodes_.size()};
    nodes_.emplace_back(std::move(box));
    return NodeId{nodes_.size() - 1};
  }

  // Members of the group headed by `head`, head first.
  std::vector<AndId> group_members(AndId head) const {
    std::vector<AndId> out;
    std::optional<AndId> cur = head;
    while (cur) {
      out.push_back(*cur);
      cur = and_box(*cur).group_next;
    }
    return out;
  }

  bool wake_pending() const {
    return std::any_of(wake_queue.begin(), wake_queue.end(),
                       [&](SuspId id) { return susp_[id].state == SuspensionRecord::State::queued; });
  }

  OrId root;
  std::vector<std::string> query_names;  // A1..An, held in each root child's first locals
  std::deque<SuspId> wake_queue;
  std::optional<AndId> active;  // box whose code is currently executing
  std::uint64_t step_count = 0;

 private:
  TermStore terms_;
  SuspensionTable susp_;
  std::vector<std::variant<AndBox, OrBox>> nodes_;
};

// Fresh AND-box under `parent` with `n_vars` fresh locals homed in itself. The
// first parent.args.size() locals are linked to the OR-box's arguments.
inline AndId new_and_box(Configuration& c, OrId parent, std::size_t n_vars) {
  AndBox box;
  box.parent = parent;
  auto id = c.add_and(std::move(box));
  auto& b = c.and_box(id);
  b.locals.reserve(n_vars);
  for (std::size_t i = 0; i < n_vars; ++i) b.locals.push_back(c.terms().new_var(id));
  const auto& args = c.or_box(parent).args;
  for (std::size_t i = 0; i < args.size() && i < n_vars; ++i) c.terms().var(b.locals[i])->binding = args[i];
  c.or_box(parent).children.push_back(id);
  return id;
}

// Fresh OR-box under AND-box `parent`; the caller preloads args.
inline OrId new_or_box(Configuration& c, AndId parent, std::size_t arity) {
  if (c.group_head(parent) != parent) throw std::logic_error("OR-box parent must be a group head");
  OrBox box;
  box.parent = parent;
  box.args.assign(arity, TermRef{});
  auto id = c.add_or(std::move(box));
  c.and_box(parent).children.push_back(id);
  return id;
}

namespace detail {

inline void retire_suspension(Configuration& c, SuspId id) {
  auto& rec = c.suspensions()[id];
  if (rec.state == SuspensionRecord::State::registered) {
    if (auto* v = c.terms().var(rec.var)) std::erase(v->suspensions, id);
  }
  rec.state = SuspensionRecord::State::retired;
}

}  // namespace detail

// Visits every AND-box (group members included) and OR-box below and including
// the group headed by `head`, pre-order.
template <class AndFn, class OrFn>
void for_each_in_subtree(const Configuration& c, AndId head, AndFn&& on_and, OrFn&& on_or) {
  for (auto m : c.group_members(head)) on_and(m);
  for (auto o : c.and_box(head).children) {
    on_or(o);
    for (auto child : c.or_box(o).children) for_each_in_subtree(c, child, on_and, on_or);
  }
}

// Marks the subtree headed by `head` dead and drops all its suspension records.
// Does not touch the parent OR-box.
inline void kill_subtree(Configuration& c, AndId head) {
  std::vector<AndId> ands;
  std::vector<OrId> ors;
  for_each_in_subtree(c, head, [&](AndId a) { ands.push_back(a); }, [&](OrId o) { ors.push_back(o); });
  for (auto a : ands) {
    auto& box = c.and_box(a);
    for (auto id : box.suspensions) detail::retire_suspension(c, id);
    box.suspensions.clear();
    box.and_continuation.clear();
    box.alive = false;
  }
  for (auto o : ors) c.or_box(o).alive = false;
}

// Removes a failed group and everything below it. When this leaves the parent
// OR-box without children or untried alternatives, that OR-box fails too and
// the failure propagates to its own parent group.
inline void prune(Configuration& c, AndId b) {
  auto head = c.group_head(b);
  auto parent = c.and_box(head).parent;
  kill_subtree(c, head);
  auto& o = c.or_box(parent);
  std::erase(o.children, head);
  if (!o.children.empty() || o.alt || !o.parent) return;
  o.alive = false;
  auto grand = *o.parent;
  std::erase(c.and_box(grand).children, parent);
  prune(c, grand);
}

// True when some box of the group has a record waiting in the wake queue or on a variable.
inline bool group_has_suspensions(const Configuration& c, AndId head, SuspensionRecord::State state) {
  for (std::optional<AndId> m = head; m; m = c.and_box(*m).group_next)
    for (auto id : c.and_box(*m).suspensions)
      if (c.suspensions()[id].state == state) return true;
  return false;
}

// A group is solved when all of its code has run without pending suspensions
// and each child OR-box is down to one solved alternative.
inline bool solved(const Configuration& c, AndId b) {
  auto head = c.group_head(b);
  const auto& box = c.and_box(head);
  if (!box.alive || !box.and_continuation.empty()) return false;
  if (c.active && c.group_head(*c.active) == head) return false;
  for (std::optional<AndId> m = head; m; m = c.and_box(*m).group_next)
    if (!c.and_box(*m).suspensions.empty()) return false;
  for (auto o : box.children) {
    const auto& ob = c.or_box(o);
    if (ob.alt || ob.children.size() != 1 || !solved(c, ob.children[0])) return false;
  }
  return true;
}

inline BoxStatus status(const Configuration& c, AndId b) {
  auto head = c.group_head(b);
  const auto& box = c.and_box(head);
  if (!box.alive) return BoxStatus::failed;
  if (!box.and_continuation.empty() || (c.active && c.group_head(*c.active) == head) ||
      group_has_suspensions(c, head, SuspensionRecord::State::queued))
    return BoxStatus::running;
  if (group_has_suspensions(c, head, SuspensionRecord::State::registered)) return BoxStatus::suspended;
  if (solved(c, head)) return BoxStatus::solved;
  return BoxStatus::waiting;
}

// Pre-order walk over tree nodes (OR-boxes and group heads) from the root.
// Returning false from a visitor stops descent below that node.
template <class AndFn, class OrFn>
void walk_tree(const Configuration& c, AndFn&& on_and, OrFn&& on_or) {
  auto visit_or = [&](auto&& self, OrId o) -> void {
    if (!on_or(o)) return;
    for (auto a : c.or_box(o).children) {
      if (!on_and(a)) continue;
      for (auto child : c.and_box(a).children) self(self, child);
    }
  };
  visit_or(visit_or, c.root);
}

inline bool is_stuck(const Configuration& c) {
  if (c.active || c.wake_pending()) return false;
  bool busy = false;
  std::size_t suspended_leaves = 0;
  walk_tree(
      c,
      [&](AndId a) {
        const auto& box = c.and_box(a);
        if (!box.and_continuation.empty()) busy = true;
        if (box.children.empty() && status(c, a) == BoxStatus::suspended) ++suspended_leaves;
        return true;
      },
      [&](OrId o) {
        if (c.or_box(o).alt) busy = true;
        return true;
      });
  return !busy && suspended_leaves > 0;
}

inline std::size_t count_suspended_leaves(const Configuration& c) {
  std::size_t n = 0;
  walk_tree(
      c,
      [&](AndId a) {
        if (c.and_box(a).children.empty() && status(c, a) == BoxStatus::suspended) ++n;
        return true;
      },
      [](OrId) { return true; });
  return n;
}

// Graphviz snapshot of the live tree.
inline std::string to_dot(const Configuration& c) {
  std::ostringstream out;
  out << "digraph configuration {\n";
  walk_tree(
      c,
      [&](AndId a) {
        auto st = status(c, a);
        out << "  n" << a << " [shape=box,label=\"and_" << a << " [" << to_string(st) << "]\"";
        if (st == BoxStatus::suspended) out << ",style=dashed";
        out << "];\n";
        for (auto o : c.and_box(a).children) out << "  n" << a << " -> n" << o << ";\n";
        auto members = c.group_members(a);
        for (std::size_t i = 1; i < members.size(); ++i) {
          out << "  n" << members[i] << " [shape=box,label=\"and_" << members[i] << " [member]\"];\n";
          out << "  n" << members[i] << " -> n" << a << " [style=dotted];\n";
        }
        return true;
      },
      [&](OrId o) {
        const auto& ob = c.or_box(o);
        out << "  n" << o << " [shape=ellipse,label=\"or_" << o << " alt=" << (ob.alt ? "yes" : "no") << "\"];\n";
        for (auto a : ob.children) out << "  n" << o << " -> n" << a << ";\n";
        return true;
      });
  out << "}\n";
  return out.str();
}

}  // namespace eam
