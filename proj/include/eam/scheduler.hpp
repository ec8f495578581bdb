#pragma once

// Picks the next rewrite when no box is running. Priority, highest first:
// pending wake-ups, untried alternatives, queued AND-continuations, solved
// root children, deterministic promotion, OR-split.

#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <variant>

#include "eam/audit.hpp"
#include "eam/machine_state.hpp"
#include "eam/rules.hpp"

namespace eam {

struct Resume {
  SuspId record;
};
struct TryAlternative {
  OrId target;
};
struct Continue {
  AndId head;  // group head whose continuation queue is popped
};
struct ReportAnswer {
  AndId root_child;
};
struct Promote {
  OrId target;
};
struct Split {
  OrId target;
};
struct Exhausted {};

using Action = std::variant<Resume, TryAlternative, Continue, ReportAnswer, Promote, Split, Exhausted>;

inline const char* action_name(const Action& a) {
  static constexpr const char* names[] = {"resume", "try_alternative", "continue", "report_answer",
                                          "promote", "split", "exhausted"};
  return names[a.index()];
}

inline std::optional<NodeId> action_target(const Action& a) {
  return std::visit(
      [](const auto& x) -> std::optional<NodeId> {
        using T = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<T, Resume>) return std::nullopt;
        else if constexpr (std::is_same_v<T, TryAlternative> || std::is_same_v<T, Promote> || std::is_same_v<T, Split>)
          return x.target;
        else if constexpr (std::is_same_v<T, Continue>) return x.head;
        else if constexpr (std::is_same_v<T, ReportAnswer>) return x.root_child;
        else return std::nullopt;
      },
      a);
}

namespace detail {

// Pre-order walk that skips the subtrees of root children already reported.
template <class AndFn, class OrFn>
void walk_unreported(const Configuration& c, AndFn&& on_and, OrFn&& on_or) {
  walk_tree(
      c, [&](AndId a) { return !c.and_box(a).reported && on_and(a); }, [&](OrId o) { return on_or(o); });
}

}  // namespace detail

inline std::optional<OrId> leftmost_promotable(const Configuration& c) {
  std::optional<OrId> found;
  detail::walk_unreported(
      c, [&](AndId) { return !found; },
      [&](OrId o) {
        if (!found && can_promote(c, o)) found = o;
        return !found;
      });
  return found;
}

inline Action schedule(const MachineState& s) {
  const auto& c = s.config;
  if (s.thread) throw std::logic_error("scheduler consulted while a box is running");

  for (auto id : c.wake_queue)
    if (c.suspensions()[id].state == SuspensionRecord::State::queued) return Resume{id};

  std::optional<OrId> alt;
  std::optional<AndId> queue;
  detail::walk_unreported(
      c,
      [&](AndId a) {
        if (!queue && !c.and_box(a).and_continuation.empty()) queue = a;
        return true;
      },
      [&](OrId o) {
        if (!alt && c.or_box(o).alt) alt = o;
        return true;
      });
  if (alt) return TryAlternative{*alt};
  if (queue) return Continue{*queue};

  for (auto a : c.or_box(c.root).children)
    if (!c.and_box(a).reported && solved(c, a)) return ReportAnswer{a};

  if (auto o = leftmost_promotable(c)) return Promote{*o};

  std::optional<OrId> split;
  detail::walk_unreported(
      c, [&](AndId) { return !split; },
      [&](OrId o) {
        if (!split && can_split(c, o)) split = o;
        return !split;
      });
  if (split) return Split{*split};
  return Exhausted{};
}

inline void start_thread(MachineState& s, AndId box, CodeAddress pc) {
  s.thread = Thread{box, pc};
  s.config.active = box;
  s.cursor = {};
}

inline void end_thread(MachineState& s) {
  s.thread.reset();
  s.config.active.reset();
  s.cursor = {};
}

inline void run_audits(MachineState& s, const char* after) {
  if (!s.options.audit) return;
  for (auto& v : audit_tree(s.config)) s.violations.push_back(std::string(after) + ": " + v);
  for (auto& v : audit_suspensions(s.config)) s.violations.push_back(std::string(after) + ": " + v);
}

// Opens the next alternative of `o` and moves the thread into it.
inline AndId enter_alternative(MachineState& s, OrId o) {
  auto a = or_try(s.config, *s.program, o);
  s.trace.rule("or_try", s.config.step_count, a, o);
  start_thread(s, a, s.config.and_box(a).clause);
  run_audits(s, "or_try");
  return a;
}

inline void enact(MachineState& s, const Action& action) {
  auto& c = s.config;
  ++c.step_count;
  auto target = action_target(action);
  if (auto* r = std::get_if<Resume>(&action)) target = c.suspensions()[r->record].suspended_box;
  s.trace.sched(action_name(action), c.step_count, target);
  if (s.observer) s.observer(s, action_name(action));

  std::visit(
      [&](const auto& a) {
        using T = std::decay_t<decltype(a)>;
        if constexpr (std::is_same_v<T, Resume>) {
          while (!c.wake_queue.empty() && c.suspensions()[c.wake_queue.front()].state != SuspensionRecord::State::queued)
            c.wake_queue.pop_front();
          if (c.wake_queue.empty() || c.wake_queue.front() != a.record)
            throw std::logic_error("resume of a record that is not at the front of the wake queue");
          c.wake_queue.pop_front();
          auto& rec = c.suspensions()[a.record];
          rec.state = SuspensionRecord::State::retired;
          auto box = rec.suspended_box;
          std::erase(c.and_box(box).suspensions, a.record);
          start_thread(s, box, rec.resume_at);
          s.cursor = {rec.cursor, rec.cursor_pos};
          s.resuming = true;
        } else if constexpr (std::is_same_v<T, TryAlternative>) {
          enter_alternative(s, a.target);
        } else if constexpr (std::is_same_v<T, Continue>) {
          auto& q = c.and_box(a.head).and_continuation;
          auto entry = q.front();
          q.pop_front();
          start_thread(s, entry.owner, entry.resume_at);
        } else if constexpr (std::is_same_v<T, ReportAnswer>) {
          extract_answer(s, a.root_child);
        } else if constexpr (std::is_same_v<T, Promote>) {
          auto before = s.options.audit ? count_live_or_boxes(c) : 0;
          auto promoted = promote(c, a.target);
          s.trace.rule("promote", c.step_count, promoted, a.target);
          if (s.options.audit && count_live_or_boxes(c) + 1 != before)
            s.violations.push_back("promote: OR-box count did not drop by one");
          // the promoted boxes may now own the variables they waited on
          for (auto m : c.group_members(promoted)) {
            if (c.group_head(m) != c.group_head(promoted)) continue;
            for (auto id : c.and_box(m).suspensions) {
              auto& rec = c.suspensions()[id];
              if (rec.state != SuspensionRecord::State::registered) continue;
              if (auto* v = c.terms().var(rec.var)) std::erase(v->suspensions, id);
              rec.state = SuspensionRecord::State::queued;
              c.wake_queue.push_back(id);
            }
          }
          run_audits(s, "promote");
        } else if constexpr (std::is_same_v<T, Split>) {
          if (s.options.audit && leftmost_promotable(c))
            s.violations.push_back("split chosen while a promotion was applicable");
          std::multiset<std::uint32_t> leaves_before;
          std::string shape_before;
          auto parent = *c.or_box(a.target).parent;
          if (s.options.audit) {
            leaves_before = alternative_leaves(c, a.target);
            shape_before = subtree_shape(c, parent, a.target, a.target);
          }
          auto copy = or_split(c, a.target);
          s.trace.rule("split", c.step_count, a.target, copy);
          if (s.options.audit) {
            auto after = alternative_leaves(c, a.target);
            for (auto x : alternative_leaves(c, copy)) after.insert(x);
            if (after != leaves_before) s.violations.push_back("split: alternatives not conserved");
            auto copy_parent = *c.or_box(copy).parent;
            if (subtree_shape(c, parent, a.target, copy) != shape_before ||
                subtree_shape(c, copy_parent, a.target, copy) != shape_before)
              s.violations.push_back("split: copy is not isomorphic to the original");
          }
          run_audits(s, "split");
        } else {
          s.exhausted = true;
        }
      },
      action);
}

}  // namespace eam
