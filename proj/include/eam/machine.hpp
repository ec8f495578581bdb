#pragma once

// Instruction dispatch with EAM meaning, the run loop and the query driver.

#include <stdexcept>
#include <string>
#include <vector>

#include "eam/machine_state.hpp"
#include "eam/rules.hpp"
#include "eam/scheduler.hpp"

namespace eam {

// Root OR-box with one query box whose locals are the goal's arguments; the
// goal is called from it and its first clause is entered.
inline MachineState boot(const Program& prog, const PredRef& goal, MachineOptions options = {}) {
  if (!prog.entry(goal)) throw UnknownPredicate(goal);
  MachineState s;
  s.program = &prog;
  s.options = options;
  auto& c = s.config;
  c.root = c.add_or(OrBox{});
  c.or_box(c.root).pred = PredRef{"$query", 0};
  auto q = new_and_box(c, c.root, goal.arity);
  c.and_box(q).frame = FrameLayout{goal.arity, 0};
  for (std::uint32_t i = 0; i < goal.arity; ++i) c.query_names.push_back("A" + std::to_string(i + 1));

  auto args = c.and_box(q).locals;
  auto o = and_try(c, prog, q, goal, args, CodeAddress{});
  s.trace.rule("and_try", c.step_count, o, q);
  enter_alternative(s, o);
  return s;
}

namespace detail {

inline TermRef& reg(MachineState& s, const Reg& r) {
  auto& box = s.config.and_box(s.thread->box);
  auto slot = box.frame.slot(r);
  if (slot >= box.locals.size()) throw std::logic_error("register slot " + std::to_string(slot) + " out of range");
  return box.locals[slot];
}

inline TermRef& arg(MachineState& s, ArgIndex a) { return reg(s, Reg{RegBank::x, a.index}); }

inline std::vector<TermRef> fresh_vars(MachineState& s, std::uint32_t n) {
  std::vector<TermRef> out;
  for (std::uint32_t i = 0; i < n; ++i) out.push_back(s.config.terms().new_var(s.thread->box));
  return out;
}

inline TermRef constant(MachineState& s, const Operand& op) {
  auto& t = s.config.terms();
  if (auto* a = std::get_if<Atom>(&op)) return t.new_atom(a->name);
  return t.new_int(std::get<Integer>(op).value);
}

// Builds f(_1,..,_n) with fresh local arguments and points the cursor at them.
inline TermRef open_structure(MachineState& s, const std::string& name, std::uint32_t arity) {
  auto args = fresh_vars(s, arity);
  s.cursor = {args, 0};
  return s.config.terms().new_struct(name, std::move(args));
}

inline TermRef cursor_arg(MachineState& s) {
  if (s.cursor.pos >= s.cursor.args.size()) throw std::logic_error("unify instruction outside a structure");
  return s.cursor.args[s.cursor.pos];
}

inline void jump(MachineState& s, CodeAddress to) { s.thread->pc = to; }
inline void next(MachineState& s) { s.thread->pc = CodeAddress{s.thread->pc.value + 1}; }

inline void collapse(MachineState& s) {
  auto head = s.config.group_head(s.thread->box);
  s.trace.rule("collapse", s.config.step_count, head);
  end_thread(s);
  prune(s.config, head);
  run_audits(s, "collapse");
}

inline void jump_or_fail(MachineState& s, const Target& t) {
  if (auto* a = std::get_if<CodeAddress>(&t)) return jump(s, *a);
  if (std::holds_alternative<FailTarget>(t)) return collapse(s);
  throw std::logic_error("unresolved label at run time");
}

// Applies one binding outcome: continue, suspend the box or collapse it.
// Returns true when the thread continues.
inline bool check(MachineState& s, BindOutcome r, bool from_unify) {
  auto box = s.thread->box;
  if (s.resuming) s.retry_outcomes.emplace_back(box, r);
  switch (r) {
    case BindOutcome::bind_ok:
      s.trace.rule("bind", s.config.step_count, box);
      run_audits(s, "bind");
      return true;
    case BindOutcome::check_ok:
      return true;
    case BindOutcome::bind_susp: {
      if (from_unify) {
        auto id = s.config.and_box(box).suspensions.back();
        auto& rec = s.config.suspensions()[id];
        rec.cursor = s.cursor.args;
        rec.cursor_pos = s.cursor.pos;
      }
      s.trace.rule("suspend", s.config.step_count, box);
      end_thread(s);
      run_audits(s, "suspend");
      return false;
    }
    case BindOutcome::check_fail:
      collapse(s);
      return false;
  }
  return false;
}

inline void unify_step(MachineState& s, TermRef a, TermRef b, bool from_unify) {
  auto r = unify(s.config, a, b, s.thread->box, s.thread->pc);
  if (!check(s, r, from_unify)) return;
  if (from_unify) ++s.cursor.pos;
  next(s);
}

inline void call(MachineState& s, const PredRef& p, bool push_return) {
  auto& c = s.config;
  auto caller = s.thread->box;
  std::vector<TermRef> args;
  for (std::uint32_t i = 0; i < p.arity; ++i) args.push_back(arg(s, ArgIndex{i}));
  CodeAddress ret{s.thread->pc.value + 1};
  auto o = and_try(c, *s.program, caller, p, args, ret);
  s.trace.rule("and_try", c.step_count, o, caller);
  if (push_return) c.and_box(c.group_head(caller)).and_continuation.push_back({ret, caller});
  run_audits(s, "and_try");
  enter_alternative(s, o);
}

inline void proceed(MachineState& s) {
  auto head = s.config.group_head(s.thread->box);
  auto& q = s.config.and_box(head).and_continuation;
  if (q.empty()) return end_thread(s);
  auto e = q.front();
  q.pop_front();
  start_thread(s, e.owner, e.resume_at);
}

// Label chosen by switch_on_term for the dereferenced first argument.
inline const Target& term_case(const MachineState& s, const WamInstruction& ins, TermRef t) {
  const auto& store = s.config.terms();
  const auto& cell = store.cell(store.deref(t));
  if (std::holds_alternative<VarCell>(cell)) return ins.as<Target>(0);
  if (std::holds_alternative<AtomCell>(cell)) return ins.as<Target>(1);
  if (std::holds_alternative<IntCell>(cell)) return ins.as<Target>(2);
  const auto& st = std::get<StructCell>(cell);
  return ins.as<Target>(st.functor == "." && st.args.size() == 2 ? 3 : 4);
}

inline void switch_table(MachineState& s, const SwitchTable& tab, TermRef t) {
  const auto& store = s.config.terms();
  const auto& cell = store.cell(store.deref(t));
  if (std::holds_alternative<VarCell>(cell)) throw std::logic_error("switch table reached with an unbound argument");
  for (const auto& c : tab.cases) {
    bool hit = std::visit(
        [&](const auto& k) {
          using K = std::decay_t<decltype(k)>;
          if constexpr (std::is_same_v<K, Atom>) {
            auto* a = std::get_if<AtomCell>(&cell);
            return a && a->name == k.name;
          } else if constexpr (std::is_same_v<K, Integer>) {
            auto* i = std::get_if<IntCell>(&cell);
            return i && i->value == k.value;
          } else {
            auto* f = std::get_if<StructCell>(&cell);
            return f && f->functor == k.name && f->args.size() == k.arity;
          }
        },
        c.key);
    if (hit) return jump_or_fail(s, c.target);
  }
  collapse(s);
}

}  // namespace detail

// Executes the instruction at the thread's pc.
inline void dispatch(MachineState& s) {
  using namespace detail;
  if (!s.thread) throw std::logic_error("dispatch without a running box");
  auto& c = s.config;
  ++c.step_count;
  const auto& ins = s.program->instruction_at(s.thread->pc);
  auto box = s.thread->box;
  auto& store = c.terms();

  switch (ins.opcode) {
    case Opcode::try_me_else:
    case Opcode::retry_me_else:
      c.or_box(c.and_box(box).parent).alt = std::get<CodeAddress>(ins.as<Target>(0));
      next(s);
      break;
    case Opcode::trust_me_else_fail:
      c.or_box(c.and_box(box).parent).alt.reset();
      next(s);
      break;
    case Opcode::try_:
    case Opcode::retry:
      c.or_box(c.and_box(box).parent).alt = CodeAddress{s.thread->pc.value + 1};
      jump(s, std::get<CodeAddress>(ins.as<Target>(0)));
      break;
    case Opcode::trust:
      c.or_box(c.and_box(box).parent).alt.reset();
      jump(s, std::get<CodeAddress>(ins.as<Target>(0)));
      break;

    case Opcode::switch_on_term:
      jump_or_fail(s, term_case(s, ins, arg(s, ArgIndex{0})));
      break;
    case Opcode::switch_on_atom:
    case Opcode::switch_on_integer:
    case Opcode::switch_on_structure:
      switch_table(s, ins.as<SwitchTable>(0), arg(s, ArgIndex{0}));
      break;

    case Opcode::allocate:
    case Opcode::deallocate:
      next(s);
      break;
    case Opcode::call:
      call(s, ins.as<PredRef>(0), true);
      break;
    case Opcode::execute:
      call(s, ins.as<PredRef>(0), false);
      break;
    case Opcode::proceed:
      proceed(s);
      break;

    case Opcode::get_variable:
      reg(s, ins.as<Reg>(0)) = arg(s, ins.as<ArgIndex>(1));
      next(s);
      break;
    case Opcode::get_value:
      unify_step(s, reg(s, ins.as<Reg>(0)), arg(s, ins.as<ArgIndex>(1)), false);
      break;
    case Opcode::get_atom:
    case Opcode::get_integer: {
      auto k = constant(s, ins.operands.at(0));
      unify_step(s, arg(s, ins.as<ArgIndex>(1)), k, false);
      break;
    }
    case Opcode::get_nil: {
      auto k = store.new_atom("[]");
      unify_step(s, arg(s, ins.as<ArgIndex>(0)), k, false);
      break;
    }
    case Opcode::get_list:
    case Opcode::get_structure: {
      bool list = ins.opcode == Opcode::get_list;
      auto t = list ? open_structure(s, ".", 2)
                    : open_structure(s, ins.as<Functor>(0).name, ins.as<Functor>(0).arity);
      auto a = arg(s, ins.as<ArgIndex>(list ? 0 : 1));
      auto saved = s.cursor;
      auto r = unify(c, a, t, box, s.thread->pc);
      if (check(s, r, false)) {
        s.cursor = saved;
        next(s);
      }
      break;
    }

    case Opcode::put_variable: {
      auto v = store.new_var(box);
      reg(s, ins.as<Reg>(0)) = v;
      arg(s, ins.as<ArgIndex>(1)) = v;
      next(s);
      break;
    }
    case Opcode::put_void:
      arg(s, ins.as<ArgIndex>(0)) = store.new_var(box);
      next(s);
      break;
    case Opcode::put_value:
    case Opcode::put_unsafe_value:
      arg(s, ins.as<ArgIndex>(1)) = reg(s, ins.as<Reg>(0));
      next(s);
      break;
    case Opcode::put_atom:
    case Opcode::put_integer: {
      auto k = constant(s, ins.operands.at(0));
      arg(s, ins.as<ArgIndex>(1)) = k;
      next(s);
      break;
    }
    case Opcode::put_nil: {
      auto k = store.new_atom("[]");
      arg(s, ins.as<ArgIndex>(0)) = k;
      next(s);
      break;
    }
    case Opcode::put_list: {
      auto t = open_structure(s, ".", 2);
      arg(s, ins.as<ArgIndex>(0)) = t;
      next(s);
      break;
    }
    case Opcode::put_structure: {
      auto t = open_structure(s, ins.as<Functor>(0).name, ins.as<Functor>(0).arity);
      arg(s, ins.as<ArgIndex>(1)) = t;
      next(s);
      break;
    }

    case Opcode::unify_variable:
      reg(s, ins.as<Reg>(0)) = cursor_arg(s);
      ++s.cursor.pos;
      next(s);
      break;
    case Opcode::unify_void:
      s.cursor.pos += ins.as<Count>(0).n;
      next(s);
      break;
    case Opcode::unify_value:
    case Opcode::unify_local_value:
      unify_step(s, cursor_arg(s), reg(s, ins.as<Reg>(0)), true);
      break;
    case Opcode::unify_atom:
    case Opcode::unify_integer: {
      auto k = constant(s, ins.operands.at(0));
      unify_step(s, cursor_arg(s), k, true);
      break;
    }
    case Opcode::unify_nil: {
      auto k = store.new_atom("[]");
      unify_step(s, cursor_arg(s), k, true);
      break;
    }
    case Opcode::label:
      throw std::logic_error("label instruction survived linking");
  }
  s.resuming = false;
}

// Alternates instruction dispatch and scheduler decisions until the answer
// quota is met, the scheduler reports exhaustion or the step budget runs out.
inline std::vector<Answer> run(MachineState& s, RunMode mode = RunMode::all_answers) {
  while (!s.exhausted) {
    if (s.config.step_count >= s.options.max_steps) {
      s.truncated = true;
      break;
    }
    if (s.thread) {
      dispatch(s);
      continue;
    }
    auto action = schedule(s);
    auto reported = s.answers.size();
    enact(s, action);
    if (mode == RunMode::first_answer && std::holds_alternative<ReportAnswer>(action) && s.answers.size() > reported)
      break;
  }
  return s.answers;
}

}  // namespace eam
