#pragma once

// Reference semantics: depth-first, leftmost-goal SLD resolution over clauses
// recovered from the linked WAM code. Shares nothing with the machine except
// the answer text format.

#include <algorithm>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "eam/machine_state.hpp"
#include "eam/program.hpp"

namespace eam::oracle {

class DecompileError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Term in clause form. Variables are numbered within their clause.
struct Term {
  enum class Kind { var, atom, integer, compound };
  Kind kind = Kind::atom;
  std::string name;
  std::int64_t value = 0;  // integer value or variable number
  std::vector<Term> args;

  static Term var(std::int64_t n) { return {Kind::var, {}, n, {}}; }
  static Term atom(std::string s) { return {Kind::atom, std::move(s), 0, {}}; }
  static Term integer(std::int64_t v) { return {Kind::integer, {}, v, {}}; }
  static Term compound(std::string f, std::vector<Term> a) { return {Kind::compound, std::move(f), 0, std::move(a)}; }
  bool operator==(const Term&) const = default;
};

inline std::string to_string(const Term& t) {
  switch (t.kind) {
    case Term::Kind::var: return "V" + std::to_string(t.value);
    case Term::Kind::atom: return t.name;
    case Term::Kind::integer: return std::to_string(t.value);
    case Term::Kind::compound: {
      std::string out = t.name + "(";
      for (std::size_t i = 0; i < t.args.size(); ++i) out += (i ? "," : "") + to_string(t.args[i]);
      return out + ")";
    }
  }
  return "?";
}

struct Clause {
  Term head;
  std::vector<Term> body;
  std::int64_t n_vars = 0;
  bool operator==(const Clause&) const = default;
};

inline std::string to_string(const Clause& c) {
  std::string out = to_string(c.head);
  for (std::size_t i = 0; i < c.body.size(); ++i) out += (i ? ", " : " :- ") + to_string(c.body[i]);
  return out + ".";
}

namespace detail {

// Substitution over clause-local variable numbers.
class Bindings {
 public:
  std::int64_t fresh() {
    slots_.emplace_back();
    return static_cast<std::int64_t>(slots_.size()) - 1;
  }

  Term walk(Term t) const {
    while (t.kind == Term::Kind::var && slots_.at(t.value)) t = *slots_.at(t.value);
    return t;
  }

  // Fully substituted copy. A variable met again inside its own binding is
  // written as the atom `@cyclic`.
  Term resolve(const Term& t) const {
    std::vector<std::int64_t> path;
    return resolve(t, path);
  }

  // Plain unification, no occurs check. Nesting deeper than `max_depth` only
  // happens on cyclic bindings; it fails and raises `cyclic`.
  bool unify(const Term& a, const Term& b, std::size_t depth = 0) {
    if (depth > max_depth) {
      cyclic = true;
      return false;
    }
    auto x = walk(a), y = walk(b);
    if (x.kind == Term::Kind::var && y.kind == Term::Kind::var && x.value == y.value) return true;
    if (x.kind == Term::Kind::var) return bind(x.value, y);
    if (y.kind == Term::Kind::var) return bind(y.value, x);
    if (x.kind != y.kind || x.name != y.name || x.value != y.value || x.args.size() != y.args.size()) return false;
    for (std::size_t i = 0; i < x.args.size(); ++i)
      if (!unify(x.args[i], y.args[i], depth + 1)) return false;
    return true;
  }

  static constexpr std::size_t max_depth = 10'000;
  bool cyclic = false;

  std::size_t size() const { return slots_.size(); }
  void truncate(std::size_t n) { slots_.resize(n); }
  // Undo log for bindings made after a mark.
  std::size_t mark() const { return trail_.size(); }
  void undo(std::size_t m) {
    while (trail_.size() > m) {
      slots_.at(trail_.back()).reset();
      trail_.pop_back();
    }
  }

 private:
  Term resolve(Term t, std::vector<std::int64_t>& path) const {
    std::size_t entered = 0;
    while (t.kind == Term::Kind::var && slots_.at(t.value)) {
      if (std::find(path.begin(), path.end(), t.value) != path.end()) {
        path.resize(path.size() - entered);
        return Term::atom(cyclic_marker);
      }
      path.push_back(t.value);
      ++entered;
      t = *slots_.at(t.value);
    }
    for (auto& a : t.args) a = resolve(a, path);
    path.resize(path.size() - entered);
    return t;
  }

  bool bind(std::int64_t v, const Term& t) {
    slots_.at(v) = t;
    trail_.push_back(v);
    return true;
  }
  std::vector<std::optional<Term>> slots_;
  std::vector<std::int64_t> trail_;
};

// Symbolic execution of one clause's instructions.
class ClauseReader {
 public:
  ClauseReader(const Program& p, const PredRef& pred) : prog_(p), pred_(pred) {}

  std::optional<Clause> read(CodeAddress start) {
    std::vector<Term> head_args;
    for (std::uint32_t i = 0; i < pred_.arity; ++i) head_args.push_back(Term::var(b_.fresh()));
    x_.assign(head_args.begin(), head_args.end());
    bool ok = true;
    std::vector<Term> body;
    auto end = prog_.end_of(pred_);
    for (auto pc = start;; pc = CodeAddress{pc.value + 1}) {
      if (pc >= end) throw DecompileError("clause of " + pred_.name + " runs past the predicate's code");
      const auto& ins = prog_.code[pc.index()];
      switch (ins.opcode) {
        case Opcode::allocate:
        case Opcode::deallocate:
          break;
        case Opcode::try_me_else:
        case Opcode::retry_me_else:
        case Opcode::trust_me_else_fail:
          if (pc != start) throw DecompileError("choice instruction inside a clause body");
          break;
        case Opcode::get_variable: set(ins.as<Reg>(0), x(ins.as<ArgIndex>(1).index)); break;
        case Opcode::get_value: ok &= b_.unify(get(ins.as<Reg>(0)), x(ins.as<ArgIndex>(1).index)); break;
        case Opcode::get_atom: ok &= b_.unify(x(ins.as<ArgIndex>(1).index), Term::atom(ins.as<Atom>(0).name)); break;
        case Opcode::get_integer:
          ok &= b_.unify(x(ins.as<ArgIndex>(1).index), Term::integer(ins.as<Integer>(0).value));
          break;
        case Opcode::get_nil: ok &= b_.unify(x(ins.as<ArgIndex>(0).index), Term::atom("[]")); break;
        case Opcode::get_list: ok &= b_.unify(x(ins.as<ArgIndex>(0).index), open(".", 2)); break;
        case Opcode::get_structure:
          ok &= b_.unify(x(ins.as<ArgIndex>(1).index), open(ins.as<Functor>(0).name, ins.as<Functor>(0).arity));
          break;
        case Opcode::put_variable: {
          auto v = Term::var(b_.fresh());
          set(ins.as<Reg>(0), v);
          setx(ins.as<ArgIndex>(1).index, v);
          break;
        }
        case Opcode::put_void: setx(ins.as<ArgIndex>(0).index, Term::var(b_.fresh())); break;
        case Opcode::put_value:
        case Opcode::put_unsafe_value: setx(ins.as<ArgIndex>(1).index, get(ins.as<Reg>(0))); break;
        case Opcode::put_atom: setx(ins.as<ArgIndex>(1).index, Term::atom(ins.as<Atom>(0).name)); break;
        case Opcode::put_integer: setx(ins.as<ArgIndex>(1).index, Term::integer(ins.as<Integer>(0).value)); break;
        case Opcode::put_nil: setx(ins.as<ArgIndex>(0).index, Term::atom("[]")); break;
        case Opcode::put_list: setx(ins.as<ArgIndex>(0).index, open(".", 2)); break;
        case Opcode::put_structure:
          setx(ins.as<ArgIndex>(1).index, open(ins.as<Functor>(0).name, ins.as<Functor>(0).arity));
          break;
        case Opcode::unify_variable: set(ins.as<Reg>(0), cursor()); break;
        case Opcode::unify_void:
          for (std::uint32_t i = 0; i < ins.as<Count>(0).n; ++i) cursor();
          break;
        case Opcode::unify_value:
        case Opcode::unify_local_value: ok &= b_.unify(cursor(), get(ins.as<Reg>(0))); break;
        case Opcode::unify_atom: ok &= b_.unify(cursor(), Term::atom(ins.as<Atom>(0).name)); break;
        case Opcode::unify_integer: ok &= b_.unify(cursor(), Term::integer(ins.as<Integer>(0).value)); break;
        case Opcode::unify_nil: ok &= b_.unify(cursor(), Term::atom("[]")); break;
        case Opcode::call:
        case Opcode::execute: {
          const auto& p = ins.as<PredRef>(0);
          std::vector<Term> args;
          for (std::uint32_t i = 0; i < p.arity; ++i) args.push_back(x(i));
          body.push_back(goal(p.name, std::move(args)));
          if (ins.opcode == Opcode::execute) return finish(ok, head_args, body);
          break;
        }
        case Opcode::proceed:
          return finish(ok, head_args, body);
        default:
          throw DecompileError("unsupported instruction " + std::string(opcode_name(ins.opcode)) + " in clause body");
      }
    }
  }

 private:
  static Term goal(const std::string& name, std::vector<Term> args) {
    return args.empty() ? Term::atom(name) : Term::compound(name, std::move(args));
  }

  Term x(std::uint32_t i) {
    if (i >= x_.size()) throw DecompileError("argument register " + std::to_string(i) + " read before it is set");
    return x_[i];
  }
  void setx(std::uint32_t i, Term t) {
    if (i >= x_.size()) x_.resize(i + 1, Term::atom("$unset"));
    x_[i] = std::move(t);
  }
  Term get(const Reg& r) {
    if (r.bank == RegBank::x) return x(r.index);
    auto it = y_.find(r.index);
    if (it == y_.end()) throw DecompileError("permanent register read before it is set");
    return it->second;
  }
  void set(const Reg& r, Term t) {
    if (r.bank == RegBank::x) setx(r.index, std::move(t));
    else y_[r.index] = std::move(t);
  }
  Term open(const std::string& f, std::uint32_t n) {
    cursor_.clear();
    pos_ = 0;
    for (std::uint32_t i = 0; i < n; ++i) cursor_.push_back(Term::var(b_.fresh()));
    return Term::compound(f, cursor_);
  }
  Term cursor() {
    if (pos_ >= cursor_.size()) throw DecompileError("unify instruction outside a structure");
    return cursor_[pos_++];
  }

  // Applies the clause's own equations and renumbers its variables densely.
  std::optional<Clause> finish(bool ok, const std::vector<Term>& head_args, const std::vector<Term>& body) {
    if (b_.cyclic) throw DecompileError("cyclic equation in a clause of " + pred_.name);
    if (!ok) return std::nullopt;
    std::map<std::int64_t, std::int64_t> rename;
    auto renumber = [&](auto&& self, const Term& t) -> Term {
      auto r = b_.resolve(t);
      if (r.kind == Term::Kind::var) {
        auto [it, _] = rename.try_emplace(r.value, static_cast<std::int64_t>(rename.size()));
        return Term::var(it->second);
      }
      for (auto& a : r.args) a = self(self, a);
      return r;
    };
    Clause c;
    std::vector<Term> hs;
    for (const auto& h : head_args) hs.push_back(renumber(renumber, h));
    c.head = goal(pred_.name, std::move(hs));
    for (const auto& g : body) c.body.push_back(renumber(renumber, g));
    c.n_vars = static_cast<std::int64_t>(rename.size());
    return c;
  }

  const Program& prog_;
  PredRef pred_;
  Bindings b_;
  std::vector<Term> x_;
  std::map<std::uint32_t, Term> y_;
  std::vector<Term> cursor_;
  std::size_t pos_ = 0;
};

// Clause start addresses reachable from `at` through indexing and choice code.
inline void clause_starts(const Program& p, CodeAddress at, std::vector<CodeAddress>& out, int depth = 0) {
  if (depth > 1000) throw DecompileError("choice chain does not terminate");
  const auto& ins = p.instruction_at(at);
  auto target = [&](std::size_t i) -> std::optional<CodeAddress> {
    const auto& t = ins.as<Target>(i);
    if (auto* a = std::get_if<CodeAddress>(&t)) return *a;
    return std::nullopt;
  };
  CodeAddress next{at.value + 1};
  switch (ins.opcode) {
    case Opcode::switch_on_term:
      if (auto t = target(0)) clause_starts(p, *t, out, depth + 1);
      return;
    case Opcode::switch_on_atom:
    case Opcode::switch_on_integer:
    case Opcode::switch_on_structure:
      throw DecompileError("key switch reached on the variable path");
    case Opcode::try_me_else:
    case Opcode::retry_me_else:
      out.push_back(at);
      return clause_starts(p, *target(0), out, depth + 1);
    case Opcode::trust_me_else_fail:
      out.push_back(at);
      return;
    case Opcode::try_:
    case Opcode::retry:
      clause_starts(p, *target(0), out, depth + 1);
      return clause_starts(p, next, out, depth + 1);
    case Opcode::trust:
      return clause_starts(p, *target(0), out, depth + 1);
    default:
      out.push_back(at);
  }
}

}  // namespace detail

// Recovers source clauses from linked WAM code, in clause order. Clauses whose
// head equations can never hold are dropped.
inline std::vector<Clause> decompile(const Program& p) {
  std::vector<Clause> out;
  for (const auto& pred : p.order) {
    std::vector<CodeAddress> starts;
    detail::clause_starts(p, p.entries.at(pred), starts);
    for (auto s : starts)
      if (auto c = detail::ClauseReader(p, pred).read(s)) out.push_back(std::move(*c));
  }
  return out;
}

struct SolveResult {
  std::vector<std::string> answers;  // canonical text, in SLD order
  bool truncated = false;            // depth, inference or cycle limit reached
};

struct SolveLimits {
  std::size_t depth_limit = 10'000;
  std::uint64_t max_inferences = 1'000'000;
};

namespace detail {

class Solver {
 public:
  Solver(const std::vector<Clause>& cs, SolveLimits lim) : lim_(lim) {
    for (const auto& c : cs) by_key_[key(c.head)].push_back(&c);
  }

  SolveResult solve(const std::string& name, std::uint32_t arity) {
    std::vector<Term> args;
    for (std::uint32_t i = 0; i < arity; ++i) args.push_back(Term::var(b_.fresh()));
    query_ = args;
    auto g = args.empty() ? Term::atom(name) : Term::compound(name, args);
    prove({g}, 0);
    return std::move(result_);
  }

 private:
  using Goals = std::vector<Term>;

  static std::string key(const Term& t) { return t.name + "/" + std::to_string(t.args.size()); }

  Term rename(const Term& t, std::int64_t base) {
    if (t.kind == Term::Kind::var) return Term::var(base + t.value);
    Term out = t;
    for (auto& a : out.args) a = rename(a, base);
    return out;
  }

  void record_answer() {
    Answer a;
    for (std::size_t i = 0; i < query_.size(); ++i) a.bindings.emplace_back("A" + std::to_string(i + 1), snapshot(b_.resolve(query_[i])));
    result_.answers.push_back(a.canonical());
  }

  static TermValue snapshot(const Term& t) {
    TermValue v;
    switch (t.kind) {
      case Term::Kind::var: v.kind = TermValue::Kind::var; v.value = t.value; break;
      case Term::Kind::atom: v.kind = TermValue::Kind::atom; v.name = t.name; break;
      case Term::Kind::integer: v.kind = TermValue::Kind::integer; v.value = t.value; break;
      case Term::Kind::compound:
        v.kind = TermValue::Kind::structure;
        v.name = t.name;
        for (const auto& a : t.args) v.args.push_back(snapshot(a));
        break;
    }
    return v;
  }

  void prove(Goals goals, std::size_t depth) {
    if (result_.truncated) return;
    if (goals.empty()) return record_answer();
    if (depth >= lim_.depth_limit || ++inferences_ > lim_.max_inferences) {
      result_.truncated = true;
      return;
    }
    auto goal = b_.walk(goals.front());
    auto it = by_key_.find(key(goal));
    if (it == by_key_.end()) return;
    for (const Clause* c : it->second) {
      auto mark = b_.mark();
      auto size = b_.size();
      std::int64_t base = static_cast<std::int64_t>(size);
      for (std::int64_t i = 0; i < c->n_vars; ++i) b_.fresh();
      bool unified = b_.unify(goal, rename(c->head, base));
      if (b_.cyclic) result_.truncated = true;
      if (unified) {
        Goals next;
        for (const auto& g : c->body) next.push_back(rename(g, base));
        next.insert(next.end(), goals.begin() + 1, goals.end());
        prove(std::move(next), depth + 1);
      }
      b_.undo(mark);
      b_.truncate(size);
      if (result_.truncated) return;
    }
  }

  SolveLimits lim_;
  std::map<std::string, std::vector<const Clause*>> by_key_;
  Bindings b_;
  std::vector<Term> query_;
  SolveResult result_;
  std::uint64_t inferences_ = 0;
};

}  // namespace detail

// All answers of name/arity called with fresh arguments.
inline SolveResult solve(const std::vector<Clause>& clauses, const PredRef& goal, SolveLimits limits = {}) {
  return detail::Solver(clauses, limits).solve(goal.name, goal.arity);
}

}  // namespace eam::oracle
