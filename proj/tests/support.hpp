#pragma once

// Shared test helpers: fixture loading, running goals, and a random generator
// of small pure programs assembled straight to WAM units.

#include <algorithm>
#include <chrono>
#include <fstream>
#include <limits>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "eam/machine.hpp"
#include "eam/sld_oracle.hpp"

namespace eam::test {

inline std::string fixture_path(const std::string& name) { return std::string(EAM_FIXTURES) + "/" + name; }

inline std::string read_fixture(const std::string& name) {
  std::ifstream in(fixture_path(name), std::ios::binary);
  if (!in) throw std::runtime_error("missing fixture " + name);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline Program load(const std::string& name) { return link(parse_wam_text(read_fixture(name))); }

inline std::vector<std::string> canonical(const std::vector<Answer>& answers) {
  std::vector<std::string> out;
  for (const auto& a : answers) out.push_back(a.canonical());
  return out;
}

inline std::vector<std::string> sorted(std::vector<std::string> v) {
  std::sort(v.begin(), v.end());
  return v;
}

// Runs `goal` to exhaustion with trace events kept.
inline MachineState run_goal(const Program& p, const PredRef& goal, MachineOptions opts = {}) {
  auto s = boot(p, goal, opts);
  s.trace.keep_events(true);
  run(s, RunMode::all_answers);
  return s;
}

// ---------------------------------------------------------------------------
// Random pure programs.

struct GenTerm {
  enum class Kind { var, integer, atom, structure } kind = Kind::integer;
  std::int64_t value = 0;  // variable number or integer
  std::string name;
  std::vector<GenTerm> args;  // atomic or variables only
};

struct GenGoal {
  std::size_t pred = 0;
  std::vector<GenTerm> args;
};

struct GenClause {
  std::vector<GenTerm> head;
  std::vector<GenGoal> body;
};

struct GenPredicate {
  std::string name;
  std::uint32_t arity = 0;
  std::vector<GenClause> clauses;
};

struct GenProgram {
  std::vector<GenPredicate> preds;
  PredRef goal() const { return {preds[0].name, preds[0].arity}; }
};

class ProgramGenerator {
 public:
  explicit ProgramGenerator(std::uint32_t seed) : rng_(seed) {}

  // Up to 3 predicates; predicate i only calls predicates j > i, so every
  // SLD tree is finite.
  GenProgram generate() {
    GenProgram g;
    auto n_preds = pick(1, 3);
    for (int i = 0; i < n_preds; ++i) g.preds.push_back({"p" + std::to_string(i), static_cast<std::uint32_t>(pick(i == 0 ? 1 : 0, 2)), {}});
    for (int i = 0; i < n_preds; ++i) {
      auto n_clauses = pick(1, 4);
      for (int k = 0; k < n_clauses; ++k) g.preds[i].clauses.push_back(clause(g, i));
    }
    return g;
  }

 private:
  int pick(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng_); }

  GenTerm atomic(int n_vars) {
    auto r = pick(0, 9);
    if (n_vars > 0 && r < 4) return {GenTerm::Kind::var, pick(0, n_vars - 1), {}, {}};
    if (r < 8) return {GenTerm::Kind::integer, pick(1, 5), {}, {}};
    return {GenTerm::Kind::atom, 0, pick(0, 1) ? "a" : "b", {}};
  }

  GenTerm term(int n_vars) {
    if (pick(0, 9) == 0) {
      GenTerm s{GenTerm::Kind::structure, 0, pick(0, 1) ? "f" : "g", {}};
      auto n = pick(1, 2);
      for (int i = 0; i < n; ++i) s.args.push_back(atomic(n_vars));
      return s;
    }
    return atomic(n_vars);
  }

  GenClause clause(const GenProgram& g, int self) {
    GenClause c;
    auto n_vars = pick(0, 2);
    for (std::uint32_t i = 0; i < g.preds[self].arity; ++i) c.head.push_back(term(n_vars));
    auto callable = static_cast<int>(g.preds.size()) - self - 1;
    auto n_goals = callable > 0 ? pick(0, 2) : 0;
    for (int k = 0; k < n_goals; ++k) {
      GenGoal goal;
      goal.pred = static_cast<std::size_t>(pick(self + 1, static_cast<int>(g.preds.size()) - 1));
      for (std::uint32_t i = 0; i < g.preds[goal.pred].arity; ++i) goal.args.push_back(term(n_vars));
      c.body.push_back(goal);
    }
    return c;
  }

  std::mt19937 rng_;
};

inline std::string to_source(const GenTerm& t) {
  switch (t.kind) {
    case GenTerm::Kind::var: return "V" + std::to_string(t.value);
    case GenTerm::Kind::integer: return std::to_string(t.value);
    case GenTerm::Kind::atom: return t.name;
    case GenTerm::Kind::structure: {
      std::string out = t.name + "(";
      for (std::size_t i = 0; i < t.args.size(); ++i) out += (i ? "," : "") + to_source(t.args[i]);
      return out + ")";
    }
  }
  return "?";
}

// Prolog text of a generated program, for failure messages.
inline std::string to_source(const GenProgram& g) {
  std::string out;
  auto call = [&](const std::string& name, const std::vector<GenTerm>& args) {
    std::string s = name;
    if (!args.empty()) {
      s += "(";
      for (std::size_t i = 0; i < args.size(); ++i) s += (i ? "," : "") + to_source(args[i]);
      s += ")";
    }
    return s;
  };
  for (const auto& p : g.preds)
    for (const auto& c : p.clauses) {
      out += call(p.name, c.head);
      for (std::size_t i = 0; i < c.body.size(); ++i)
        out += (i ? ", " : " :- ") + call(g.preds[c.body[i].pred].name, c.body[i].args);
      out += ".\n";
    }
  return out;
}

// Compiles clause variables to permanent registers y(V) and chains clauses
// with try_me_else / retry_me_else / trust_me_else_fail.
class Assembler {
 public:
  std::vector<WamUnit> assemble(const GenProgram& g) {
    std::vector<WamUnit> units;
    int line = 1;
    for (const auto& p : g.preds) {
      WamUnit u{p.name, p.arity, {std::to_string(line++), "static", "private", "user"}, {}};
      auto n = p.clauses.size();
      for (std::size_t k = 0; k < n; ++k) {
        if (k > 0) u.body.push_back({Opcode::label, {Target{Label{static_cast<std::int64_t>(k)}}}});
        if (n > 1) {
          Target next = Label{static_cast<std::int64_t>(k + 1)};
          if (k == 0) u.body.push_back({Opcode::try_me_else, {next}});
          else if (k + 1 < n) u.body.push_back({Opcode::retry_me_else, {next}});
          else u.body.push_back({Opcode::trust_me_else_fail, {}});
        }
        clause(g, p.clauses[k], u.body);
      }
      units.push_back(std::move(u));
    }
    return units;
  }

 private:
  using Code = std::vector<WamInstruction>;

  static Reg y(std::int64_t v) { return Reg{RegBank::y, static_cast<std::uint32_t>(v)}; }
  static ArgIndex x(std::size_t i) { return ArgIndex{static_cast<std::uint32_t>(i)}; }

  void clause(const GenProgram& g, const GenClause& c, Code& out) {
    seen_.clear();
    std::int64_t n_vars = 0;
    auto count = [&](auto&& self, const GenTerm& t) -> void {
      if (t.kind == GenTerm::Kind::var) n_vars = std::max(n_vars, t.value + 1);
      for (const auto& a : t.args) self(self, a);
    };
    for (const auto& t : c.head) count(count, t);
    for (const auto& goal : c.body)
      for (const auto& t : goal.args) count(count, t);
    if (n_vars > 0) out.push_back({Opcode::allocate, {Count{static_cast<std::uint32_t>(n_vars)}}});

    for (std::size_t i = 0; i < c.head.size(); ++i) get(c.head[i], i, out);
    for (std::size_t k = 0; k < c.body.size(); ++k) {
      const auto& goal = c.body[k];
      for (std::size_t i = 0; i < goal.args.size(); ++i) put(goal.args[i], i, out);
      PredRef callee{g.preds[goal.pred].name, g.preds[goal.pred].arity};
      bool last = k + 1 == c.body.size();
      if (last && n_vars > 0) out.push_back({Opcode::deallocate, {}});
      out.push_back({last ? Opcode::execute : Opcode::call, {callee}});
    }
    if (c.body.empty()) {
      if (n_vars > 0) out.push_back({Opcode::deallocate, {}});
      out.push_back({Opcode::proceed, {}});
    }
  }

  bool first(std::int64_t v) { return seen_.insert(v).second; }

  void get(const GenTerm& t, std::size_t i, Code& out) {
    switch (t.kind) {
      case GenTerm::Kind::var:
        out.push_back({first(t.value) ? Opcode::get_variable : Opcode::get_value, {y(t.value), x(i)}});
        break;
      case GenTerm::Kind::integer: out.push_back({Opcode::get_integer, {Integer{t.value}, x(i)}}); break;
      case GenTerm::Kind::atom: out.push_back({Opcode::get_atom, {Atom{t.name}, x(i)}}); break;
      case GenTerm::Kind::structure:
        out.push_back({Opcode::get_structure, {Functor{t.name, static_cast<std::uint32_t>(t.args.size())}, x(i)}});
        for (const auto& a : t.args) sub(a, out);
        break;
    }
  }

  void put(const GenTerm& t, std::size_t i, Code& out) {
    switch (t.kind) {
      case GenTerm::Kind::var:
        out.push_back({first(t.value) ? Opcode::put_variable : Opcode::put_value, {y(t.value), x(i)}});
        break;
      case GenTerm::Kind::integer: out.push_back({Opcode::put_integer, {Integer{t.value}, x(i)}}); break;
      case GenTerm::Kind::atom: out.push_back({Opcode::put_atom, {Atom{t.name}, x(i)}}); break;
      case GenTerm::Kind::structure:
        out.push_back({Opcode::put_structure, {Functor{t.name, static_cast<std::uint32_t>(t.args.size())}, x(i)}});
        for (const auto& a : t.args) sub(a, out);
        break;
    }
  }

  void sub(const GenTerm& t, Code& out) {
    switch (t.kind) {
      case GenTerm::Kind::var:
        out.push_back({first(t.value) ? Opcode::unify_variable : Opcode::unify_value, {y(t.value)}});
        break;
      case GenTerm::Kind::integer: out.push_back({Opcode::unify_integer, {Integer{t.value}}}); break;
      case GenTerm::Kind::atom: out.push_back({Opcode::unify_atom, {Atom{t.name}}}); break;
      case GenTerm::Kind::structure: throw std::logic_error("nested structures are not generated");
    }
  }

  std::set<std::int64_t> seen_;
};

// Text of the assembled units, as a WAM listing.
inline std::string listing(const std::vector<WamUnit>& units) {
  std::string out;
  for (const auto& u : units) out += print_unit(u) + "\n";
  return out;
}

// Outcome of one generated program under both engines.
struct FuzzCase {
  std::uint32_t seed = 0;
  std::string source;
  bool skipped = false;  // an engine hit its budget
  bool agree = false;
  std::vector<std::string> eam;
  std::vector<std::string> sld;
  std::vector<std::string> violations;
  std::vector<TraceEvent> events;
  double millis = 0;
};

inline FuzzCase run_fuzz_case(std::uint32_t seed, bool audit = true, int timing_runs = 1, std::uint64_t max_steps = 200'000) {
  FuzzCase fc;
  fc.seed = seed;
  auto gen = ProgramGenerator(seed).generate();
  fc.source = to_source(gen);
  auto prog = link(parse_wam_text(listing(Assembler().assemble(gen))));

  auto expected = oracle::solve(oracle::decompile(prog), gen.goal());
  fc.sld = sorted(expected.answers);

  MachineOptions opts;
  opts.audit = audit;
  opts.dedup = false;
  opts.max_steps = max_steps;
  // best of `timing_runs` so a preempted run does not count against the engine
  MachineState s;
  fc.millis = std::numeric_limits<double>::infinity();
  for (int i = 0; i < std::max(timing_runs, 1); ++i) {
    auto start = std::chrono::steady_clock::now();
    s = run_goal(prog, gen.goal(), opts);
    fc.millis = std::min(fc.millis, std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count());
  }
  fc.eam = sorted(canonical(s.answers));
  fc.violations = s.violations;
  fc.events = s.trace.events();
  auto cyclic = [](const std::vector<std::string>& v) {
    return std::any_of(v.begin(), v.end(), [](const std::string& a) { return a.find(cyclic_marker) != std::string::npos; });
  };
  fc.skipped = expected.truncated || s.truncated || cyclic(fc.eam) || cyclic(fc.sld);
  fc.agree = fc.skipped || fc.eam == fc.sld;
  return fc;
}

}  // namespace eam::test
