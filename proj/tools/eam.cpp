// eam: run a goal of a GNU Prolog WAM listing on the AND-OR tree machine.

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <set>
#include <sstream>
#include <string>

#include "eam/machine.hpp"
#include "eam/sld_oracle.hpp"

namespace {

constexpr int exit_answers = 0;
constexpr int exit_no = 1;
constexpr int exit_usage = 2;
constexpr int exit_budget = 3;

eam::PredRef parse_goal(const std::string& text) {
  auto slash = text.rfind('/');
  if (slash == std::string::npos || slash == 0 || slash + 1 == text.size())
    throw CLI::ValidationError("--goal", "expected NAME/ARITY, got '" + text + "'");
  std::uint32_t arity = 0;
  auto digits = text.substr(slash + 1);
  if (digits.find_first_not_of("0123456789") != std::string::npos)
    throw CLI::ValidationError("--goal", "arity must be a non-negative integer, got '" + digits + "'");
  arity = static_cast<std::uint32_t>(std::stoul(digits));
  return {text.substr(0, slash), arity};
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Extended Andorra Model runner for GNU Prolog WAM listings"};
  app.require_subcommand(1);
  auto* run = app.add_subcommand("run", "Run a goal and print its answers");

  std::string file, goal_text = "main/0", dot_dir;
  bool all = false, trace = false, oracle = false;
  std::uint64_t max_steps = 1'000'000;
  run->add_option("FILE", file, "WAM listing")->required();
  run->add_option("--goal", goal_text, "Goal as NAME/ARITY")->capture_default_str();
  run->add_flag("--all", all, "Enumerate all answers");
  run->add_option("--max-steps", max_steps, "Step budget")->capture_default_str();
  run->add_flag("--trace", trace, "Write the rule and scheduler trace to stderr");
  run->add_option("--dump-dot", dot_dir, "Write one DOT file per scheduler decision into DIR");
  run->add_flag("--oracle", oracle, "Also solve with SLD resolution and report MATCH or MISMATCH");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    auto code = app.exit(e);
    return code == 0 ? 0 : exit_usage;
  }

  eam::Program prog;
  eam::PredRef goal;
  try {
    goal = parse_goal(goal_text);
    prog = eam::link(eam::parse_wam_text(read_file(file)));
  } catch (const eam::ParseError& e) {
    std::cerr << file << ":" << e.line() << ":" << e.column() << ": " << e.what() << "\n";
    return exit_usage;
  } catch (const std::exception& e) {
    std::cerr << file << ": " << e.what() << "\n";
    return exit_usage;
  }

  eam::MachineOptions options;
  options.max_steps = max_steps;
  eam::MachineState state;
  try {
    state = eam::boot(prog, goal, options);
  } catch (const eam::UnknownPredicate& e) {
    std::cerr << file << ": " << e.what() << "\n";
    return exit_usage;
  }
  if (trace) state.trace.set_stream(&std::cerr);
  std::size_t dumped = 0;
  if (!dot_dir.empty()) {
    std::filesystem::create_directories(dot_dir);
    state.observer = [&](const eam::MachineState& s, const char*) {
      std::ostringstream name;
      name << std::setw(5) << std::setfill('0') << ++dumped << ".dot";
      std::ofstream(std::filesystem::path(dot_dir) / name.str()) << eam::to_dot(s.config);
    };
  }

  std::vector<eam::Answer> answers;
  try {
    answers = eam::run(state, all ? eam::RunMode::all_answers : eam::RunMode::first_answer);
  } catch (const eam::UnknownPredicate& e) {
    std::cerr << file << ": " << e.what() << "\n";
    return exit_usage;
  }

  for (const auto& a : answers) std::cout << a.to_string() << "\n";
  if (answers.empty() && !state.truncated) std::cout << "no\n";

  if (oracle) {
    try {
      auto expected = eam::oracle::solve(eam::oracle::decompile(prog), goal);
      std::set<std::string> want(expected.answers.begin(), expected.answers.end());
      std::set<std::string> got;
      for (const auto& a : answers) got.insert(a.canonical());
      bool match = all ? got == want
                       : (got.empty() ? want.empty() : want.count(*got.begin()) > 0);
      if (expected.truncated || state.truncated) std::cerr << "ORACLE INCONCLUSIVE (budget reached)\n";
      else std::cerr << (match ? "MATCH" : "MISMATCH") << "\n";
    } catch (const eam::oracle::DecompileError& e) {
      std::cerr << "ORACLE INCONCLUSIVE (" << e.what() << ")\n";
    }
  }

  if (state.truncated) {
    std::cerr << "step budget of " << max_steps << " exhausted\n";
    return exit_budget;
  }
  return answers.empty() ? exit_no : exit_answers;
}
