#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "eam/boxes.hpp"
#include "eam/program.hpp"
#include "eam/trace.hpp"

namespace eam {

struct Answer {
  std::vector<std::pair<std::string, TermValue>> bindings;

  // `A1 = 2, A2 = f(_G7)`, or `yes` when the goal has no arguments.
  std::string to_string() const {
    if (bindings.empty()) return "yes";
    std::string out;
    for (std::size_t i = 0; i < bindings.size(); ++i) {
      if (i) out += ", ";
      out += bindings[i].first + " = " + eam::to_string(bindings[i].second);
    }
    return out;
  }

  // Same text with variables renumbered by first appearance.
  std::string canonical() const {
    std::vector<TermValue> terms;
    for (const auto& b : bindings) terms.push_back(b.second);
    canonicalize(terms);
    Answer a = *this;
    for (std::size_t i = 0; i < terms.size(); ++i) a.bindings[i].second = terms[i];
    return a.to_string();
  }

  bool operator==(const Answer&) const = default;
};

enum class RunMode { first_answer, all_answers };

struct MachineOptions {
  std::uint64_t max_steps = 1'000'000;
  bool dedup = true;    // drop answers equal up to variable renaming
  bool audit = false;   // run the structural auditors after every rule
};

struct Thread {
  AndId box;
  CodeAddress pc;
};

// Argument cursor set by get_structure/put_structure and consumed by unify_*.
struct StructCursor {
  std::vector<TermRef> args;
  std::uint32_t pos = 0;
};

struct MachineState {
  const Program* program = nullptr;
  Configuration config;
  std::optional<Thread> thread;
  StructCursor cursor;
  std::vector<Answer> answers;
  MachineOptions options;
  TraceLog trace;
  bool truncated = false;
  bool exhausted = false;
  std::vector<std::string> violations;  // auditor findings, empty unless options.audit

  // Set by a Resume; the next dispatched instruction is the retried binding.
  bool resuming = false;
  std::vector<std::pair<AndId, BindOutcome>> retry_outcomes;

  // Called before each scheduler decision is enacted, with the action name.
  std::function<void(const MachineState&, const char*)> observer;

  AndId current_and() const { return thread->box; }
  OrId current_or() const { return config.and_box(config.group_head(thread->box)).parent; }
  CodeAddress pc() const { return thread->pc; }
};

inline Answer extract_answer(MachineState& s, AndId solved_root_child) {
  Answer a;
  const auto& box = s.config.and_box(solved_root_child);
  for (std::size_t i = 0; i < s.config.query_names.size(); ++i)
    a.bindings.emplace_back(s.config.query_names[i], s.config.terms().snapshot(box.locals[i]));
  s.config.and_box(solved_root_child).reported = true;
  bool duplicate = false;
  if (s.options.dedup) {
    auto key = a.canonical();
    for (const auto& prev : s.answers)
      if (prev.canonical() == key) duplicate = true;
  }
  if (!duplicate) s.answers.push_back(a);
  return a;
}

}  // namespace eam
