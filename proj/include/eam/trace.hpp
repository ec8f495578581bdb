#pragma once

#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "eam/ids.hpp"

namespace eam {

// One line of the rule/scheduler trace.
//   RULE <name> step=<n> box=<id> [extra=<id>]
//   SCHED <action> target=<id> step=<n>
struct TraceEvent {
  enum class Kind { rule, sched };
  Kind kind = Kind::rule;
  std::string name;
  std::optional<NodeId> box;
  std::optional<NodeId> extra;
  std::uint64_t step = 0;

  std::string line() const {
    std::string out;
    if (kind == Kind::rule) {
      out = "RULE " + name + " step=" + std::to_string(step) + " box=" + (box ? std::to_string(box->value) : "-");
      if (extra) out += " extra=" + std::to_string(extra->value);
    } else {
      out = "SCHED " + name + " target=" + (box ? std::to_string(box->value) : "-") + " step=" + std::to_string(step);
    }
    return out;
  }
};

class TraceLog {
 public:
  void record(TraceEvent e) {
    if (stream_) *stream_ << e.line() << '\n';
    if (keep_) events_.push_back(std::move(e));
  }
  void rule(std::string name, std::uint64_t step, NodeId box, std::optional<NodeId> extra = std::nullopt) {
    record({TraceEvent::Kind::rule, std::move(name), box, extra, step});
  }
  void sched(std::string name, std::uint64_t step, std::optional<NodeId> target) {
    record({TraceEvent::Kind::sched, std::move(name), target, std::nullopt, step});
  }

  void set_stream(std::ostream* os) { stream_ = os; }
  void keep_events(bool keep) { keep_ = keep; }
  const std::vector<TraceEvent>& events() const { return events_; }

 private:
  std::ostream* stream_ = nullptr;
  bool keep_ = false;
  std::vector<TraceEvent> events_;
};

}  // namespace eam
