#include <gtest/gtest.h>

#include <sstream>

#include "support.hpp"

using namespace eam;
using test::run_fuzz_case;

namespace {

constexpr std::uint32_t kPrograms = 500;

}  // namespace

TEST(Properties, GeneratedProgramsRoundTripThroughText) {
  for (std::uint32_t seed = 0; seed < 50; ++seed) {
    auto units = test::Assembler().assemble(test::ProgramGenerator(seed).generate());
    auto text = test::listing(units);
    EXPECT_EQ(test::listing(parse_wam_text(text)), text) << "seed " << seed;
  }
}

TEST(Properties, AnswersMatchSldOnRandomPrograms) {
  std::size_t skipped = 0;
  for (std::uint32_t seed = 0; seed < kPrograms; ++seed) {
    auto fc = run_fuzz_case(seed);
    skipped += fc.skipped;
    ASSERT_TRUE(fc.agree) << "seed " << seed << "\n" << fc.source;
    ASSERT_TRUE(fc.violations.empty()) << "seed " << seed << ": " << fc.violations.front() << "\n" << fc.source;
  }
  EXPECT_LT(skipped, kPrograms / 10);
}

TEST(Properties, PromoteNeverLosesToSplit) {
  // Promote outranks Split, so no trace may show a split whose target could
  // have been promoted; the auditor records any such decision.
  for (std::uint32_t seed = 0; seed < 100; ++seed) {
    auto fc = run_fuzz_case(seed);
    for (const auto& v : fc.violations) EXPECT_EQ(v.find("split chosen"), std::string::npos) << "seed " << seed;
    for (std::size_t i = 0; i + 1 < fc.events.size(); ++i) {
      const auto& e = fc.events[i];
      if (e.kind == TraceEvent::Kind::sched && e.name == "split") {
        ASSERT_EQ(fc.events[i + 1].kind, TraceEvent::Kind::rule);
        EXPECT_EQ(fc.events[i + 1].name, "split") << "seed " << seed;
      }
    }
  }
}

TEST(Properties, RunsAreDeterministic) {
  for (std::uint32_t seed = 0; seed < 50; ++seed) {
    auto gen = test::ProgramGenerator(seed).generate();
    auto prog = link(parse_wam_text(test::listing(test::Assembler().assemble(gen))));
    auto once = [&] {
      std::ostringstream out;
      auto s = boot(prog, gen.goal());
      s.trace.set_stream(&out);
      for (const auto& a : run(s)) out << a.to_string() << '\n';
      return out.str();
    };
    EXPECT_EQ(once(), once()) << "seed " << seed;
  }
}

TEST(Properties, LargerBudgetsOnlyAddAnswers) {
  for (std::uint32_t seed = 0; seed < 50; ++seed) {
    auto gen = test::ProgramGenerator(seed).generate();
    auto prog = link(parse_wam_text(test::listing(test::Assembler().assemble(gen))));
    std::vector<std::string> previous;
    for (std::uint64_t budget : {20u, 80u, 320u, 5000u}) {
      MachineOptions o;
      o.max_steps = budget;
      o.dedup = false;
      auto got = test::canonical(test::run_goal(prog, gen.goal(), o).answers);
      ASSERT_GE(got.size(), previous.size()) << "seed " << seed;
      EXPECT_TRUE(std::equal(previous.begin(), previous.end(), got.begin())) << "seed " << seed;
      previous = got;
    }
  }
}

TEST(Properties, RandomProgramsRunQuickly) {
  double worst = 0;
  for (std::uint32_t seed = 0; seed < kPrograms; ++seed) {
    auto fc = run_fuzz_case(seed, false, 3);
    if (!fc.skipped) worst = std::max(worst, fc.millis);
  }
  EXPECT_LT(worst, 100.0);
}
