#include <gtest/gtest.h>

#include <set>

#include "support.hpp"

using namespace eam;

namespace {

const char* kPaperListing = R"(
predicate(p/1,5,static,private,user,[
    allocate(1),
    get_variable(y(0),0),
    put_value(y(0),0),
    call(q/1),
    put_value(y(0),0),
    deallocate,
    execute(r/1)]).
)";

ParseError parse_error(const std::string& text) {
  try {
    parse_wam_text(text);
  } catch (const ParseError& e) {
    return e;
  }
  ADD_FAILURE() << "no parse error for: " << text;
  return ParseError("none", 0, 0);
}

}  // namespace

TEST(WamReader, PaperListingForP) {
  auto units = parse_wam_text(kPaperListing);
  ASSERT_EQ(units.size(), 1u);
  const auto& u = units[0];
  EXPECT_EQ(u.name, "p");
  EXPECT_EQ(u.arity, 1u);
  EXPECT_EQ(u.meta, (std::vector<std::string>{"5", "static", "private", "user"}));
  ASSERT_EQ(u.body.size(), 7u);
  std::vector<Opcode> ops;
  for (const auto& i : u.body) ops.push_back(i.opcode);
  EXPECT_EQ(ops, (std::vector<Opcode>{Opcode::allocate, Opcode::get_variable, Opcode::put_value, Opcode::call,
                                      Opcode::put_value, Opcode::deallocate, Opcode::execute}));
  EXPECT_EQ(u.body[0].as<Count>(0).n, 1u);
  EXPECT_EQ(u.body[1].as<Reg>(0), (Reg{RegBank::y, 0}));
  EXPECT_EQ(u.body[1].as<ArgIndex>(1).index, 0u);
  EXPECT_EQ(u.body[3].as<PredRef>(0), (PredRef{"q", 1}));
  EXPECT_EQ(u.body[6].as<PredRef>(0), (PredRef{"r", 1}));
}

TEST(WamReader, MinimalUnitPrintsInline) {
  auto units = parse_wam_text("predicate(f/0,0,static,private,user,[proceed]).");
  ASSERT_EQ(units.size(), 1u);
  EXPECT_EQ(print_unit(units[0]), "predicate(f/0,0,static,private,user,[proceed]).");
}

TEST(WamReader, LabelsAndSwitchTables) {
  auto units = parse_wam_text(test::read_fixture("corpus.wam"));
  const WamUnit* color = nullptr;
  for (const auto& u : units)
    if (u.name == "color") color = &u;
  ASSERT_NE(color, nullptr);
  const auto& sw = color->body[0];
  EXPECT_EQ(sw.opcode, Opcode::switch_on_term);
  EXPECT_EQ(std::get<Label>(sw.as<Target>(0)).id, 1);
  EXPECT_TRUE(std::holds_alternative<FailTarget>(sw.as<Target>(2)));
  const auto& table = color->body.back().as<SwitchTable>(0);
  ASSERT_EQ(table.cases.size(), 3u);
  EXPECT_EQ(std::get<Atom>(table.cases[1].key).name, "green");
  EXPECT_EQ(std::get<Label>(table.cases[1].target).id, 6);
}

TEST(WamReader, QuotedAtomsAndNegativeIntegers) {
  auto units = parse_wam_text(
      "predicate('odd name'/1,1,static,private,user,[get_atom('it''s',0),get_integer(-7,0),put_atom([],0),proceed]).");
  ASSERT_EQ(units.size(), 1u);
  EXPECT_EQ(units[0].name, "odd name");
  EXPECT_EQ(units[0].body[0].as<Atom>(0).name, "it's");
  EXPECT_EQ(units[0].body[1].as<Integer>(0).value, -7);
  EXPECT_EQ(units[0].body[2].as<Atom>(0).name, "[]");
  auto again = parse_wam_text(print_unit(units[0]));
  EXPECT_EQ(again[0], units[0]);
}

TEST(WamReader, CommentsAreIgnored) {
  auto units = parse_wam_text("% header\npredicate(f/0,0,static,private,user,[ % trailing\n proceed]).\n% end\n");
  ASSERT_EQ(units.size(), 1u);
  EXPECT_EQ(units[0].body.size(), 1u);
}

TEST(WamReader, UnknownOpcodeReportsPosition) {
  auto e = parse_error("predicate(f/0,0,static,private,user,[\n    frobnicate(1)]).");
  EXPECT_EQ(e.line(), 2);
  EXPECT_EQ(e.column(), 5);
  EXPECT_NE(std::string(e.what()).find("unknown opcode 'frobnicate'"), std::string::npos);
}

TEST(WamReader, OperandCountIsChecked) {
  auto e = parse_error("predicate(f/0,0,static,private,user,[get_atom(a)]).");
  EXPECT_NE(std::string(e.what()).find("takes 2 operand(s), got 1"), std::string::npos);
}

TEST(WamReader, OperandKindsAreChecked) {
  parse_error("predicate(f/1,0,static,private,user,[get_variable(z(0),0),proceed]).");
  parse_error("predicate(f/1,0,static,private,user,[get_integer(a,0),proceed]).");
  parse_error("predicate(f/1,0,static,private,user,[call(q),proceed]).");
  parse_error("predicate(f/1,0,static,private,user,[switch_on_atom([(1,2)]),proceed]).");
}

TEST(WamReader, LabelClosure) {
  auto undefined = parse_error("predicate(f/0,0,static,private,user,[try_me_else(9),proceed]).");
  EXPECT_NE(std::string(undefined.what()).find("undefined label 9"), std::string::npos);
  auto twice = parse_error("predicate(f/0,0,static,private,user,[label(1),proceed,label(1),proceed]).");
  EXPECT_NE(std::string(twice.what()).find("defined twice"), std::string::npos);
}

TEST(WamReader, HeaderShape) {
  parse_error("predicate(f/0,0,static,private,user,[]).");
  parse_error("predicate(f/0,0,weird,private,user,[proceed]).");
  parse_error("pred(f/0,0,static,private,user,[proceed]).");
  parse_error("predicate(f/0,0,static,private,user,[proceed])");
  parse_error("predicate(f/0,0,static,private,user,[proceed]).'unterminated");
}

TEST(WamReader, EmptyInputHasNoUnits) { EXPECT_TRUE(parse_wam_text("  % nothing\n").empty()); }

// parse after print is the identity on every fixture unit.
TEST(WamReader, RoundTripFixtureCorpus) {
  std::size_t units_seen = 0;
  for (const char* name : {"corpus.wam", "fig1.wam", "fails.wam", "loop.wam"}) {
    auto units = parse_wam_text(test::read_fixture(name));
    for (const auto& u : units) {
      auto printed = print_unit(u);
      auto again = parse_wam_text(printed);
      ASSERT_EQ(again.size(), 1u) << printed;
      EXPECT_EQ(again[0], u) << printed;
      EXPECT_EQ(print_unit(again[0]), printed);
      ++units_seen;
    }
  }
  EXPECT_GE(units_seen, 20u);
}

TEST(WamReader, CorpusCoversEveryOpcode) {
  std::set<Opcode> used;
  for (const auto& u : parse_wam_text(test::read_fixture("corpus.wam")))
    for (const auto& i : u.body) used.insert(i.opcode);
  for (const auto& info : opcode_table()) EXPECT_TRUE(used.count(info.opcode)) << info.name;
}
