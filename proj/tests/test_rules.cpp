#include <gtest/gtest.h>

#include "support.hpp"

using namespace eam;

namespace {

// Runs fig1.wam main/0 until the scheduler first asks for `Want`.
template <class Want>
std::pair<MachineState, Want> run_until(const Program& p) {
  auto s = boot(p, {"main", 0});
  for (;;) {
    if (s.thread) {
      dispatch(s);
      continue;
    }
    auto a = schedule(s);
    if (auto* w = std::get_if<Want>(&a)) return {std::move(s), *w};
    if (std::holds_alternative<Exhausted>(a)) throw std::runtime_error("exhausted first");
    enact(s, a);
  }
}

}  // namespace

TEST(Rules, AndTryOpensGoalUnderGroupHead) {
  auto p = test::load("fig1.wam");
  Configuration c;
  c.root = c.add_or(OrBox{});
  auto q = new_and_box(c, c.root, 1);
  auto o = and_try(c, p, q, {"q", 1}, c.and_box(q).locals, CodeAddress{42u});
  EXPECT_EQ(c.or_box(o).parent, q);
  EXPECT_EQ(c.or_box(o).alt, p.entries.at({"q", 1}));
  EXPECT_EQ(c.or_box(o).context.value, 42u);
  EXPECT_EQ(c.and_box(q).children, std::vector<OrId>{o});
  EXPECT_THROW(and_try(c, p, q, {"absent", 2}, {}, CodeAddress{0u}), UnknownPredicate);
}

TEST(Rules, OrTryConsumesTheAlternative) {
  auto p = test::load("fig1.wam");
  Configuration c;
  c.root = c.add_or(OrBox{});
  auto q = new_and_box(c, c.root, 1);
  auto o = and_try(c, p, q, {"q", 1}, c.and_box(q).locals, CodeAddress{0u});
  auto a = or_try(c, p, o);
  EXPECT_FALSE(c.or_box(o).alt);
  EXPECT_EQ(c.and_box(a).clause, p.entries.at({"q", 1}));
  EXPECT_EQ(c.and_box(a).locals.size(), p.frames.at({"q", 1}).size());
  EXPECT_THROW(or_try(c, p, o), std::logic_error);
}

TEST(Rules, SplitConservesAlternativesAndCopiesShape) {
  auto p = test::load("fig1.wam");
  auto [s, split] = run_until<Split>(p);
  auto& c = s.config;
  auto o = split.target;
  auto parent = *c.or_box(o).parent;
  auto grand = c.and_box(parent).parent;
  auto before = alternative_leaves(c, o);
  auto shape = subtree_shape(c, parent, o, o);
  auto grand_kids = c.or_box(grand).children.size();
  auto first = c.or_box(o).children.front();

  auto copy = or_split(c, o);
  EXPECT_EQ(c.or_box(o).children, std::vector<AndId>{first});
  EXPECT_EQ(c.or_box(copy).children.size(), before.size() - 1);
  auto after = alternative_leaves(c, o);
  for (auto x : alternative_leaves(c, copy)) after.insert(x);
  EXPECT_EQ(after, before);
  EXPECT_EQ(c.or_box(grand).children.size(), grand_kids + 1);
  auto copy_parent = *c.or_box(copy).parent;
  EXPECT_EQ(c.or_box(grand).children.back(), copy_parent);
  EXPECT_EQ(subtree_shape(c, copy_parent, o, copy), shape);
  EXPECT_TRUE(audit_tree(c).empty());
  EXPECT_TRUE(audit_suspensions(c).empty());
}

TEST(Rules, SplitRenamesInsideVariablesAndSharesOutsideOnes) {
  auto p = test::load("fig1.wam");
  auto [s, split] = run_until<Split>(p);
  auto& c = s.config;
  auto parent = *c.or_box(split.target).parent;
  auto copy = or_split(c, split.target);
  auto copy_parent = *c.or_box(copy).parent;
  // p's clause variable is homed in its box: renamed in the copy
  auto y0 = c.and_box(parent).locals[1];
  auto y0_copy = c.and_box(copy_parent).locals[1];
  EXPECT_NE(y0, y0_copy);
  // both still dereference to main's X, which lives outside the copied group
  EXPECT_EQ(c.terms().deref(y0), c.terms().deref(y0_copy));
  auto x = c.terms().deref(y0);
  auto main_box = *c.or_box(c.and_box(parent).parent).parent;
  EXPECT_EQ(c.terms().var(x)->home, main_box);
  // suspensions on X now come from both copies
  EXPECT_EQ(c.terms().var(x)->suspensions.size(), 4u + 2u);
}

TEST(Rules, PromoteMergesIntoParentGroup) {
  auto p = test::load("fig1.wam");
  auto [s, split] = run_until<Split>(p);
  enact(s, split);
  auto promote_action = schedule(s);
  ASSERT_TRUE(std::holds_alternative<Promote>(promote_action));
  auto& c = s.config;
  auto o = std::get<Promote>(promote_action).target;
  auto head = *c.or_box(o).parent;
  auto child = c.or_box(o).children[0];
  auto ors = count_live_or_boxes(c);
  auto promoted = promote(c, o);
  EXPECT_EQ(promoted, child);
  EXPECT_EQ(c.group_head(child), head);
  EXPECT_EQ(c.group_members(head).back(), child);
  EXPECT_FALSE(c.or_box(o).alive);
  EXPECT_EQ(count_live_or_boxes(c), ors - 1);
  EXPECT_EQ(std::count(c.and_box(head).children.begin(), c.and_box(head).children.end(), o), 0);
  EXPECT_TRUE(audit_tree(c).empty());
  // the promoted box's own cells are now local to the head's group
  auto own = c.terms().new_var(child);
  EXPECT_TRUE(is_local(c, own, head));
}

TEST(Rules, PromoteRejectsBoxesWithAlternatives) {
  auto p = test::load("fig1.wam");
  auto [s, split] = run_until<Split>(p);
  EXPECT_THROW(promote(s.config, split.target), std::logic_error);
  EXPECT_FALSE(can_promote(s.config, split.target));
  EXPECT_TRUE(can_split(s.config, split.target));
}
