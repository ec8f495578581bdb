#pragma once

// Structural auditors. Each returns human-readable violations; empty means OK.

#include <algorithm>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "eam/boxes.hpp"

namespace eam {

// Every edge joins an OR-box to a group head and back, parent links agree
// with child lists, and groups are duplicate-free chains sharing one head.
inline std::vector<std::string> audit_tree(const Configuration& c) {
  std::vector<std::string> out;
  auto bad = [&](const std::string& s) { out.push_back(s); };
  if (!c.is_or(c.root)) bad("root is not an OR-box");
  std::set<NodeId> seen;
  walk_tree(
      c,
      [&](AndId a) {
        if (!c.is_and(a)) {
          bad("OR-box " + std::to_string(a.value) + " is a child of an OR-box");
          return false;
        }
        const auto& box = c.and_box(a);
        if (!box.alive) bad("dead AND-box " + std::to_string(a.value) + " in tree");
        if (box.group_head != a) bad("non-head AND-box " + std::to_string(a.value) + " in tree");
        if (!seen.insert(a).second) bad("AND-box " + std::to_string(a.value) + " reachable twice");
        std::set<AndId> members;
        for (auto m : c.group_members(a)) {
          if (!members.insert(m).second) {
            bad("group " + std::to_string(a.value) + " has a cycle");
            break;
          }
          if (c.and_box(m).group_head != a) bad("member " + std::to_string(m.value) + " disagrees on head");
          if (m != a && !c.and_box(m).children.empty()) bad("member " + std::to_string(m.value) + " owns children");
          if (!c.and_box(m).alive) bad("dead member " + std::to_string(m.value));
        }
        for (auto o : box.children) {
          if (!c.is_or(o)) {
            bad("AND-box " + std::to_string(o.value) + " is a child of an AND-box");
            continue;
          }
          if (c.or_box(o).parent != a) bad("OR-box " + std::to_string(o.value) + " has wrong parent");
        }
        return true;
      },
      [&](OrId o) {
        if (!c.is_or(o)) {
          bad("AND-box " + std::to_string(o.value) + " where an OR-box belongs");
          return false;
        }
        const auto& ob = c.or_box(o);
        if (!ob.alive) bad("dead OR-box " + std::to_string(o.value) + " in tree");
        if (!seen.insert(o).second) bad("OR-box " + std::to_string(o.value) + " reachable twice");
        for (auto a : ob.children)
          if (c.is_and(a) && c.and_box(a).parent != o) bad("AND-box " + std::to_string(a.value) + " has wrong parent");
        return true;
      });
  return out;
}

// Records reachable from variables plus the wake queue must be exactly the
// records reachable from live boxes.
inline std::vector<std::string> audit_suspensions(const Configuration& c) {
  std::vector<std::string> out;
  std::multiset<SuspId> from_vars, from_boxes;
  const auto& store = c.terms();
  for (std::size_t i = 0; i < store.size(); ++i) {
    const auto* v = store.var(TermRef{i});
    if (!v) continue;
    for (auto id : v->suspensions) {
      from_vars.insert(id);
      const auto& rec = c.suspensions()[id];
      if (rec.state != SuspensionRecord::State::registered)
        out.push_back("variable " + std::to_string(i) + " holds non-registered record " + std::to_string(id.value));
      if (rec.var != TermRef{i}) out.push_back("record " + std::to_string(id.value) + " filed under the wrong variable");
      if (v->binding) out.push_back("bound variable " + std::to_string(i) + " still holds suspensions");
    }
  }
  for (auto id : c.wake_queue)
    if (c.suspensions()[id].state == SuspensionRecord::State::queued) from_vars.insert(id);
  for (std::size_t i = 0; i < c.node_count(); ++i) {
    NodeId n{i};
    if (!c.is_and(n)) continue;
    const auto& box = c.and_box(n);
    for (auto id : box.suspensions) {
      const auto& rec = c.suspensions()[id];
      if (!box.alive) out.push_back("dead box " + std::to_string(i) + " holds records");
      if (rec.suspended_box != n) out.push_back("record " + std::to_string(id.value) + " filed under the wrong box");
      if (rec.state == SuspensionRecord::State::retired)
        out.push_back("box " + std::to_string(i) + " holds retired record " + std::to_string(id.value));
      else
        from_boxes.insert(id);
    }
  }
  if (from_vars != from_boxes)
    out.push_back("suspension registry mismatch: " + std::to_string(from_vars.size()) + " on variables/queue vs " +
                  std::to_string(from_boxes.size()) + " on boxes");
  return out;
}

inline std::size_t count_live_or_boxes(const Configuration& c) {
  std::size_t n = 0;
  walk_tree(c, [](AndId) { return true; }, [&](OrId) { ++n; return true; });
  return n;
}

// Clause entry addresses of the AND-boxes under `o`.
inline std::multiset<std::uint32_t> alternative_leaves(const Configuration& c, OrId o) {
  std::multiset<std::uint32_t> out;
  for (auto a : c.or_box(o).children) out.insert(c.and_box(a).clause.value);
  return out;
}

// Shape of the subtree headed by `a` ignoring ids, with OR-box `skip`
// (and its copy) reduced to a placeholder.
inline std::string subtree_shape(const Configuration& c, AndId a, OrId skip, OrId skip_copy) {
  std::string out = "A" + std::to_string(c.and_box(a).clause.value) + "#" + std::to_string(c.group_members(a).size()) + "[";
  for (auto o : c.and_box(a).children) {
    out += "O";
    if (o == skip || o == skip_copy) {
      out += "*";
      continue;
    }
    out += "(";
    for (auto ch : c.or_box(o).children) out += subtree_shape(c, ch, skip, skip_copy);
    out += ")";
  }
  return out + "]";
}

}  // namespace eam
