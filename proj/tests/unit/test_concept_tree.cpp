#include <algorithm>
#include <set>

#include "doctest.h"
#include "support.hpp"

using namespace treekt;
using treekt::testing::data_path;
using treekt::testing::make_tree;

namespace {

std::set<std::string> ids(const ConceptTree& tree, std::span<const NodeIndex> nodes) {
  std::set<std::string> out;
  for (NodeIndex n : nodes) out.insert(tree.id(n));
  return out;
}

std::vector<std::string> id_list(const ConceptTree& tree,
                                 std::span<const NodeIndex> nodes) {
  std::vector<std::string> out;
  for (NodeIndex n : nodes) out.push_back(tree.id(n));
  return out;
}

}  // namespace

TEST_CASE("parse a minimal tree") {
  const auto tree = parse_tree(R"({"nodes": [
    {"id": "A", "label": "Root"},
    {"id": "B", "label": "b", "parent": "A"},
    {"id": "C", "label": "c", "parent": "A"}]})");
  CHECK(tree.size() == 3);
  CHECK(tree.id(tree.root()) == "A");
  CHECK(tree.label(tree.root()) == "Root");
  const auto leaves = tree.leaves();
  CHECK(ids(tree, leaves) == std::set<std::string>{"B", "C"});
}

TEST_CASE("parent may be null and label defaults to the id") {
  const auto tree = parse_tree(R"({"nodes": [{"id": "A", "parent": null},
                                              {"id": "B", "parent": "A"}]})");
  CHECK(tree.label(tree.index_of("B")) == "B");
  CHECK(tree.is_root(tree.index_of("A")));
}

TEST_CASE("two nodes naming each other as parent form a cycle") {
  const std::vector<NodeRecord> recs{{"A", "A", "B"}, {"B", "B", "A"}};
  const auto report = validate_tree(recs);
  CHECK_FALSE(report.ok());
  CHECK(report.has(Violation::Kind::kCycle));
  CHECK_THROWS_AS(parse_tree(R"({"nodes": [{"id": "B", "parent": "A"},
                                           {"id": "A", "parent": "B"}]})"),
                  TreeError);
}

TEST_CASE("cycle below a valid root is reported") {
  const auto recs = parse_tree_records(read_file(data_path("cycle.json")));
  const auto report = validate_tree(recs);
  CHECK(report.has(Violation::Kind::kCycle));
  CHECK(report.has(Violation::Kind::kNotConnected));
}

TEST_CASE("validate_tree examples") {
  SUBCASE("single node is valid") {
    const std::vector<NodeRecord> recs{{"A", "A", std::nullopt}};
    CHECK(validate_tree(recs).ok());
  }
  SUBCASE("duplicate entries with different parents") {
    const std::vector<NodeRecord> recs{{"R", "R", std::nullopt},
                                       {"P", "P", "R"},
                                       {"C", "C", "R"},
                                       {"C", "C", "P"}};
    const auto report = validate_tree(recs);
    CHECK(report.has(Violation::Kind::kMultipleParents));
  }
  SUBCASE("identical duplicate entries") {
    const std::vector<NodeRecord> recs{{"R", "R", std::nullopt},
                                       {"C", "C", "R"},
                                       {"C", "C", "R"}};
    CHECK(validate_tree(recs).has(Violation::Kind::kDuplicateId));
  }
  SUBCASE("forest of two trees") {
    const auto recs = parse_tree_records(read_file(data_path("forest.json")));
    const auto report = validate_tree(recs);
    CHECK(report.has(Violation::Kind::kNotConnected));
    CHECK(report.has(Violation::Kind::kMultipleRoots));
  }
  SUBCASE("dangling parent") {
    const std::vector<NodeRecord> recs{{"R", "R", std::nullopt}, {"C", "C", "X"}};
    CHECK(validate_tree(recs).has(Violation::Kind::kDanglingParent));
  }
  SUBCASE("empty document") {
    CHECK(validate_tree(std::vector<NodeRecord>{}).has(Violation::Kind::kNoRoot));
  }
  SUBCASE("empty id") {
    const std::vector<NodeRecord> recs{{"", "", std::nullopt}, {"B", "B", std::nullopt}};
    CHECK(validate_tree(recs).has(Violation::Kind::kEmptyId));
  }
}

TEST_CASE("malformed documents raise ParseError") {
  CHECK_THROWS_AS(parse_tree(read_file(data_path("malformed.json"))), ParseError);
  CHECK_THROWS_AS(parse_tree(R"({"items": []})"), ParseError);
  CHECK_THROWS_AS(parse_tree(R"({"nodes": [{"label": "x"}]})"), ParseError);
  CHECK_THROWS_AS(load_tree(data_path("does_not_exist.json")), IoError);
}

TEST_CASE("module trees match their published statistics") {
  struct Row {
    const char* file;
    std::size_t nodes, depth, leaves;
  };
  const Row rows[] = {{"wine_knowledge.json", 5, 2, 4},
                      {"circuit_design.json", 9, 2, 8},
                      {"education_theory.json", 4, 2, 3}};
  for (const auto& row : rows) {
    CAPTURE(row.file);
    const auto stats = tree_stats(load_tree(data_path(row.file)));
    CHECK(stats.nodes == row.nodes);
    CHECK(stats.max_depth == row.depth);
    CHECK(stats.leaves == row.leaves);
  }
}

TEST_CASE("traversal orders") {
  SUBCASE("chain") {
    const auto tree = make_tree({{"A", ""}, {"B", "A"}, {"C", "B"}});
    const auto orders = traversal_orders(tree);
    CHECK(id_list(tree, orders.upward) == std::vector<std::string>{"C", "B", "A"});
    CHECK(id_list(tree, orders.downward) == std::vector<std::string>{"A", "B", "C"});
  }
  SUBCASE("single node") {
    const auto tree = make_tree({{"A", ""}});
    const auto orders = traversal_orders(tree);
    CHECK(id_list(tree, orders.upward) == std::vector<std::string>{"A"});
    CHECK(id_list(tree, orders.downward) == std::vector<std::string>{"A"});
  }
  SUBCASE("star starts at the root") {
    const auto tree = make_tree({{"R", ""}, {"x", "R"}, {"y", "R"}, {"z", "R"}});
    CHECK(tree.id(traversal_orders(tree).downward.front()) == "R");
  }
}

TEST_CASE("random trees: structural invariants") {
  Rng rng(11);
  for (int rep = 0; rep < 50; ++rep) {
    const std::size_t n = 1 + static_cast<std::size_t>(uniform01(rng) * 60);
    const auto tree = random_tree(n, rng);
    std::size_t edges = 0;
    for (NodeIndex c = 0; c < tree.size(); ++c) {
      if (!tree.is_root(c)) {
        ++edges;
        const auto sibs = tree.children(tree.parent(c));
        CHECK(std::find(sibs.begin(), sibs.end(), c) != sibs.end());
      }
      for (NodeIndex k : tree.children(c)) CHECK(tree.parent(k) == c);
    }
    CHECK(edges == tree.size() - 1);

    const auto orders = traversal_orders(tree);
    REQUIRE(orders.upward.size() == n);
    REQUIRE(orders.downward.size() == n);
    std::vector<std::size_t> up_pos(n), down_pos(n);
    for (std::size_t i = 0; i < n; ++i) {
      up_pos[orders.upward[i]] = i;
      down_pos[orders.downward[i]] = i;
    }
    for (NodeIndex c = 0; c < n; ++c) {
      if (tree.is_root(c)) continue;
      CHECK(up_pos[c] < up_pos[tree.parent(c)]);
      CHECK(down_pos[tree.parent(c)] < down_pos[c]);
    }

    const auto text = serialize_tree(tree);
    const auto again = parse_tree(text);
    CHECK(again == tree);
    CHECK(serialize_tree(again) == text);
  }
}

TEST_CASE("serialization round-trips the module fixtures") {
  for (const char* f : {"wine_knowledge.json", "circuit_design.json",
                        "education_theory.json"}) {
    const auto text = read_file(data_path(f));
    CHECK(serialize_tree(parse_tree(text)) == text);
  }
}

TEST_CASE("merge_sparse_leaves examples") {
  SUBCASE("sparse leaf is folded into its parent") {
    const auto tree = make_tree({{"R", ""}, {"a", "R"}, {"b", "R"}, {"c", "R"}});
    const auto result = merge_sparse_leaves(tree, {{"a", 3}, {"b", 12}, {"c", 15}}, 10);
    CHECK(result.tree.size() == 3);
    CHECK_FALSE(result.tree.find("a"));
    CHECK(result.reassigned.at("a") == "R");
    CHECK(result.counts.at("R") == 3);
  }
  SUBCASE("dense leaves leave the tree unchanged") {
    const auto tree = make_tree({{"R", ""}, {"a", "R"}, {"b", "R"}});
    const auto result = merge_sparse_leaves(tree, {{"a", 10}, {"b", 11}}, 10);
    CHECK(result.tree == tree);
    CHECK(result.reassigned.empty());
  }
  SUBCASE("remaining single child is pruned too") {
    const auto tree = make_tree({{"R", ""}, {"P", "R"}, {"x", "P"}, {"y", "P"},
                                 {"z", "R"}});
    const auto result =
        merge_sparse_leaves(tree, {{"x", 12}, {"y", 4}, {"z", 20}}, 10);
    CHECK(result.reassigned.at("x") == "P");
    CHECK(result.reassigned.at("y") == "P");
    CHECK(result.counts.at("P") == 16);
    CHECK(result.tree.is_leaf(result.tree.index_of("P")));
  }
  SUBCASE("questions follow their leaf through repeated folds") {
    const auto tree = make_tree({{"R", ""}, {"P", "R"}, {"x", "P"}, {"q", "R"}});
    const auto result = merge_sparse_leaves(tree, {{"x", 2}, {"q", 30}}, 10);
    CHECK(result.reassigned.at("x") == "R");
    CHECK(result.reassigned.at("P") == "R");
  }
}

TEST_CASE("merge_sparse_leaves is idempotent") {
  Rng rng(5);
  for (int rep = 0; rep < 100; ++rep) {
    const auto tree = random_tree(2 + static_cast<std::size_t>(uniform01(rng) * 40), rng);
    std::map<std::string, std::size_t> counts;
    for (NodeIndex leaf : tree.leaves()) {
      counts[tree.id(leaf)] = static_cast<std::size_t>(uniform01(rng) * 25);
    }
    const auto once = merge_sparse_leaves(tree, counts, 10);
    const auto twice = merge_sparse_leaves(once.tree, once.counts, 10);
    CHECK(twice.tree == once.tree);
    CHECK(twice.counts == once.counts);
    CHECK(twice.reassigned.empty());
    for (NodeIndex leaf : once.tree.leaves()) {
      if (once.tree.is_root(leaf)) continue;
      CHECK(once.counts.at(once.tree.id(leaf)) >= 10);
    }
    std::size_t before = 0, after = 0;
    for (const auto& [_, c] : counts) before += c;
    for (const auto& [_, c] : once.counts) after += c;
    CHECK(before == after);
  }
}

TEST_CASE("lookups") {
  const auto tree = make_tree({{"A", ""}, {"B", "A"}});
  CHECK(tree.find("B").has_value());
  CHECK_FALSE(tree.find("Z").has_value());
  CHECK_THROWS_AS(tree.index_of("Z"), UnknownNodeError);
  CHECK(tree.depth(tree.index_of("A")) == 1);
  CHECK(tree.depth(tree.index_of("B")) == 2);
}
