#ifndef TREEKT_TESTS_SUPPORT_HPP
#define TREEKT_TESTS_SUPPORT_HPP

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "treekt/treekt.hpp"

namespace treekt::testing {

inline std::filesystem::path data_path(const std::string& name) {
  return std::filesystem::path(TREEKT_TEST_DATA_DIR) / name;
}

// Tree from (id, parent) pairs; an empty parent marks the root.
inline ConceptTree make_tree(
    const std::vector<std::pair<std::string, std::string>>& edges) {
  std::vector<NodeRecord> records;
  for (const auto& [id, parent] : edges) {
    records.push_back({id, id, parent.empty() ? std::nullopt
                                              : std::optional<std::string>(parent)});
  }
  return ConceptTree::from_records(std::move(records));
}

inline ConceptTree single_node() { return make_tree({{"A", ""}}); }
inline ConceptTree chain_ab() { return make_tree({{"A", ""}, {"B", "A"}}); }

inline Interaction answer(const ConceptTree& tree, const std::string& kc,
                          Difficulty d, bool correct, const std::string& qid = "q") {
  return {qid, tree.index_of(kc), d, correct};
}

}  // namespace treekt::testing

#endif  // TREEKT_TESTS_SUPPORT_HPP
