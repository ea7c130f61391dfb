#ifndef TREEKT_CONCEPT_TREE_HPP
#define TREEKT_CONCEPT_TREE_HPP

#include <cstddef>
#include <filesystem>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "treekt/errors.hpp"

namespace treekt {

using NodeIndex = std::size_t;
inline constexpr NodeIndex kNoParent = std::numeric_limits<NodeIndex>::max();

// One entry of the flat node list in a tree document. The root has no parent.
struct NodeRecord {
  std::string id;
  std::string label;
  std::optional<std::string> parent;

  friend bool operator==(const NodeRecord&, const NodeRecord&) = default;
};

struct Violation {
  enum class Kind {
    kEmptyId,
    kDuplicateId,
    kMultipleParents,
    kDanglingParent,
    kNoRoot,
    kMultipleRoots,
    kCycle,
    kNotConnected,
  };

  Kind kind;
  std::string node;
  std::string message;
};

std::string_view to_string(Violation::Kind kind);

struct ValidationReport {
  std::vector<Violation> violations;

  bool ok() const noexcept { return violations.empty(); }
  bool has(Violation::Kind kind) const noexcept;
  std::string to_string() const;
};

// Checks the rooted-tree invariants on a raw node list. Violations are
// collected, never thrown.
ValidationReport validate_tree(std::span<const NodeRecord> records);

class TreeError : public Error {
 public:
  explicit TreeError(ValidationReport report);

  const ValidationReport& report() const noexcept { return report_; }

 private:
  ValidationReport report_;
};

// Immutable knowledge-concept hierarchy. Nodes are indexed densely in the
// order they appear in the source document; children keep that order.
class ConceptTree {
 public:
  // Throws TreeError when the records do not form a single rooted tree.
  static ConceptTree from_records(std::vector<NodeRecord> records);

  std::size_t size() const noexcept { return ids_.size(); }
  NodeIndex root() const noexcept { return root_; }

  const std::string& id(NodeIndex node) const { return ids_.at(node); }
  const std::string& label(NodeIndex node) const { return labels_.at(node); }
  NodeIndex parent(NodeIndex node) const { return parents_.at(node); }
  bool is_root(NodeIndex node) const { return node == root_; }
  std::span<const NodeIndex> children(NodeIndex node) const {
    return children_.at(node);
  }
  bool is_leaf(NodeIndex node) const { return children_.at(node).empty(); }
  std::size_t depth(NodeIndex node) const { return depths_.at(node); }

  std::optional<NodeIndex> find(std::string_view id) const;
  // Throws UnknownNodeError.
  NodeIndex index_of(std::string_view id) const;

  // Every node appears after all of its children.
  std::span<const NodeIndex> upward_order() const noexcept { return upward_; }
  // Every node appears after its parent; starts at the root.
  std::span<const NodeIndex> downward_order() const noexcept {
    return downward_;
  }

  std::vector<NodeIndex> leaves() const;
  std::vector<NodeRecord> records() const;

  friend bool operator==(const ConceptTree& a, const ConceptTree& b) {
    return a.records() == b.records();
  }

 private:
  ConceptTree() = default;

  std::vector<std::string> ids_;
  std::vector<std::string> labels_;
  std::vector<NodeIndex> parents_;
  std::vector<std::vector<NodeIndex>> children_;
  std::vector<std::size_t> depths_;
  std::vector<NodeIndex> upward_;
  std::vector<NodeIndex> downward_;
  std::unordered_map<std::string, NodeIndex> index_;
  NodeIndex root_ = kNoParent;
};

struct TraversalOrders {
  std::vector<NodeIndex> upward;
  std::vector<NodeIndex> downward;
};

TraversalOrders traversal_orders(const ConceptTree& tree);

// Depth counts levels, so a lone root has depth 1.
struct TreeStats {
  std::size_t nodes = 0;
  std::size_t max_depth = 0;
  std::size_t leaves = 0;
};

TreeStats tree_stats(const ConceptTree& tree);

// Tree document: {"nodes": [{"id": ..., "label": ..., "parent": ...}, ...]}.
// Malformed JSON or missing fields throw ParseError; structural problems
// throw TreeError carrying the full report.
std::vector<NodeRecord> parse_tree_records(std::string_view document);
ConceptTree parse_tree(std::string_view document);
std::string serialize_tree(const ConceptTree& tree);

ConceptTree load_tree(const std::filesystem::path& path);
void save_tree(const ConceptTree& tree, const std::filesystem::path& path);

struct MergeResult {
  ConceptTree tree;
  // Removed leaf id -> id of the node that now hosts its questions.
  std::map<std::string, std::string> reassigned;
  // Question count per node of the merged tree.
  std::map<std::string, std::size_t> counts;
};

inline constexpr std::size_t kDefaultMinQuestionsPerLeaf = 10;

// Folds leaves with fewer than `min_count` questions into their parent. When
// a merge leaves a parent with a single leaf child, that child is folded in
// as well. Nodes absent from `question_counts` count as zero.
MergeResult merge_sparse_leaves(
    const ConceptTree& tree,
    const std::map<std::string, std::size_t>& question_counts,
    std::size_t min_count = kDefaultMinQuestionsPerLeaf);

// Small shared helper: read a whole file, throwing IoError on failure.
std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view contents);

}  // namespace treekt

#endif  // TREEKT_CONCEPT_TREE_HPP
