#include "treekt/concept_tree.hpp"

#include <algorithm>
#include <deque>
#include <fstream>
#include <set>
#include <sstream>
#include <unordered_set>

#include "json.hpp"

namespace treekt {

namespace {

using ordered_json = nlohmann::ordered_json;

void add(ValidationReport& report, Violation::Kind kind, std::string node,
         std::string message) {
  report.violations.push_back({kind, std::move(node), std::move(message)});
}

}  // namespace

std::string_view to_string(Violation::Kind kind) {
  switch (kind) {
    case Violation::Kind::kEmptyId: return "empty id";
    case Violation::Kind::kDuplicateId: return "duplicate id";
    case Violation::Kind::kMultipleParents: return "multiple parents";
    case Violation::Kind::kDanglingParent: return "dangling parent";
    case Violation::Kind::kNoRoot: return "no root";
    case Violation::Kind::kMultipleRoots: return "multiple roots";
    case Violation::Kind::kCycle: return "cycle";
    case Violation::Kind::kNotConnected: return "not connected";
  }
  return "unknown";
}

bool ValidationReport::has(Violation::Kind kind) const noexcept {
  return std::any_of(violations.begin(), violations.end(),
                     [kind](const Violation& v) { return v.kind == kind; });
}

std::string ValidationReport::to_string() const {
  std::ostringstream out;
  for (const auto& v : violations) {
    out << treekt::to_string(v.kind);
    if (!v.node.empty()) out << " [" << v.node << "]";
    if (!v.message.empty()) out << ": " << v.message;
    out << '\n';
  }
  return out.str();
}

TreeError::TreeError(ValidationReport report)
    : Error("invalid concept tree:\n" + report.to_string()),
      report_(std::move(report)) {}

ValidationReport validate_tree(std::span<const NodeRecord> records) {
  ValidationReport report;

  // First occurrence of each id defines the node; later ones are reported.
  std::unordered_map<std::string, std::size_t> first;
  std::vector<std::size_t> unique;
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto& rec = records[i];
    if (rec.id.empty()) {
      add(report, Violation::Kind::kEmptyId, "",
          "record " + std::to_string(i) + " has an empty id");
      continue;
    }
    auto [it, inserted] = first.emplace(rec.id, i);
    if (inserted) {
      unique.push_back(i);
      continue;
    }
    const auto& prev = records[it->second];
    if (prev.parent != rec.parent) {
      add(report, Violation::Kind::kMultipleParents, rec.id,
          "listed under '" + prev.parent.value_or("<none>") + "' and '" +
              rec.parent.value_or("<none>") + "'");
    } else {
      add(report, Violation::Kind::kDuplicateId, rec.id, "listed twice");
    }
  }

  std::vector<std::string> roots;
  for (std::size_t i : unique) {
    const auto& rec = records[i];
    if (!rec.parent) {
      roots.push_back(rec.id);
    } else if (!first.contains(*rec.parent)) {
      add(report, Violation::Kind::kDanglingParent, rec.id,
          "parent '" + *rec.parent + "' does not exist");
    }
  }

  if (unique.empty() && records.empty()) {
    add(report, Violation::Kind::kNoRoot, "", "document has no nodes");
    return report;
  }
  if (roots.empty()) {
    add(report, Violation::Kind::kNoRoot, "", "every node has a parent");
  } else if (roots.size() > 1) {
    std::string list;
    for (const auto& r : roots) list += (list.empty() ? "" : ", ") + r;
    add(report, Violation::Kind::kMultipleRoots, "", list);
    add(report, Violation::Kind::kNotConnected, "",
        "nodes form " + std::to_string(roots.size()) + " separate trees");
  }

  // Walk parent chains; 0 = unvisited, 1 = on current path, 2 = resolved.
  std::unordered_map<std::string, int> state;
  std::unordered_map<std::string, bool> reaches_root;
  for (std::size_t i : unique) {
    std::vector<std::string> path;
    std::string cur = records[i].id;
    bool rooted = false;
    while (true) {
      auto st = state[cur];
      if (st == 2) {
        rooted = reaches_root[cur];
        break;
      }
      if (st == 1) {
        add(report, Violation::Kind::kCycle, cur,
            "parent chain returns to '" + cur + "'");
        rooted = false;
        break;
      }
      state[cur] = 1;
      path.push_back(cur);
      const auto& rec = records[first.at(cur)];
      if (!rec.parent) {
        rooted = true;
        break;
      }
      if (!first.contains(*rec.parent)) {
        rooted = false;
        break;
      }
      cur = *rec.parent;
    }
    for (const auto& n : path) {
      state[n] = 2;
      reaches_root[n] = rooted;
    }
  }
  if (roots.size() == 1) {
    for (std::size_t i : unique) {
      if (!reaches_root[records[i].id]) {
        add(report, Violation::Kind::kNotConnected, records[i].id,
            "not reachable from root '" + roots.front() + "'");
      }
    }
  }
  return report;
}

ConceptTree ConceptTree::from_records(std::vector<NodeRecord> records) {
  auto report = validate_tree(records);
  if (!report.ok()) throw TreeError(std::move(report));

  ConceptTree tree;
  const std::size_t n = records.size();
  tree.ids_.reserve(n);
  tree.labels_.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    tree.index_.emplace(records[i].id, i);
    tree.ids_.push_back(std::move(records[i].id));
    tree.labels_.push_back(std::move(records[i].label));
  }
  tree.parents_.assign(n, kNoParent);
  tree.children_.assign(n, {});
  for (std::size_t i = 0; i < n; ++i) {
    if (records[i].parent) {
      const NodeIndex p = tree.index_.at(*records[i].parent);
      tree.parents_[i] = p;
      tree.children_[p].push_back(i);
    } else {
      tree.root_ = i;
    }
  }

  // Breadth-first from the root gives the downward order; its reverse lists
  // every node after all of its children.
  tree.depths_.assign(n, 0);
  tree.downward_.reserve(n);
  std::deque<NodeIndex> queue{tree.root_};
  tree.depths_[tree.root_] = 1;
  while (!queue.empty()) {
    const NodeIndex c = queue.front();
    queue.pop_front();
    tree.downward_.push_back(c);
    for (NodeIndex child : tree.children_[c]) {
      tree.depths_[child] = tree.depths_[c] + 1;
      queue.push_back(child);
    }
  }
  tree.upward_.assign(tree.downward_.rbegin(), tree.downward_.rend());
  return tree;
}

std::optional<NodeIndex> ConceptTree::find(std::string_view id) const {
  auto it = index_.find(std::string(id));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

NodeIndex ConceptTree::index_of(std::string_view id) const {
  if (auto idx = find(id)) return *idx;
  throw UnknownNodeError(std::string(id));
}

std::vector<NodeIndex> ConceptTree::leaves() const {
  std::vector<NodeIndex> out;
  for (NodeIndex i = 0; i < size(); ++i) {
    if (is_leaf(i)) out.push_back(i);
  }
  return out;
}

std::vector<NodeRecord> ConceptTree::records() const {
  std::vector<NodeRecord> out;
  out.reserve(size());
  for (NodeIndex i = 0; i < size(); ++i) {
    NodeRecord rec{ids_[i], labels_[i], std::nullopt};
    if (parents_[i] != kNoParent) rec.parent = ids_[parents_[i]];
    out.push_back(std::move(rec));
  }
  return out;
}

TraversalOrders traversal_orders(const ConceptTree& tree) {
  return {{tree.upward_order().begin(), tree.upward_order().end()},
          {tree.downward_order().begin(), tree.downward_order().end()}};
}

TreeStats tree_stats(const ConceptTree& tree) {
  TreeStats stats;
  stats.nodes = tree.size();
  for (NodeIndex i = 0; i < tree.size(); ++i) {
    stats.max_depth = std::max(stats.max_depth, tree.depth(i));
    if (tree.is_leaf(i)) ++stats.leaves;
  }
  return stats;
}

std::vector<NodeRecord> parse_tree_records(std::string_view document) {
  ordered_json doc;
  try {
    doc = ordered_json::parse(document);
  } catch (const ordered_json::parse_error& e) {
    throw ParseError(std::string("tree document is not valid JSON: ") +
                     e.what());
  }
  if (!doc.is_object() || !doc.contains("nodes") || !doc["nodes"].is_array()) {
    throw ParseError("tree document must be an object with a 'nodes' array");
  }
  std::vector<NodeRecord> records;
  for (const auto& node : doc["nodes"]) {
    if (!node.is_object() || !node.contains("id") || !node["id"].is_string()) {
      throw ParseError("every node needs a string 'id'");
    }
    NodeRecord rec;
    rec.id = node["id"].get<std::string>();
    if (node.contains("label")) {
      if (!node["label"].is_string()) {
        throw ParseError("label of '" + rec.id + "' must be a string");
      }
      rec.label = node["label"].get<std::string>();
    } else {
      rec.label = rec.id;
    }
    if (node.contains("parent") && !node["parent"].is_null()) {
      if (!node["parent"].is_string()) {
        throw ParseError("parent of '" + rec.id + "' must be a string");
      }
      rec.parent = node["parent"].get<std::string>();
    }
    records.push_back(std::move(rec));
  }
  return records;
}

ConceptTree parse_tree(std::string_view document) {
  return ConceptTree::from_records(parse_tree_records(document));
}

std::string serialize_tree(const ConceptTree& tree) {
  ordered_json nodes = ordered_json::array();
  for (const auto& rec : tree.records()) {
    ordered_json node;
    node["id"] = rec.id;
    node["label"] = rec.label;
    if (rec.parent) node["parent"] = *rec.parent;
    nodes.push_back(std::move(node));
  }
  ordered_json doc;
  doc["nodes"] = std::move(nodes);
  return doc.dump(2) + "\n";
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  if (in.bad()) throw IoError("error reading " + path.string());
  return buf.str();
}

void write_file(const std::filesystem::path& path, std::string_view contents) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
  if (!out) throw IoError("error writing " + path.string());
}

ConceptTree load_tree(const std::filesystem::path& path) {
  return parse_tree(read_file(path));
}

void save_tree(const ConceptTree& tree, const std::filesystem::path& path) {
  write_file(path, serialize_tree(tree));
}

MergeResult merge_sparse_leaves(
    const ConceptTree& tree,
    const std::map<std::string, std::size_t>& question_counts,
    std::size_t min_count) {
  const std::size_t n = tree.size();
  std::vector<std::size_t> count(n, 0);
  for (const auto& [id, c] : question_counts) {
    if (auto idx = tree.find(id)) count[*idx] = c;
  }
  std::vector<bool> alive(n, true);
  std::vector<std::size_t> live_children(n);
  std::vector<NodeIndex> merged_into(n, kNoParent);
  for (NodeIndex i = 0; i < n; ++i) live_children[i] = tree.children(i).size();

  auto fold = [&](NodeIndex child, NodeIndex parent) {
    count[parent] += count[child];
    count[child] = 0;
    alive[child] = false;
    merged_into[child] = parent;
    --live_children[parent];
  };

  for (NodeIndex p : tree.upward_order()) {
    bool merged_any = false;
    for (NodeIndex c : tree.children(p)) {
      if (alive[c] && live_children[c] == 0 && count[c] < min_count) {
        fold(c, p);
        merged_any = true;
      }
    }
    if (merged_any && live_children[p] == 1) {
      for (NodeIndex c : tree.children(p)) {
        if (alive[c] && live_children[c] == 0) fold(c, p);
      }
    }
  }

  std::vector<NodeRecord> records;
  MergeResult result{tree, {}, {}};
  for (const auto& rec : tree.records()) {
    const NodeIndex i = tree.index_of(rec.id);
    if (alive[i]) {
      records.push_back(rec);
      result.counts[rec.id] = count[i];
      continue;
    }
    NodeIndex host = merged_into[i];
    while (!alive[host]) host = merged_into[host];
    result.reassigned[rec.id] = tree.id(host);
  }
  result.tree = ConceptTree::from_records(std::move(records));
  return result;
}

}  // namespace treekt
