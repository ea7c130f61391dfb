#include "treekt/model.hpp"

#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace treekt {

double Parameters::r(Difficulty d) const noexcept {
  switch (d) {
    case Difficulty::kEasy: return r_easy;
    case Difficulty::kMedium: return r_med;
    case Difficulty::kHard: return r_hard;
  }
  return r_med;
}

double& Parameters::r(Difficulty d) noexcept {
  switch (d) {
    case Difficulty::kEasy: return r_easy;
    case Difficulty::kHard: return r_hard;
    case Difficulty::kMedium: break;
  }
  return r_med;
}

Parameters default_parameters(const ConceptTree& tree) {
  Parameters p;
  p.gamma.assign(tree.size(), kDefaultGamma);
  return p;
}

double gamma_of(const ConceptTree& tree, const Parameters& params,
                std::string_view node_id) {
  return params.gamma.at(tree.index_of(node_id));
}

double transition_prob(const ConceptTree& tree, const Parameters& params,
                       NodeIndex node, bool child,
                       std::optional<bool> parent) {
  if (node >= tree.size() || node >= params.gamma.size()) {
    throw UnknownNodeError("#" + std::to_string(node));
  }
  const bool root = tree.is_root(node);
  if (root == parent.has_value()) {
    throw std::invalid_argument(
        root ? "the root has no parent state"
             : "non-root node '" + tree.id(node) + "' needs a parent state");
  }
  const double p_master = (parent && *parent) ? 1.0 : params.gamma[node];
  return child ? p_master : 1.0 - p_master;
}

double emission_prob(const Parameters& params, Difficulty difficulty,
                     bool correct, bool mastered) noexcept {
  const double p_correct = mastered ? params.r(difficulty) : params.epsilon;
  return correct ? p_correct : 1.0 - p_correct;
}

std::vector<std::string> check_bounds(const ConceptTree& tree,
                                      const Parameters& params) {
  std::vector<std::string> out;
  auto inside = [](double v) { return v > 0.0 && v < 1.0; };
  if (params.gamma.size() != tree.size()) {
    out.push_back("gamma has " + std::to_string(params.gamma.size()) +
                  " entries for a tree of " + std::to_string(tree.size()));
    return out;
  }
  for (NodeIndex i = 0; i < tree.size(); ++i) {
    if (!inside(params.gamma[i])) {
      out.push_back("gamma[" + tree.id(i) + "] outside (0, 1)");
    }
  }
  if (!inside(params.r_easy)) out.push_back("r_easy outside (0, 1)");
  if (!inside(params.r_med)) out.push_back("r_med outside (0, 1)");
  if (!inside(params.r_hard)) out.push_back("r_hard outside (0, 1)");
  if (!inside(params.epsilon)) out.push_back("epsilon outside (0, 1)");
  return out;
}

std::vector<std::string> ordering_violations(const Parameters& params) {
  std::vector<std::string> out;
  if (!(params.epsilon < params.r_hard)) out.push_back("epsilon >= r_hard");
  if (!(params.r_hard < params.r_med)) out.push_back("r_hard >= r_med");
  if (!(params.r_med < params.r_easy)) out.push_back("r_med >= r_easy");
  return out;
}

void require_initial(const ConceptTree& tree, const Parameters& params) {
  auto problems = check_bounds(tree, params);
  for (auto& v : ordering_violations(params)) problems.push_back(std::move(v));
  if (params.epsilon > kEpsilonCap) {
    problems.push_back("epsilon above " + std::to_string(kEpsilonCap));
  }
  if (problems.empty()) return;
  std::string msg = "invalid initial parameters:";
  for (const auto& p : problems) msg += "\n  " + p;
  throw std::invalid_argument(msg);
}

std::string parameters_to_json(const ConceptTree& tree,
                               const Parameters& params) {
  nlohmann::ordered_json doc;
  nlohmann::ordered_json gamma = nlohmann::ordered_json::object();
  for (NodeIndex i = 0; i < tree.size(); ++i) {
    gamma[tree.id(i)] = params.gamma.at(i);
  }
  doc["gamma"] = std::move(gamma);
  doc["r_easy"] = params.r_easy;
  doc["r_med"] = params.r_med;
  doc["r_hard"] = params.r_hard;
  doc["epsilon"] = params.epsilon;
  return doc.dump(2) + "\n";
}

Parameters parameters_from_json(const ConceptTree& tree,
                                std::string_view document) {
  using nlohmann::json;
  json doc;
  try {
    doc = json::parse(document);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("parameter document is not valid JSON: ") +
                     e.what());
  }
  Parameters p;
  try {
    p.r_easy = doc.at("r_easy").get<double>();
    p.r_med = doc.at("r_med").get<double>();
    p.r_hard = doc.at("r_hard").get<double>();
    p.epsilon = doc.at("epsilon").get<double>();
    const auto& gamma = doc.at("gamma");
    if (!gamma.is_object()) throw ParseError("'gamma' must be an object");
    p.gamma.assign(tree.size(), 0.0);
    std::vector<bool> seen(tree.size(), false);
    for (const auto& [id, value] : gamma.items()) {
      const NodeIndex i = tree.index_of(id);
      p.gamma[i] = value.get<double>();
      seen[i] = true;
    }
    for (NodeIndex i = 0; i < tree.size(); ++i) {
      if (!seen[i]) throw ParseError("no gamma for node '" + tree.id(i) + "'");
    }
  } catch (const json::exception& e) {
    throw ParseError(std::string("parameter document: ") + e.what());
  }
  return p;
}

}  // namespace treekt
