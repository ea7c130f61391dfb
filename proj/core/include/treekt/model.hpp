#ifndef TREEKT_MODEL_HPP
#define TREEKT_MODEL_HPP

#include <array>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "treekt/concept_tree.hpp"
#include "treekt/questions.hpp"

namespace treekt {

// Model parameters: one transition probability per concept node plus the
// three mastered-emission rates and the guessing rate.
//
// gamma[c] is P(K_c = 1 | K_parent = 0); for the root it is the prior
// P(K_root = 1). A mastered parent always implies a mastered child.
struct Parameters {
  std::vector<double> gamma;  // indexed by NodeIndex
  double r_easy = 0.9;
  double r_med = 0.8;
  double r_hard = 0.75;
  double epsilon = 0.1;

  double r(Difficulty d) const noexcept;
  double& r(Difficulty d) noexcept;

  friend bool operator==(const Parameters&, const Parameters&) = default;
};

inline constexpr double kDefaultGamma = 0.1;
// Upper bound on the guessing rate after every M-step.
inline constexpr double kEpsilonCap = 0.3;
// Every probability is kept inside [kProbFloor, 1 - kProbFloor] by EM.
inline constexpr double kProbFloor = 1e-6;

Parameters default_parameters(const ConceptTree& tree);

// Throws UnknownNodeError.
double gamma_of(const ConceptTree& tree, const Parameters& params,
                std::string_view node_id);

// P(K_node = child | K_parent = parent). `parent` must be given for every
// non-root node and omitted for the root (std::invalid_argument otherwise).
double transition_prob(const ConceptTree& tree, const Parameters& params,
                       NodeIndex node, bool child,
                       std::optional<bool> parent);

// P(Q = correct | K = mastered) for a question of the given difficulty.
double emission_prob(const Parameters& params, Difficulty difficulty,
                     bool correct, bool mastered) noexcept;

// Entries outside the open interval (0, 1) or a gamma vector of the wrong
// size. Empty when the parameters are usable for inference.
std::vector<std::string> check_bounds(const ConceptTree& tree,
                                      const Parameters& params);

// Violations of epsilon < r_hard < r_med < r_easy.
std::vector<std::string> ordering_violations(const Parameters& params);

// Throws std::invalid_argument listing bound and ordering problems.
void require_initial(const ConceptTree& tree, const Parameters& params);

// {"gamma": {"<node id>": p, ...}, "r_easy": ..., "r_med": ...,
//  "r_hard": ..., "epsilon": ...}; doubles round-trip exactly.
std::string parameters_to_json(const ConceptTree& tree,
                               const Parameters& params);
Parameters parameters_from_json(const ConceptTree& tree,
                                std::string_view document);

}  // namespace treekt

#endif  // TREEKT_MODEL_HPP
