#ifndef TREEKT_SIMULATE_HPP
#define TREEKT_SIMULATE_HPP

#include <array>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "treekt/concept_tree.hpp"
#include "treekt/inference.hpp"
#include "treekt/model.hpp"
#include "treekt/questions.hpp"
#include "treekt/records.hpp"

namespace treekt {

using Rng = std::mt19937_64;

// Seed for stream `index` derived from a master seed (splitmix64 mixing), so
// per-student draws do not depend on how students are scheduled.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) noexcept;
double uniform01(Rng& rng) noexcept;

// Hidden mastery per node: 1 = mastered.
using HiddenStates = std::vector<std::uint8_t>;

// Root to leaves: the root is mastered with probability gamma_root; a child of
// a mastered parent is always mastered, otherwise with probability gamma_c.
HiddenStates sample_states(const ConceptTree& tree, const Parameters& params,
                           Rng& rng);

bool sample_response(const Parameters& params, const QuestionMeta& question,
                     const HiddenStates& states, Rng& rng);

// Probability of a correct answer to a question drawn uniformly from `bank`
// for a student in `states`.
double expected_correctness(const Parameters& params, const QuestionBank& bank,
                            const HiddenStates& states);

struct SimConfig {
  std::size_t n_students = 100;
  std::size_t interactions_per_student = 50;
  // Rejection-sample each student's states so that their expected
  // correctness is near a target drawn from N(ability_mean, ability_std).
  bool target_ability = true;
  double ability_mean = 0.65;
  double ability_std = 0.15;
  double ability_tolerance = 0.03;
  std::size_t max_attempts = 200;
  std::uint64_t seed = 0;
};

struct GroundTruth {
  Parameters theta_star;
  std::vector<std::string> student_ids;
  std::vector<HiddenStates> states;
  // Drawn targets (empty when ability targeting is off).
  std::vector<double> ability_targets;
};

struct Classroom {
  // Interleaved by seq: all students' first response, then all second ...
  std::vector<StreamRecord> stream;
  GroundTruth truth;
};

// Throws std::invalid_argument for an empty bank, a non-leaf question KC or
// a non-positive ability_std.
Classroom generate_classroom(const ConceptTree& tree, const Parameters& theta_star,
                             const QuestionBank& bank, const SimConfig& config);

std::string ground_truth_to_json(const ConceptTree& tree, const GroundTruth& truth);

// Random tree with `nodes` nodes: node i > 0 hangs under a uniformly chosen
// earlier node. Ids are prefix + index.
ConceptTree random_tree(std::size_t nodes, Rng& rng, const std::string& prefix = "n");

// `per_leaf` questions on every leaf; difficulties drawn from `mix`
// (weights for easy, medium, hard).
QuestionBank make_question_bank(const ConceptTree& tree, std::size_t per_leaf,
                                Rng& rng,
                                std::array<double, kNumDifficulties> mix = {1, 1, 1});

// Random parameters around the default initialization, respecting
// epsilon < r_hard < r_med < r_easy and epsilon <= kEpsilonCap.
Parameters random_parameters(const ConceptTree& tree, Rng& rng);

// Random responses on uniformly chosen leaves.
ObservationSet random_observations(const ConceptTree& tree, std::size_t count,
                                   Rng& rng);

inline constexpr std::size_t kMaxEnumerationNodes = 20;

struct BruteForceResult {
  std::vector<double> marginal;                 // P(K_c = 1 | Q)
  std::vector<std::array<double, 4>> pairwise;  // index 2 * kc + kp
  double log_likelihood = 0.0;
};

// Exact posteriors by summing the joint over all 2^|nodes| hidden
// configurations. Throws std::invalid_argument above kMaxEnumerationNodes.
BruteForceResult brute_force_posteriors(const ConceptTree& tree,
                                        const Parameters& params,
                                        const ObservationSet& obs);

// Joint probability of one hidden configuration and the observations.
double joint_probability(const ConceptTree& tree, const Parameters& params,
                         const HiddenStates& states, const ObservationSet& obs);

}  // namespace treekt

#endif  // TREEKT_SIMULATE_HPP
