#include "treekt/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace treekt {

namespace {

double normal(Rng& rng, double mean, double sd) {
  // Box-Muller keeps draws identical across standard libraries.
  double u1 = uniform01(rng);
  while (u1 <= 0.0) u1 = uniform01(rng);
  const double u2 = uniform01(rng);
  return mean + sd * std::sqrt(-2.0 * std::log(u1)) *
                    std::cos(2.0 * std::numbers::pi * u2);
}

std::size_t uniform_index(Rng& rng, std::size_t n) {
  return std::min(n - 1, static_cast<std::size_t>(uniform01(rng) * n));
}

double uniform(Rng& rng, double lo, double hi) {
  return lo + (hi - lo) * uniform01(rng);
}

std::string student_name(std::size_t index, std::size_t total) {
  std::ostringstream out;
  const int width = static_cast<int>(std::to_string(std::max<std::size_t>(total, 1) - 1).size());
  out << 's' << std::setw(width) << std::setfill('0') << index;
  return out.str();
}

}  // namespace

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) noexcept {
  std::uint64_t z = master + 0x9E3779B97F4A7C15ULL * (index + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

double uniform01(Rng& rng) noexcept {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

HiddenStates sample_states(const ConceptTree& tree, const Parameters& params,
                           Rng& rng) {
  HiddenStates k(tree.size(), 0);
  for (NodeIndex c : tree.downward_order()) {
    if (!tree.is_root(c) && k[tree.parent(c)]) {
      k[c] = 1;
    } else {
      k[c] = uniform01(rng) < params.gamma.at(c) ? 1 : 0;
    }
  }
  return k;
}

bool sample_response(const Parameters& params, const QuestionMeta& question,
                     const HiddenStates& states, Rng& rng) {
  const double p = states.at(question.kc) ? params.r(question.difficulty)
                                          : params.epsilon;
  return uniform01(rng) < p;
}

double expected_correctness(const Parameters& params, const QuestionBank& bank,
                            const HiddenStates& states) {
  if (bank.empty()) return 0.0;
  double sum = 0.0;
  for (const auto& q : bank.questions()) {
    sum += states.at(q.kc) ? params.r(q.difficulty) : params.epsilon;
  }
  return sum / static_cast<double>(bank.size());
}

Classroom generate_classroom(const ConceptTree& tree, const Parameters& theta_star,
                             const QuestionBank& bank, const SimConfig& config) {
  if (config.n_students > 0 && bank.empty()) {
    throw std::invalid_argument("question bank is empty");
  }
  for (const auto& q : bank.questions()) {
    if (q.kc >= tree.size() || !tree.is_leaf(q.kc)) {
      throw std::invalid_argument("question '" + q.question_id +
                                  "' is not attached to a leaf");
    }
  }
  if (config.target_ability && !(config.ability_std > 0.0)) {
    throw std::invalid_argument("ability_std must be positive");
  }

  Classroom room;
  room.truth.theta_star = theta_star;
  std::vector<std::vector<StreamRecord>> per_student(config.n_students);
  for (std::size_t s = 0; s < config.n_students; ++s) {
    Rng rng(derive_seed(config.seed, s));
    const auto id = student_name(s, config.n_students);
    HiddenStates states;
    if (config.target_ability) {
      const double target = std::clamp(
          normal(rng, config.ability_mean, config.ability_std), 0.0, 1.0);
      room.truth.ability_targets.push_back(target);
      double best_gap = std::numeric_limits<double>::infinity();
      for (std::size_t a = 0; a < std::max<std::size_t>(1, config.max_attempts); ++a) {
        auto cand = sample_states(tree, theta_star, rng);
        const double gap =
            std::abs(expected_correctness(theta_star, bank, cand) - target);
        if (gap < best_gap) {
          best_gap = gap;
          states = std::move(cand);
        }
        if (best_gap <= config.ability_tolerance) break;
      }
    } else {
      states = sample_states(tree, theta_star, rng);
    }
    auto& records = per_student[s];
    for (std::size_t k = 0; k < config.interactions_per_student; ++k) {
      const auto& q = bank[uniform_index(rng, bank.size())];
      records.push_back({id, q.question_id, q.kc, q.difficulty,
                         sample_response(theta_star, q, states, rng),
                         static_cast<std::int64_t>(k)});
    }
    room.truth.student_ids.push_back(id);
    room.truth.states.push_back(std::move(states));
  }
  for (std::size_t k = 0; k < config.interactions_per_student; ++k) {
    for (auto& records : per_student) room.stream.push_back(records[k]);
  }
  return room;
}

std::string ground_truth_to_json(const ConceptTree& tree, const GroundTruth& truth) {
  nlohmann::ordered_json doc;
  doc["theta_star"] =
      nlohmann::ordered_json::parse(parameters_to_json(tree, truth.theta_star));
  auto students = nlohmann::ordered_json::array();
  for (std::size_t s = 0; s < truth.student_ids.size(); ++s) {
    nlohmann::ordered_json rec;
    rec["student_id"] = truth.student_ids[s];
    if (s < truth.ability_targets.size()) {
      rec["ability_target"] = truth.ability_targets[s];
    }
    auto mastered = nlohmann::ordered_json::array();
    for (NodeIndex c = 0; c < tree.size(); ++c) {
      if (truth.states[s][c]) mastered.push_back(tree.id(c));
    }
    rec["mastered"] = std::move(mastered);
    students.push_back(std::move(rec));
  }
  doc["students"] = std::move(students);
  return doc.dump(2) + "\n";
}

ConceptTree random_tree(std::size_t nodes, Rng& rng, const std::string& prefix) {
  if (nodes == 0) throw std::invalid_argument("a tree needs at least one node");
  std::vector<NodeRecord> records;
  records.reserve(nodes);
  for (std::size_t i = 0; i < nodes; ++i) {
    NodeRecord rec{prefix + std::to_string(i), prefix + std::to_string(i), std::nullopt};
    if (i > 0) rec.parent = prefix + std::to_string(uniform_index(rng, i));
    records.push_back(std::move(rec));
  }
  return ConceptTree::from_records(std::move(records));
}

QuestionBank make_question_bank(const ConceptTree& tree, std::size_t per_leaf,
                                Rng& rng,
                                std::array<double, kNumDifficulties> mix) {
  const double total = mix[0] + mix[1] + mix[2];
  if (!(total > 0.0) || mix[0] < 0 || mix[1] < 0 || mix[2] < 0) {
    throw std::invalid_argument("difficulty mix needs non-negative weights");
  }
  std::vector<QuestionMeta> out;
  for (NodeIndex leaf : tree.leaves()) {
    for (std::size_t j = 0; j < per_leaf; ++j) {
      const double u = uniform01(rng) * total;
      Difficulty d = u < mix[0]            ? Difficulty::kEasy
                     : u < mix[0] + mix[1] ? Difficulty::kMedium
                                           : Difficulty::kHard;
      out.push_back({"q_" + tree.id(leaf) + "_" + std::to_string(j), leaf, d,
                     std::nullopt});
    }
  }
  return QuestionBank(std::move(out));
}

Parameters random_parameters(const ConceptTree& tree, Rng& rng) {
  Parameters p;
  p.gamma.resize(tree.size());
  for (auto& g : p.gamma) g = uniform(rng, 0.05, 0.5);
  p.epsilon = uniform(rng, 0.05, 0.25);
  p.r_hard = uniform(rng, 0.55, 0.75);
  p.r_med = uniform(rng, p.r_hard + 0.03, 0.87);
  p.r_easy = uniform(rng, p.r_med + 0.03, 0.97);
  return p;
}

ObservationSet random_observations(const ConceptTree& tree, std::size_t count,
                                   Rng& rng) {
  const auto leaves = tree.leaves();
  ObservationSet obs;
  for (std::size_t i = 0; i < count; ++i) {
    const NodeIndex kc = leaves[uniform_index(rng, leaves.size())];
    const auto d = kAllDifficulties[uniform_index(rng, kNumDifficulties)];
    obs.add(tree, {"r" + std::to_string(i), kc, d, uniform01(rng) < 0.6});
  }
  return obs;
}

double joint_probability(const ConceptTree& tree, const Parameters& params,
                         const HiddenStates& states, const ObservationSet& obs) {
  long double joint = 1.0L;
  for (NodeIndex c = 0; c < tree.size(); ++c) {
    const bool parent_mastered = !tree.is_root(c) && states[tree.parent(c)];
    const long double p1 = parent_mastered ? 1.0L : params.gamma[c];
    joint *= states[c] ? p1 : 1.0L - p1;
  }
  for (const auto& q : obs.interactions()) {
    const long double p = states[q.kc] ? params.r(q.difficulty) : params.epsilon;
    joint *= q.correct ? p : 1.0L - p;
  }
  return static_cast<double>(joint);
}

BruteForceResult brute_force_posteriors(const ConceptTree& tree,
                                        const Parameters& params,
                                        const ObservationSet& obs) {
  const std::size_t n = tree.size();
  if (n > kMaxEnumerationNodes) {
    throw std::invalid_argument("tree of " + std::to_string(n) +
                                " nodes is too large for enumeration");
  }
  std::vector<long double> mass1(n, 0.0L);
  std::vector<std::array<long double, 4>> pair(n, {0.0L, 0.0L, 0.0L, 0.0L});
  long double z = 0.0L;
  HiddenStates k(n, 0);
  for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << n); ++mask) {
    for (std::size_t c = 0; c < n; ++c) k[c] = (mask >> c) & 1U;
    long double joint = 1.0L;
    for (std::size_t c = 0; c < n && joint > 0.0L; ++c) {
      const bool parent_mastered = !tree.is_root(c) && k[tree.parent(c)];
      const long double p1 = parent_mastered ? 1.0L : params.gamma[c];
      joint *= k[c] ? p1 : 1.0L - p1;
    }
    if (joint == 0.0L) continue;
    for (const auto& q : obs.interactions()) {
      const long double p = k[q.kc] ? params.r(q.difficulty) : params.epsilon;
      joint *= q.correct ? p : 1.0L - p;
    }
    z += joint;
    for (std::size_t c = 0; c < n; ++c) {
      if (k[c]) mass1[c] += joint;
      if (!tree.is_root(c)) pair[c][2 * k[c] + k[tree.parent(c)]] += joint;
    }
  }
  BruteForceResult out;
  out.marginal.resize(n);
  out.pairwise.assign(n, {0.0, 0.0, 0.0, 0.0});
  for (std::size_t c = 0; c < n; ++c) {
    out.marginal[c] = static_cast<double>(mass1[c] / z);
    if (tree.is_root(c)) continue;
    for (int i = 0; i < 4; ++i) {
      out.pairwise[c][i] = static_cast<double>(pair[c][i] / z);
    }
  }
  out.log_likelihood = static_cast<double>(std::log(z));
  return out;
}

}  // namespace treekt
