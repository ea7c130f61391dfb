#ifndef TREEKT_INFERENCE_HPP
#define TREEKT_INFERENCE_HPP

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "treekt/concept_tree.hpp"
#include "treekt/model.hpp"
#include "treekt/questions.hpp"

namespace treekt {

struct Interaction {
  std::string question_id;
  NodeIndex kc = 0;
  Difficulty difficulty = Difficulty::kMedium;
  bool correct = false;

  friend bool operator==(const Interaction&, const Interaction&) = default;
};

// Responses attached to one KC. counts[difficulty][correct].
struct KcGroup {
  NodeIndex kc = 0;
  std::array<std::array<std::uint32_t, 2>, kNumDifficulties> counts{};
  std::vector<std::size_t> members;  // indices into interactions()

  std::uint32_t total(bool correct) const noexcept;
};

// One student's responses, partitioned by KC. Only the per-KC counts enter
// the likelihood, so the order of interactions is irrelevant to inference.
class ObservationSet {
 public:
  // Throws UnknownNodeError for a KC outside the tree and
  // std::invalid_argument when the KC is not a leaf.
  void add(const ConceptTree& tree, Interaction interaction);
  void append(const ConceptTree& tree, const ObservationSet& other);

  std::size_t size() const noexcept { return interactions_.size(); }
  bool empty() const noexcept { return interactions_.empty(); }
  std::span<const Interaction> interactions() const noexcept {
    return interactions_;
  }
  // Sorted by KC index.
  std::span<const KcGroup> by_kc() const noexcept { return groups_; }
  const KcGroup* group(NodeIndex kc) const noexcept;

 private:
  std::vector<Interaction> interactions_;
  std::vector<KcGroup> groups_;
};

using LogPair = std::array<double, 2>;  // indexed by state: 0 = not mastered

struct UpwardMessages {
  // log beta_c(k): probability of all responses in the subtree of c given
  // K_c = k.
  std::vector<LogPair> log_beta;
  // log beta~_{c,parent}(k): the same responses given K_parent = k. The root
  // entry is unused.
  std::vector<LogPair> log_beta_tilde;
};

struct BeliefTable {
  std::vector<LogPair> log_beta;
  std::vector<LogPair> log_beta_tilde;
  // log alpha_c(k): joint of K_c = k and all responses outside c's subtree.
  std::vector<LogPair> log_alpha;
  // P(K_c = 1 | responses).
  std::vector<double> marginal;
  // P(K_c = kc, K_parent = kp | responses) at index 2 * kc + kp. Root entry
  // is unused.
  std::vector<std::array<double, 4>> pairwise;
  double log_likelihood = 0.0;

  double pair(NodeIndex node, bool child, bool parent) const {
    return pairwise.at(node)[2 * static_cast<int>(child) +
                             static_cast<int>(parent)];
  }
  // log sum_k alpha_c(k) beta_c(k); equals log_likelihood at every node.
  double node_evidence(NodeIndex node) const;
};

struct Prediction {
  std::string question_id;
  double prob_correct = 0.0;
  double posterior_mastery = 0.0;
};

UpwardMessages upward_pass(const ConceptTree& tree, const Parameters& params,
                           const ObservationSet& obs);

// Throws InferenceError if an upward message is zero.
std::vector<LogPair> downward_pass(const ConceptTree& tree,
                                   const Parameters& params,
                                   const UpwardMessages& up);

BeliefTable posteriors(const ConceptTree& tree, const Parameters& params,
                       const ObservationSet& obs);

double log_likelihood(const ConceptTree& tree, const Parameters& params,
                      const ObservationSet& obs);

// Mixes guessing and mastered emission by the posterior mastery of the
// question's KC.
Prediction predict(const Parameters& params, const BeliefTable& belief,
                   const QuestionMeta& question);

// [{"node_id": ..., "posterior": ...}, ...] in node order.
std::string posteriors_to_json(const ConceptTree& tree,
                               const BeliefTable& belief);

// log(exp(a) + exp(b)) with -inf handled.
double log_add(double a, double b) noexcept;

}  // namespace treekt

#endif  // TREEKT_INFERENCE_HPP
