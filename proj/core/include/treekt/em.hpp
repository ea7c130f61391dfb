#ifndef TREEKT_EM_HPP
#define TREEKT_EM_HPP

#include <array>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "treekt/concept_tree.hpp"
#include "treekt/inference.hpp"
#include "treekt/model.hpp"

namespace treekt {

// A list of per-student observation sets, borrowed. Students are visited in
// list order everywhere, which fixes the floating-point summation order.
class DatasetView {
 public:
  DatasetView() = default;
  DatasetView(std::span<const ObservationSet> students);
  DatasetView(std::vector<const ObservationSet*> students);

  std::size_t size() const noexcept { return students_.size(); }
  bool empty() const noexcept { return students_.empty(); }
  const ObservationSet& operator[](std::size_t i) const { return *students_[i]; }

 private:
  std::vector<const ObservationSet*> students_;
};

// Expected counts from the E-step, summed over students.
struct SufficientStats {
  // Non-root nodes: sum_i P(K_c = 1, K_parent = 0 | Q_i) and
  // sum_i P(K_c = 0, K_parent = 0 | Q_i). Root entries stay zero.
  std::vector<double> gamma_num;
  std::vector<double> gamma_den_extra;
  // sum_i P(K_root = 1 | Q_i) over `students` students.
  double root_num = 0.0;
  std::size_t students = 0;
  // Posterior non-mastery mass on correctly / incorrectly answered questions.
  double eps_pos = 0.0;
  double eps_neg = 0.0;
  // Posterior mastery mass per difficulty on correct / incorrect answers.
  std::array<double, kNumDifficulties> r_pos{};
  std::array<double, kNumDifficulties> r_neg{};
  std::size_t n_correct = 0;
  std::size_t n_incorrect = 0;
  double log_likelihood = 0.0;
  NodeIndex root = kNoParent;

  SufficientStats() = default;
  SufficientStats(std::size_t nodes, NodeIndex root_node)
      : gamma_num(nodes, 0.0), gamma_den_extra(nodes, 0.0), root(root_node) {}

  // Adds `other` into this; the reduction is associative up to rounding.
  void merge(const SufficientStats& other);
};

// Posterior expectations for one student.
SufficientStats student_stats(const ConceptTree& tree, const Parameters& params,
                              const ObservationSet& obs);

// Per-student work runs on up to `threads` workers; the reduction always
// proceeds in student order, so the result does not depend on `threads`.
SufficientStats e_step(const ConceptTree& tree, const Parameters& params,
                       const DatasetView& dataset, unsigned threads = 1);

// Closed-form maximizer of the expected complete-data log-likelihood.
// Cells with a zero denominator keep their value from `previous`. The guessing
// rate is capped at kEpsilonCap and every entry is clamped into
// [kProbFloor, 1 - kProbFloor].
Parameters m_step(const SufficientStats& stats, const Parameters& previous);

struct FitOptions {
  std::size_t max_iters = 100;
  // Stop once |LL_t - LL_{t-1}| < tol.
  double tol = 1e-6;
  unsigned threads = 1;
};

struct FitReport {
  Parameters params;
  // log-likelihood of the dataset under the initial parameters and after
  // each iteration; size() == iterations + 1.
  std::vector<double> log_likelihood_trace;
  std::size_t iterations = 0;
  bool converged = false;
  // Ordering diagnostics raised by M-steps (not errors).
  std::vector<std::string> warnings;
};

// Throws std::invalid_argument on an empty dataset.
FitReport fit(const ConceptTree& tree, const DatasetView& dataset,
              const Parameters& init, const FitOptions& options = {});

// Exactly one E-step followed by one M-step.
Parameters one_step_update(const ConceptTree& tree, const Parameters& params,
                           const DatasetView& dataset, unsigned threads = 1);

double dataset_log_likelihood(const ConceptTree& tree, const Parameters& params,
                              const DatasetView& dataset, unsigned threads = 1);

std::string fit_report_to_json(const ConceptTree& tree, const FitReport& report);

}  // namespace treekt

#endif  // TREEKT_EM_HPP
