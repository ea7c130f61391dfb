#ifndef TREEKT_EVAL_HPP
#define TREEKT_EVAL_HPP

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "treekt/concept_tree.hpp"
#include "treekt/em.hpp"
#include "treekt/online.hpp"
#include "treekt/records.hpp"

namespace treekt {

inline constexpr double kDefaultThreshold = 0.5;

// Rank-based (Mann-Whitney) AUC; tied scores share their average rank.
// Throws UndefinedMetricError unless both classes are present.
double auc(std::span<const PredictionRecord> records);

// p_correct >= threshold counts as a predicted correct answer.
double accuracy(std::span<const PredictionRecord> records,
                double threshold = kDefaultThreshold);
// F1 of the "answered correctly" class. Throws UndefinedMetricError on empty
// input or when there is neither a positive prediction nor a positive label.
double f1(std::span<const PredictionRecord> records,
          double threshold = kDefaultThreshold);

struct ConfusionCounts {
  std::size_t tp = 0, fp = 0, tn = 0, fn = 0;
};
ConfusionCounts confusion(std::span<const PredictionRecord> records,
                          double threshold = kDefaultThreshold);

// Micro-averaged over all records. Undefined metrics are left empty.
struct MetricsReport {
  std::optional<double> auc;
  std::optional<double> accuracy;
  std::optional<double> f1;
  std::size_t n_records = 0;
  double positive_rate = 0.0;
  double threshold = kDefaultThreshold;
};

MetricsReport score(std::span<const PredictionRecord> records,
                    double threshold = kDefaultThreshold);

std::string metrics_to_json(const MetricsReport& report);
std::string metrics_table(const MetricsReport& report);

struct ExperimentConfig {
  // Leading responses per student pooled into the burn-in data.
  std::size_t burn_in_count = 10;
  OnlineOptions online;
  double threshold = kDefaultThreshold;
  // Replay workers (students in parallel).
  unsigned threads = 1;
};

struct ExperimentResult {
  MetricsReport metrics;
  std::vector<PredictionRecord> records;
  FitReport burn_in;
};

// Splits every student's first burn_in_count responses (by seq) into the
// shared burn-in data, fits it, then replays the remaining responses in
// stream order.
ExperimentResult run_experiment(std::shared_ptr<const ConceptTree> tree,
                                std::span<const StreamRecord> stream,
                                const ExperimentConfig& config);

// Same split, but predictions use fixed `params` with no EM at all.
ExperimentResult run_fixed_parameters(std::shared_ptr<const ConceptTree> tree,
                                      std::span<const StreamRecord> stream,
                                      const Parameters& params,
                                      const ExperimentConfig& config);

}  // namespace treekt

#endif  // TREEKT_EVAL_HPP
