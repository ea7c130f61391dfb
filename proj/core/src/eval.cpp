#include "treekt/eval.hpp"

#include <algorithm>
#include <iomanip>
#include <limits>
#include <map>
#include <numeric>
#include <sstream>

#include "json.hpp"

namespace treekt {

double auc(std::span<const PredictionRecord> records) {
  std::vector<std::size_t> order(records.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return records[a].p_correct < records[b].p_correct;
  });
  double rank_sum_pos = 0.0;
  std::size_t n_pos = 0;
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j < order.size() &&
           records[order[j]].p_correct == records[order[i]].p_correct) {
      ++j;
    }
    // Ranks i+1 .. j share their mean.
    const double avg_rank = 0.5 * static_cast<double>(i + 1 + j);
    for (std::size_t k = i; k < j; ++k) {
      if (records[order[k]].actual) {
        rank_sum_pos += avg_rank;
        ++n_pos;
      }
    }
    i = j;
  }
  const std::size_t n_neg = records.size() - n_pos;
  if (n_pos == 0 || n_neg == 0) {
    throw UndefinedMetricError("AUC needs both correct and incorrect responses");
  }
  const double np = static_cast<double>(n_pos);
  const double u = rank_sum_pos - np * (np + 1.0) / 2.0;
  return u / (np * static_cast<double>(n_neg));
}

ConfusionCounts confusion(std::span<const PredictionRecord> records,
                          double threshold) {
  ConfusionCounts c;
  for (const auto& r : records) {
    const bool predicted = r.p_correct >= threshold;
    if (predicted && r.actual) ++c.tp;
    else if (predicted) ++c.fp;
    else if (r.actual) ++c.fn;
    else ++c.tn;
  }
  return c;
}

double accuracy(std::span<const PredictionRecord> records, double threshold) {
  if (records.empty()) throw UndefinedMetricError("accuracy of no records");
  const auto c = confusion(records, threshold);
  return static_cast<double>(c.tp + c.tn) / static_cast<double>(records.size());
}

double f1(std::span<const PredictionRecord> records, double threshold) {
  if (records.empty()) throw UndefinedMetricError("F1 of no records");
  const auto c = confusion(records, threshold);
  const std::size_t den = 2 * c.tp + c.fp + c.fn;
  if (den == 0) {
    throw UndefinedMetricError("F1 needs a positive prediction or label");
  }
  return 2.0 * static_cast<double>(c.tp) / static_cast<double>(den);
}

MetricsReport score(std::span<const PredictionRecord> records, double threshold) {
  MetricsReport m;
  m.threshold = threshold;
  m.n_records = records.size();
  if (records.empty()) return m;
  std::size_t pos = 0;
  for (const auto& r : records) pos += r.actual ? 1 : 0;
  m.positive_rate = static_cast<double>(pos) / static_cast<double>(records.size());
  try {
    m.auc = auc(records);
  } catch (const UndefinedMetricError&) {
  }
  m.accuracy = accuracy(records, threshold);
  try {
    m.f1 = f1(records, threshold);
  } catch (const UndefinedMetricError&) {
  }
  return m;
}

std::string metrics_to_json(const MetricsReport& report) {
  auto opt = [](const std::optional<double>& v) {
    return v ? nlohmann::ordered_json(*v) : nlohmann::ordered_json(nullptr);
  };
  nlohmann::ordered_json doc;
  doc["auc"] = opt(report.auc);
  doc["accuracy"] = opt(report.accuracy);
  doc["f1"] = opt(report.f1);
  doc["n_records"] = report.n_records;
  doc["positive_rate"] = report.positive_rate;
  doc["threshold"] = report.threshold;
  return doc.dump(2) + "\n";
}

std::string metrics_table(const MetricsReport& report) {
  auto cell = [](const std::optional<double>& v) {
    std::ostringstream s;
    if (v) s << std::fixed << std::setprecision(4) << *v;
    else s << "n/a";
    return s.str();
  };
  std::ostringstream out;
  out << std::left << std::setw(10) << "AUC" << std::setw(10) << "ACC"
      << std::setw(10) << "F1" << std::setw(10) << "records" << "pos.rate\n";
  out << std::setw(10) << cell(report.auc) << std::setw(10)
      << cell(report.accuracy) << std::setw(10) << cell(report.f1)
      << std::setw(10) << report.n_records << cell(report.positive_rate) << '\n';
  return out.str();
}

namespace {

struct Split {
  BurnInData burn_in;
  std::vector<StreamRecord> rest;
};

Split split_burn_in(const ConceptTree& tree, std::span<const StreamRecord> stream,
                    std::size_t burn_in_count) {
  Split split;
  std::map<std::string, std::int64_t> cutoff;
  for (auto& [student, records] : group_by_student(stream)) {
    ObservationSet obs;
    const std::size_t k = std::min(burn_in_count, records.size());
    for (std::size_t i = 0; i < k; ++i) obs.add(tree, records[i].interaction());
    cutoff[student] = k == 0 ? std::numeric_limits<std::int64_t>::min()
                             : records[k - 1].seq;
    split.burn_in.emplace_back(student, std::move(obs));
  }
  for (const auto& r : stream) {
    if (r.seq > cutoff.at(r.student_id)) split.rest.push_back(r);
  }
  return split;
}

}  // namespace

ExperimentResult run_experiment(std::shared_ptr<const ConceptTree> tree,
                                std::span<const StreamRecord> stream,
                                const ExperimentConfig& config) {
  auto split = split_burn_in(*tree, stream, config.burn_in_count);
  auto session = ClassroomSession::burn_in_fit(tree, std::move(split.burn_in),
                                               config.online);
  ExperimentResult result;
  result.burn_in = session.burn_in_report();
  result.records = replay(session, split.rest, config.threads);
  result.metrics = score(result.records, config.threshold);
  return result;
}

ExperimentResult run_fixed_parameters(std::shared_ptr<const ConceptTree> tree,
                                      std::span<const StreamRecord> stream,
                                      const Parameters& params,
                                      const ExperimentConfig& config) {
  auto split = split_burn_in(*tree, stream, config.burn_in_count);
  auto online = config.online;
  online.personalize = false;
  auto session = ClassroomSession::from_parameters(tree, std::move(split.burn_in),
                                                   params, online);
  ExperimentResult result;
  result.burn_in = session.burn_in_report();
  result.records = replay(session, split.rest, config.threads);
  result.metrics = score(result.records, config.threshold);
  return result;
}

}  // namespace treekt
