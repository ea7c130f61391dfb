#include "treekt/em.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <thread>

#include "json.hpp"

namespace treekt {

namespace {

// Runs fn(i) for i in [0, n) over a static partition of `threads` workers.
template <class Fn>
void parallel_for(std::size_t n, unsigned threads, Fn&& fn) {
  const std::size_t workers =
      std::min<std::size_t>(std::max(1u, threads), n == 0 ? 1 : n);
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::jthread> pool;
  std::vector<std::exception_ptr> errors(workers);
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      try {
        for (std::size_t i = w; i < n; i += workers) fn(i);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  pool.clear();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

double clamp_prob(double p) {
  return std::clamp(p, kProbFloor, 1.0 - kProbFloor);
}

// num / (num + other), or `previous` when there is no posterior mass.
double ratio_or(double num, double other, double previous) {
  const double den = num + other;
  return den > 0.0 ? num / den : previous;
}

}  // namespace

DatasetView::DatasetView(std::span<const ObservationSet> students) {
  students_.reserve(students.size());
  for (const auto& s : students) students_.push_back(&s);
}

DatasetView::DatasetView(std::vector<const ObservationSet*> students)
    : students_(std::move(students)) {}

void SufficientStats::merge(const SufficientStats& other) {
  if (gamma_num.size() != other.gamma_num.size() || root != other.root) {
    throw std::invalid_argument("merging statistics of different trees");
  }
  for (std::size_t c = 0; c < gamma_num.size(); ++c) {
    gamma_num[c] += other.gamma_num[c];
    gamma_den_extra[c] += other.gamma_den_extra[c];
  }
  root_num += other.root_num;
  students += other.students;
  eps_pos += other.eps_pos;
  eps_neg += other.eps_neg;
  for (std::size_t l = 0; l < kNumDifficulties; ++l) {
    r_pos[l] += other.r_pos[l];
    r_neg[l] += other.r_neg[l];
  }
  n_correct += other.n_correct;
  n_incorrect += other.n_incorrect;
  log_likelihood += other.log_likelihood;
}

SufficientStats student_stats(const ConceptTree& tree, const Parameters& params,
                              const ObservationSet& obs) {
  const auto belief = posteriors(tree, params, obs);
  SufficientStats s(tree.size(), tree.root());
  s.students = 1;
  s.log_likelihood = belief.log_likelihood;
  for (NodeIndex c = 0; c < tree.size(); ++c) {
    if (tree.is_root(c)) {
      s.root_num = belief.marginal[c];
      continue;
    }
    s.gamma_num[c] = belief.pair(c, true, false);
    s.gamma_den_extra[c] = belief.pair(c, false, false);
  }
  // Every response on a KC carries the same posterior weight, so per-KC
  // counts replace the per-question sums.
  for (const auto& g : obs.by_kc()) {
    const double p1 = belief.marginal[g.kc];
    const double p0 = 1.0 - p1;
    for (Difficulty d : kAllDifficulties) {
      const auto& cnt = g.counts[index_of(d)];
      s.eps_pos += cnt[1] * p0;
      s.eps_neg += cnt[0] * p0;
      s.r_pos[index_of(d)] += cnt[1] * p1;
      s.r_neg[index_of(d)] += cnt[0] * p1;
    }
    s.n_correct += g.total(true);
    s.n_incorrect += g.total(false);
  }
  return s;
}

SufficientStats e_step(const ConceptTree& tree, const Parameters& params,
                       const DatasetView& dataset, unsigned threads) {
  SufficientStats total(tree.size(), tree.root());
  if (threads <= 1 || dataset.size() < 2) {
    for (std::size_t i = 0; i < dataset.size(); ++i) {
      total.merge(student_stats(tree, params, dataset[i]));
    }
    return total;
  }
  std::vector<SufficientStats> per_student(dataset.size());
  parallel_for(dataset.size(), threads, [&](std::size_t i) {
    per_student[i] = student_stats(tree, params, dataset[i]);
  });
  for (const auto& s : per_student) total.merge(s);
  return total;
}

Parameters m_step(const SufficientStats& stats, const Parameters& previous) {
  if (stats.gamma_num.size() != previous.gamma.size() ||
      stats.root >= previous.gamma.size()) {
    throw std::invalid_argument("statistics do not match parameter vector");
  }
  Parameters next = previous;
  for (std::size_t c = 0; c < next.gamma.size(); ++c) {
    if (c == stats.root) continue;
    next.gamma[c] = clamp_prob(
        ratio_or(stats.gamma_num[c], stats.gamma_den_extra[c], previous.gamma[c]));
  }
  // Without a parent the pair (K_root, K_parent = 0) reduces to K_root alone.
  const double root_rest = static_cast<double>(stats.students) - stats.root_num;
  next.gamma[stats.root] = clamp_prob(
      ratio_or(stats.root_num, std::max(root_rest, 0.0), previous.gamma[stats.root]));

  next.epsilon = ratio_or(stats.eps_pos, stats.eps_neg, previous.epsilon);
  next.epsilon = clamp_prob(std::min(next.epsilon, kEpsilonCap));
  for (Difficulty d : kAllDifficulties) {
    const auto l = index_of(d);
    next.r(d) = clamp_prob(ratio_or(stats.r_pos[l], stats.r_neg[l], previous.r(d)));
  }
  return next;
}

Parameters one_step_update(const ConceptTree& tree, const Parameters& params,
                           const DatasetView& dataset, unsigned threads) {
  if (dataset.empty()) throw std::invalid_argument("empty dataset");
  return m_step(e_step(tree, params, dataset, threads), params);
}

double dataset_log_likelihood(const ConceptTree& tree, const Parameters& params,
                              const DatasetView& dataset, unsigned threads) {
  if (threads <= 1 || dataset.size() < 2) {
    double ll = 0.0;
    for (std::size_t i = 0; i < dataset.size(); ++i) {
      ll += log_likelihood(tree, params, dataset[i]);
    }
    return ll;
  }
  std::vector<double> per_student(dataset.size());
  parallel_for(dataset.size(), threads, [&](std::size_t i) {
    per_student[i] = log_likelihood(tree, params, dataset[i]);
  });
  double ll = 0.0;
  for (double v : per_student) ll += v;
  return ll;
}

FitReport fit(const ConceptTree& tree, const DatasetView& dataset,
              const Parameters& init, const FitOptions& options) {
  if (dataset.empty()) throw std::invalid_argument("cannot fit an empty dataset");
  FitReport report;
  report.params = init;
  auto stats = e_step(tree, init, dataset, options.threads);
  report.log_likelihood_trace.push_back(stats.log_likelihood);
  std::vector<std::string> seen;
  for (std::size_t it = 0; it < options.max_iters; ++it) {
    report.params = m_step(stats, report.params);
    ++report.iterations;
    // Report each ordering violation once, at the iteration it first appears.
    for (const auto& v : ordering_violations(report.params)) {
      if (std::find(seen.begin(), seen.end(), v) != seen.end()) continue;
      seen.push_back(v);
      report.warnings.push_back("iteration " + std::to_string(report.iterations) +
                                ": " + v);
    }
    stats = e_step(tree, report.params, dataset, options.threads);
    const double prev = report.log_likelihood_trace.back();
    report.log_likelihood_trace.push_back(stats.log_likelihood);
    if (std::abs(stats.log_likelihood - prev) < options.tol) {
      report.converged = true;
      break;
    }
  }
  return report;
}

std::string fit_report_to_json(const ConceptTree& tree, const FitReport& report) {
  nlohmann::ordered_json doc;
  doc["iterations"] = report.iterations;
  doc["converged"] = report.converged;
  doc["log_likelihood_trace"] = report.log_likelihood_trace;
  doc["final_log_likelihood"] = report.log_likelihood_trace.empty()
                                    ? nlohmann::ordered_json(nullptr)
                                    : nlohmann::ordered_json(report.log_likelihood_trace.back());
  doc["warnings"] = report.warnings;
  doc["parameters"] = nlohmann::ordered_json::parse(parameters_to_json(tree, report.params));
  return doc.dump(2) + "\n";
}

}  // namespace treekt
