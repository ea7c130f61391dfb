#include "treekt/inference.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "json.hpp"

namespace treekt {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double safe_log(double p) noexcept { return p > 0.0 ? std::log(p) : kNegInf; }

// log P(K_c = child | K_parent = parent), with row parent = 1 deterministic.
// For the root only the parent = 0 row (the prior) is meaningful.
struct LogTransition {
  std::array<LogPair, 2> table;  // table[parent][child]
};

std::vector<LogTransition> log_transitions(const ConceptTree& tree,
                                           const Parameters& params) {
  if (params.gamma.size() != tree.size()) {
    throw std::invalid_argument("parameter vector does not match tree size");
  }
  std::vector<LogTransition> out(tree.size());
  for (NodeIndex c = 0; c < tree.size(); ++c) {
    const double g = params.gamma[c];
    out[c].table[0] = {safe_log(1.0 - g), safe_log(g)};
    out[c].table[1] = {kNegInf, 0.0};
  }
  return out;
}

// Sum over responses of log P(Q | K = k) for the responses attached to one KC.
LogPair local_evidence(const Parameters& params, const KcGroup& g) {
  LogPair out{0.0, 0.0};
  for (Difficulty d : kAllDifficulties) {
    const auto& cnt = g.counts[index_of(d)];
    for (int k = 0; k < 2; ++k) {
      for (int q = 0; q < 2; ++q) {
        if (cnt[q] == 0) continue;
        out[k] += cnt[q] * safe_log(emission_prob(params, d, q == 1, k == 1));
      }
    }
  }
  return out;
}

double log_sum4(const std::array<double, 4>& v) {
  double m = *std::max_element(v.begin(), v.end());
  if (m == kNegInf) return kNegInf;
  double s = 0.0;
  for (double x : v) s += std::exp(x - m);
  return m + std::log(s);
}

}  // namespace

double log_add(double a, double b) noexcept {
  if (a == kNegInf) return b;
  if (b == kNegInf) return a;
  return a > b ? a + std::log1p(std::exp(b - a))
               : b + std::log1p(std::exp(a - b));
}

std::uint32_t KcGroup::total(bool correct) const noexcept {
  std::uint32_t n = 0;
  for (const auto& c : counts) n += c[correct ? 1 : 0];
  return n;
}

void ObservationSet::add(const ConceptTree& tree, Interaction interaction) {
  if (interaction.kc >= tree.size()) {
    throw UnknownNodeError("#" + std::to_string(interaction.kc));
  }
  if (!tree.is_leaf(interaction.kc)) {
    throw std::invalid_argument("question '" + interaction.question_id +
                                "' is attached to non-leaf KC '" +
                                tree.id(interaction.kc) + "'");
  }
  auto it = std::lower_bound(
      groups_.begin(), groups_.end(), interaction.kc,
      [](const KcGroup& g, NodeIndex kc) { return g.kc < kc; });
  if (it == groups_.end() || it->kc != interaction.kc) {
    it = groups_.insert(it, KcGroup{interaction.kc, {}, {}});
  }
  ++it->counts[index_of(interaction.difficulty)][interaction.correct ? 1 : 0];
  it->members.push_back(interactions_.size());
  interactions_.push_back(std::move(interaction));
}

void ObservationSet::append(const ConceptTree& tree,
                            const ObservationSet& other) {
  for (const auto& i : other.interactions()) add(tree, i);
}

const KcGroup* ObservationSet::group(NodeIndex kc) const noexcept {
  auto it = std::lower_bound(
      groups_.begin(), groups_.end(), kc,
      [](const KcGroup& g, NodeIndex k) { return g.kc < k; });
  return (it != groups_.end() && it->kc == kc) ? &*it : nullptr;
}

UpwardMessages upward_pass(const ConceptTree& tree, const Parameters& params,
                           const ObservationSet& obs) {
  const auto trans = log_transitions(tree, params);
  const std::size_t n = tree.size();
  UpwardMessages up;
  up.log_beta.assign(n, LogPair{0.0, 0.0});
  up.log_beta_tilde.assign(n, LogPair{0.0, 0.0});

  for (const auto& g : obs.by_kc()) {
    if (g.kc >= n) throw UnknownNodeError("#" + std::to_string(g.kc));
    up.log_beta[g.kc] = local_evidence(params, g);
  }

  // Children precede parents, so each beta_c is complete (own responses plus
  // every child's message) by the time c sends its message upward.
  for (NodeIndex c : tree.upward_order()) {
    if (tree.is_root(c)) continue;
    const NodeIndex p = tree.parent(c);
    const auto& t = trans[c].table;
    LogPair msg;
    for (int kp = 0; kp < 2; ++kp) {
#ifdef TREEKT_FAULT_CORRUPT_BETA_TILDE
      const auto& row = t[1 - kp];
#else
      const auto& row = t[kp];
#endif
      msg[kp] = log_add(up.log_beta[c][0] + row[0], up.log_beta[c][1] + row[1]);
    }
    up.log_beta_tilde[c] = msg;
    up.log_beta[p][0] += msg[0];
    up.log_beta[p][1] += msg[1];
  }
  return up;
}

std::vector<LogPair> downward_pass(const ConceptTree& tree,
                                   const Parameters& params,
                                   const UpwardMessages& up) {
  const auto trans = log_transitions(tree, params);
  std::vector<LogPair> log_alpha(tree.size(), LogPair{kNegInf, kNegInf});
  for (NodeIndex c : tree.downward_order()) {
    if (tree.is_root(c)) {
      log_alpha[c] = trans[c].table[0];
      continue;
    }
    const NodeIndex p = tree.parent(c);
    LogPair alpha_tilde;
    for (int kp = 0; kp < 2; ++kp) {
      const double denom = up.log_beta_tilde[c][kp];
      if (!std::isfinite(denom)) {
        throw InferenceError("upward message from '" + tree.id(c) +
                             "' vanishes; parameters are degenerate");
      }
      alpha_tilde[kp] = log_alpha[p][kp] + up.log_beta[p][kp] - denom;
    }
    const auto& t = trans[c].table;
    for (int k = 0; k < 2; ++k) {
      log_alpha[c][k] = log_add(t[0][k] + alpha_tilde[0], t[1][k] + alpha_tilde[1]);
    }
  }
  return log_alpha;
}

double BeliefTable::node_evidence(NodeIndex node) const {
  return log_add(log_alpha.at(node)[0] + log_beta.at(node)[0],
                 log_alpha.at(node)[1] + log_beta.at(node)[1]);
}

BeliefTable posteriors(const ConceptTree& tree, const Parameters& params,
                       const ObservationSet& obs) {
  auto up = upward_pass(tree, params, obs);
  BeliefTable bt;
  bt.log_alpha = downward_pass(tree, params, up);
  bt.log_beta = std::move(up.log_beta);
  bt.log_beta_tilde = std::move(up.log_beta_tilde);

  const std::size_t n = tree.size();
  const auto trans = log_transitions(tree, params);
  bt.marginal.assign(n, 0.0);
  bt.pairwise.assign(n, {0.0, 0.0, 0.0, 0.0});
  for (NodeIndex c = 0; c < n; ++c) {
    const double a0 = bt.log_alpha[c][0] + bt.log_beta[c][0];
    const double a1 = bt.log_alpha[c][1] + bt.log_beta[c][1];
    const double z = log_add(a0, a1);
    bt.marginal[c] = std::exp(a1 - z);
    if (tree.is_root(c)) {
      bt.log_likelihood = z;
      continue;
    }
    const NodeIndex p = tree.parent(c);
    std::array<double, 4> w;
    for (int kc = 0; kc < 2; ++kc) {
      for (int kp = 0; kp < 2; ++kp) {
        const double alpha_tilde =
            bt.log_alpha[p][kp] + bt.log_beta[p][kp] - bt.log_beta_tilde[c][kp];
        w[2 * kc + kp] = alpha_tilde + bt.log_beta[c][kc] + trans[c].table[kp][kc];
      }
    }
    const double zw = log_sum4(w);
    for (int i = 0; i < 4; ++i) bt.pairwise[c][i] = std::exp(w[i] - zw);
  }
  return bt;
}

double log_likelihood(const ConceptTree& tree, const Parameters& params,
                      const ObservationSet& obs) {
  const auto up = upward_pass(tree, params, obs);
  const NodeIndex r = tree.root();
  const double g = params.gamma.at(r);
  return log_add(safe_log(1.0 - g) + up.log_beta[r][0],
                 safe_log(g) + up.log_beta[r][1]);
}

Prediction predict(const Parameters& params, const BeliefTable& belief,
                   const QuestionMeta& question) {
  if (question.kc >= belief.marginal.size()) {
    throw UnknownNodeError("#" + std::to_string(question.kc));
  }
  const double m = belief.marginal[question.kc];
  Prediction out;
  out.question_id = question.question_id;
  out.posterior_mastery = m;
  const double phi = params.r(question.difficulty);
  const double mixed = (1.0 - m) * params.epsilon + m * phi;
  // Rounding must not push a convex combination outside its endpoints.
  out.prob_correct = std::clamp(mixed, std::min(params.epsilon, phi),
                                std::max(params.epsilon, phi));
  return out;
}

std::string posteriors_to_json(const ConceptTree& tree,
                               const BeliefTable& belief) {
  nlohmann::ordered_json out = nlohmann::ordered_json::array();
  for (NodeIndex c = 0; c < tree.size(); ++c) {
    nlohmann::ordered_json rec;
    rec["node_id"] = tree.id(c);
    rec["posterior"] = belief.marginal.at(c);
    out.push_back(std::move(rec));
  }
  return out.dump(2) + "\n";
}

}  // namespace treekt
