#include "dtmac/monitor.hpp"

#include <algorithm>
#include <cmath>

#include "dtmac/env.hpp"
#include "dtmac/error.hpp"

namespace dtmac {

namespace {

double safe_log(double p) { return p > 0.0 ? std::log(p) : kImpossible; }

double model_log_likelihood(const ModelSample& theta, const Dataset& dataset, LikelihoodKind kind,
                            const SystemConfig& config) {
  if (kind.cluster) return cluster_log_likelihood(theta, dataset, *kind.cluster, config);
  return log_likelihood(theta, dataset, nullptr, config);
}

}  // namespace

double log_likelihood(const ModelSample& theta, const Dataset& dataset, const DevicePolicy* policy,
                      const SystemConfig& config, int t0) {
  double ll = 0.0;
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    const auto& rec = dataset[i];
    double p = transition_probability(theta, rec.state, rec.action, rec.next_state, config);
    if (policy) p *= joint_action_probability(*policy, rec.state, rec.action, t0 + static_cast<int>(i));
    if (!(p > 0.0)) return kImpossible;
    ll += std::log(p);
  }
  return ll;
}

double channel_log_likelihood(const ModelSample& theta, const Dataset& dataset, const SystemConfig& /*config*/) {
  double ll = 0.0;
  for (const auto& rec : dataset) {
    BitVector delivered(rec.next_state.size(), 0);
    for (std::size_t k = 0; k < delivered.size(); ++k) delivered[k] = static_cast<std::uint8_t>(rec.next_state[k].d);
    const auto dist = mpr_distribution(rec.action, theta.mpr);
    const auto it = dist.find(delivered);
    ll += safe_log(it == dist.end() ? 0.0 : it->second);
  }
  return ll;
}

double policy_log_likelihood(const DevicePolicy& policy, const Dataset& dataset, int t0) {
  double ll = 0.0;
  for (std::size_t i = 0; i < dataset.size(); ++i)
    ll += safe_log(joint_action_probability(policy, dataset[i].state, dataset[i].action, t0 + static_cast<int>(i)));
  return ll;
}

double cluster_log_likelihood(const ModelSample& theta, const Dataset& dataset, int cluster,
                              const SystemConfig& config) {
  if (cluster < 0 || cluster >= static_cast<int>(config.clusters.size()))
    throw ArgumentError("cluster_log_likelihood: no such cluster");
  const auto& members = config.clusters[static_cast<std::size_t>(cluster)];
  const auto& table = theta.generation[static_cast<std::size_t>(cluster)];
  double ll = 0.0;
  for (const auto& rec : dataset) {
    const double p = table[cluster_pattern(rec.state, members)][cluster_pattern(rec.next_state, members)];
    if (!(p > 0.0)) return kImpossible;
    ll += std::log(p);
  }
  return ll;
}

double log_likelihood_variance(const std::vector<ModelSample>& thetas, const Dataset& dataset, LikelihoodKind kind,
                               const SystemConfig& config) {
  if (thetas.size() < 2) throw ArgumentError("disagreement score needs at least two model samples");
  std::vector<double> lls;
  lls.reserve(thetas.size());
  for (const auto& theta : thetas) {
    const double ll = model_log_likelihood(theta, dataset, kind, config);
    if (!(ll > kLogLikelihoodFloor)) return kMaxAnomalyScore;
    lls.push_back(ll);
  }
  double mean = 0.0;
  for (const double v : lls) mean += v;
  mean /= static_cast<double>(lls.size());
  double ss = 0.0;
  for (const double v : lls) ss += (v - mean) * (v - mean);
  return ss / static_cast<double>(lls.size() - 1);
}

AnomalyScore disagreement_score(const PosteriorModel& posterior, const Dataset& dataset, int num_samples,
                                LikelihoodKind kind, const SystemConfig& config, Rng& rng) {
  if (num_samples < 2) throw ArgumentError("disagreement_score: num_samples must be >= 2");
  std::vector<ModelSample> thetas;
  thetas.reserve(static_cast<std::size_t>(num_samples));
  for (int i = 0; i < num_samples; ++i) thetas.push_back(sample_model(posterior, rng));
  return {log_likelihood_variance(thetas, dataset, kind, config), ScoreKind::BayesianVariance};
}

AnomalyScore frequentist_score(const ModelSample& theta_map, const Dataset& dataset, int cluster,
                               const SystemConfig& config) {
  const double ll = cluster_log_likelihood(theta_map, dataset, cluster, config);
  return {ll > kLogLikelihoodFloor ? -ll : kMaxAnomalyScore, ScoreKind::FrequentistNegLL};
}

RocCurve roc_curve(const std::vector<double>& nominal, const std::vector<double>& anomalous) {
  if (nominal.empty() || anomalous.empty()) throw ArgumentError("roc_curve: both score lists must be nonempty");
  std::vector<double> neg = nominal;
  std::vector<double> pos = anomalous;
  std::sort(neg.begin(), neg.end(), std::greater<>());
  std::sort(pos.begin(), pos.end(), std::greater<>());
  std::vector<double> thresholds;
  thresholds.reserve(neg.size() + pos.size());
  std::merge(neg.begin(), neg.end(), pos.begin(), pos.end(), std::back_inserter(thresholds), std::greater<>());
  thresholds.erase(std::unique(thresholds.begin(), thresholds.end()), thresholds.end());

  RocCurve curve;
  curve.points.push_back({INFINITY, 0.0, 0.0});
  std::size_t i_neg = 0;
  std::size_t i_pos = 0;
  const auto n_neg = static_cast<double>(neg.size());
  const auto n_pos = static_cast<double>(pos.size());
  for (const double thr : thresholds) {
    while (i_neg < neg.size() && neg[i_neg] >= thr) ++i_neg;
    while (i_pos < pos.size() && pos[i_pos] >= thr) ++i_pos;
    curve.points.push_back({thr, static_cast<double>(i_neg) / n_neg, static_cast<double>(i_pos) / n_pos});
  }
  for (std::size_t i = 1; i < curve.points.size(); ++i) {
    const auto& a = curve.points[i - 1];
    const auto& b = curve.points[i];
    curve.auc += (b.fpr - a.fpr) * 0.5 * (a.tpr + b.tpr);
  }
  return curve;
}

std::vector<double> tpr_at(const RocCurve& curve, const std::vector<double>& fpr_grid) {
  std::vector<double> out;
  out.reserve(fpr_grid.size());
  const auto& pts = curve.points;
  std::size_t i = 0;  // grid is nondecreasing
  for (const double x : fpr_grid) {
    // Last point with fpr <= x carries the highest TPR at that FPR.
    while (i + 1 < pts.size() && pts[i + 1].fpr <= x) ++i;
    if (pts[i].fpr == x || i + 1 == pts.size()) {
      out.push_back(pts[i].tpr);
    } else {
      const auto& a = pts[i];
      const auto& b = pts[i + 1];
      out.push_back(a.tpr + (b.tpr - a.tpr) * (x - a.fpr) / (b.fpr - a.fpr));
    }
  }
  return out;
}

double fpr_at_tpr(const std::vector<double>& fpr_grid, const std::vector<double>& tpr_curve, double target) {
  for (std::size_t i = 0; i < fpr_grid.size(); ++i)
    if (tpr_curve[i] >= target - 1e-12) return fpr_grid[i];
  return 1.0;
}

}  // namespace dtmac
