#pragma once

#include <limits>
#include <optional>
#include <vector>

#include "dtmac/bayes.hpp"
#include "dtmac/policy.hpp"
#include "dtmac/random.hpp"
#include "dtmac/system.hpp"

namespace dtmac {

// Log-likelihoods below this are treated as impossible events.
inline constexpr double kLogLikelihoodFloor = -1e6;
inline constexpr double kMaxAnomalyScore = std::numeric_limits<double>::max();
inline constexpr double kImpossible = -std::numeric_limits<double>::infinity();

enum class ScoreKind { BayesianVariance, FrequentistNegLL };

struct AnomalyScore {
  double value = 0.0;
  ScoreKind kind = ScoreKind::BayesianVariance;
};

// Which log-likelihood the disagreement test uses: the full model (plus the
// policy term) or the generation factor of one cluster only.
struct LikelihoodKind {
  std::optional<int> cluster;  // empty = full likelihood

  static LikelihoodKind full() { return {}; }
  static LikelihoodKind of_cluster(int c) { return {c}; }
};

// sum_t log(T_theta(s'|s,a) * pi(a|s)); -inf if any factor is zero.
// `policy` may be null, which drops the policy term. t0 is the slot index
// of the first record (the policy sees t mod F).
double log_likelihood(const ModelSample& theta, const Dataset& dataset, const DevicePolicy* policy,
                      const SystemConfig& config, int t0 = 0);

double channel_log_likelihood(const ModelSample& theta, const Dataset& dataset, const SystemConfig& config);
double policy_log_likelihood(const DevicePolicy& policy, const Dataset& dataset, int t0 = 0);

// sum_t log P(g^{C}_{t+1} | g^{C}_t) for one cluster.
double cluster_log_likelihood(const ModelSample& theta, const Dataset& dataset, int cluster,
                              const SystemConfig& config);

// Sample variance of the log-likelihood over `num_samples` posterior draws.
// Any draw whose log-likelihood falls to the floor forces kMaxAnomalyScore.
// The policy term does not depend on theta and is left out.
AnomalyScore disagreement_score(const PosteriorModel& posterior, const Dataset& dataset, int num_samples,
                                LikelihoodKind kind, const SystemConfig& config, Rng& rng);

// Same statistic over pre-drawn models.
double log_likelihood_variance(const std::vector<ModelSample>& thetas, const Dataset& dataset,
                               LikelihoodKind kind, const SystemConfig& config);

// Negated cluster log-likelihood under a point estimate; larger = more anomalous.
AnomalyScore frequentist_score(const ModelSample& theta_map, const Dataset& dataset, int cluster,
                               const SystemConfig& config);

struct RocPoint {
  double threshold = 0.0;
  double fpr = 0.0;
  double tpr = 0.0;
};

struct RocCurve {
  std::vector<RocPoint> points;  // from (0,0) to (1,1), FPR and TPR nondecreasing
  double auc = 0.0;
};

// Flags "score >= threshold" for each distinct score, highest first. The
// first point (threshold +inf) is (0,0).
RocCurve roc_curve(const std::vector<double>& nominal, const std::vector<double>& anomalous);

// TPR at each FPR grid value, linear between curve points (the curve may
// have vertical steps; the highest TPR at a given FPR is used).
std::vector<double> tpr_at(const RocCurve& curve, const std::vector<double>& fpr_grid);

// Smallest grid FPR at which `tpr_curve` reaches `target`.
double fpr_at_tpr(const std::vector<double>& fpr_grid, const std::vector<double>& tpr_curve, double target);

}  // namespace dtmac
