#pragma once

#include <array>
#include <functional>
#include <optional>
#include <vector>

#include "dtmac/bayes.hpp"
#include "dtmac/nn.hpp"
#include "dtmac/random.hpp"
#include "dtmac/system.hpp"

namespace dtmac {

struct TrainConfig {
  int horizon = 100;
  int episodes_per_iteration = 32;
  int iterations = 100;
  // Episodes per posterior draw in Bayesian mode; 0 keeps one draw for the whole batch.
  int resample_period = 1;
  double td_lambda = 0.8;
  double entropy_weight = 0.01;  // decays linearly to 0 over `iterations`
  double actor_learning_rate = 1e-3;
  double critic_learning_rate = 1e-3;
  int critic_steps = 4;          // critic Adam steps per iteration
  int frame = 10;                // F in p_t = t mod F
  std::vector<int> actor_hidden{64, 64};
  std::vector<int> critic_hidden{128, 128};
  // Critic regresses rewards multiplied by this; 0 means 1 / xi.
  double reward_scale = 0.0;
  // Early stop when the smoothed batch return has not improved by
  // `plateau_tolerance` (relative) within `plateau_patience` iterations; 0 disables.
  int plateau_patience = 0;
  double plateau_tolerance = 0.01;
  int evaluation_cadence = 1;

  void validate() const;
};

// Where virtual rollouts get their dynamics: a posterior that is resampled
// periodically, or one fixed set of tables (MAP estimate or ground truth).
class ModelSource {
 public:
  static ModelSource bayesian(PosteriorModel posterior);
  static ModelSource fixed(ModelSample tables);

  bool is_bayesian() const { return posterior_.has_value(); }
  const PosteriorModel& posterior() const { return *posterior_; }
  const ModelSample& fixed_tables() const { return fixed_; }

 private:
  std::optional<PosteriorModel> posterior_;
  ModelSample fixed_;
};

struct RolloutStep {
  SystemState state;
  JointAction actions;
  std::vector<std::array<double, 2>> probs;  // per agent, as recorded
  int position = 0;                          // t mod F
  double reward = 0.0;
  int delivered = 0;
  int overflows = 0;
};

struct Episode {
  std::vector<RolloutStep> steps;
  SystemState final_state;
};

struct RolloutBatch {
  std::vector<Episode> episodes;
  int model_draws = 0;  // posterior samples used
};

// Optional override of the initial-state rule (for reduced test problems).
using InitialStateFn = std::function<SystemState(const DynamicsTables&, Rng&)>;

RolloutBatch generate_virtual_rollouts(const ModelSource& source, const PolicyParams& policy,
                                       const SystemConfig& config, const TrainConfig& train_config,
                                       Rng& rng, const InitialStateFn& initial = {});

// A = Q(a_taken) - sum_a' pi(a') Q(a').
double counterfactual_advantage(const std::array<double, 2>& q_values, int action_taken,
                                const std::array<double, 2>& probs);

// targets[e][t][k]: lambda-return regression target for agent k at step t of
// episode e, bootstrapped on the critic's value of the next taken action and
// 0 beyond the horizon. Rewards are multiplied by `reward_scale`.
std::vector<std::vector<std::vector<double>>> critic_targets(const RolloutBatch& batch,
                                                             const CriticParams& critic, double gamma,
                                                             double td_lambda, double reward_scale);

struct IterationMetrics {
  int iteration = 0;
  double mean_return = 0.0;   // discounted, from t = 0, unscaled reward
  double throughput = 0.0;    // delivered packets per slot
  double overflow_rate = 0.0; // per device per slot
  double entropy = 0.0;       // mean policy entropy over nonempty-buffer decisions
  double critic_loss = 0.0;
};

struct TrainResult {
  PolicyParams policy;
  CriticParams critic;
  std::vector<IterationMetrics> curve;
};

// COMA: centralized critic regression on lambda-returns, then one actor step
// on sum_k A^k grad log pi^k plus an entropy bonus. Throws NumericalError
// with the iteration index if a loss goes non-finite.
TrainResult train(const ModelSource& source, const SystemConfig& config, const TrainConfig& train_config,
                  Rng& rng, const InitialStateFn& initial = {});

// Same, continuing from given parameters.
TrainResult train(const ModelSource& source, const SystemConfig& config, const TrainConfig& train_config,
                  PolicyParams policy, CriticParams critic, Rng& rng, const InitialStateFn& initial = {});

}  // namespace dtmac
