#include "dtmac/coma.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <unordered_map>

#include "dtmac/env.hpp"
#include "dtmac/error.hpp"

namespace dtmac {

namespace {

FeatureEncoding encoding_for(const SystemConfig& config, const TrainConfig& tc) {
  return FeatureEncoding{config.num_devices, config.max_queue() + 1, tc.frame};
}

// pi(. | o, p, k) for every actor input, indexed by the dense actor key.
std::vector<std::array<double, 2>> actor_table(const PolicyParams& policy, Eigen::MatrixXd* inputs_out = nullptr) {
  const auto& enc = policy.encoding;
  const int n = enc.queue_levels * 4 * enc.frame * enc.num_devices;
  Eigen::MatrixXd inputs(enc.actor_size(), n);
  std::vector<DeviceObservation> obs_of(static_cast<std::size_t>(n));
  for (int q = 0; q < enc.queue_levels; ++q)
    for (int g = 0; g < 2; ++g)
      for (int d = 0; d < 2; ++d)
        for (int p = 0; p < enc.frame; ++p)
          for (int k = 0; k < enc.num_devices; ++k) {
            const DeviceObservation obs{q, g, d};
            const auto key = static_cast<Eigen::Index>(enc.actor_key(obs, p, k));
            enc.encode_actor(obs, p, k, {inputs.col(key).data(), static_cast<std::size_t>(inputs.rows())});
            obs_of[static_cast<std::size_t>(key)] = obs;
          }
  const Eigen::MatrixXd logits = policy.network.forward(inputs);
  std::vector<std::array<double, 2>> table(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i)
    table[static_cast<std::size_t>(i)] = masked_softmax(obs_of[static_cast<std::size_t>(i)], logits(0, i), logits(1, i));
  if (inputs_out) *inputs_out = std::move(inputs);
  return table;
}

// Deduplicated critic inputs (s_t, a_t^{-k}, k) of a batch.
struct CriticInputs {
  Eigen::MatrixXd columns;
  // column[e][t * K + k]
  std::vector<std::vector<Eigen::Index>> column_of;
};

CriticInputs collect_critic_inputs(const RolloutBatch& batch, const FeatureEncoding& enc) {
  CriticInputs out;
  std::unordered_map<std::uint64_t, Eigen::Index> index;
  struct Source {
    const SystemState* state;
    const JointAction* actions;
    int agent;
  };
  std::vector<Source> sources;
  const int K = enc.num_devices;
  out.column_of.resize(batch.episodes.size());
  for (std::size_t e = 0; e < batch.episodes.size(); ++e) {
    const auto& steps = batch.episodes[e].steps;
    auto& cols = out.column_of[e];
    cols.resize(steps.size() * static_cast<std::size_t>(K));
    for (std::size_t t = 0; t < steps.size(); ++t)
      for (int k = 0; k < K; ++k) {
        const auto key = enc.critic_key(steps[t].state, steps[t].actions, k);
        auto [it, inserted] = index.try_emplace(key, static_cast<Eigen::Index>(sources.size()));
        if (inserted) sources.push_back({&steps[t].state, &steps[t].actions, k});
        cols[t * static_cast<std::size_t>(K) + static_cast<std::size_t>(k)] = it->second;
      }
  }
  out.columns.resize(enc.critic_size(), static_cast<Eigen::Index>(sources.size()));
  for (std::size_t i = 0; i < sources.size(); ++i)
    enc.encode_critic(*sources[i].state, *sources[i].actions, sources[i].agent,
                      {out.columns.col(static_cast<Eigen::Index>(i)).data(), static_cast<std::size_t>(out.columns.rows())});
  return out;
}

std::vector<std::vector<std::vector<double>>> lambda_returns(const RolloutBatch& batch, const CriticInputs& inputs,
                                                             const Eigen::MatrixXd& q_values, int K, double gamma,
                                                             double td_lambda, double reward_scale) {
  std::vector<std::vector<std::vector<double>>> targets(batch.episodes.size());
  for (std::size_t e = 0; e < batch.episodes.size(); ++e) {
    const auto& steps = batch.episodes[e].steps;
    const auto H = steps.size();
    auto& out = targets[e];
    out.assign(H, std::vector<double>(static_cast<std::size_t>(K), 0.0));
    for (int k = 0; k < K; ++k) {
      double g_next = 0.0;  // lambda-return of step t + 1; 0 beyond the horizon
      for (std::size_t t = H; t-- > 0;) {
        double bootstrap = 0.0;
        if (t + 1 < H) {
          const auto col = inputs.column_of[e][(t + 1) * static_cast<std::size_t>(K) + static_cast<std::size_t>(k)];
          bootstrap = q_values(steps[t + 1].actions[k], col);
        }
        const double g = steps[t].reward * reward_scale + gamma * ((1.0 - td_lambda) * bootstrap + td_lambda * g_next);
        out[t][static_cast<std::size_t>(k)] = g;
        g_next = g;
      }
    }
  }
  return targets;
}

double entropy_of(const std::array<double, 2>& p) {
  double h = 0.0;
  for (const double v : p)
    if (v > 0.0) h -= v * std::log(v);
  return h;
}

IterationMetrics batch_metrics(const RolloutBatch& batch, int K, double gamma) {
  IterationMetrics m;
  double slots = 0.0;
  double decisions = 0.0;
  for (const auto& ep : batch.episodes) {
    double discount = 1.0;
    double ret = 0.0;
    for (const auto& step : ep.steps) {
      ret += discount * step.reward;
      discount *= gamma;
      m.throughput += step.delivered;
      m.overflow_rate += step.overflows;
      slots += 1.0;
      for (int k = 0; k < K; ++k)
        if (step.state[k].q > 0) {
          m.entropy += entropy_of(step.probs[static_cast<std::size_t>(k)]);
          decisions += 1.0;
        }
    }
    m.mean_return += ret;
  }
  const double episodes = static_cast<double>(std::max<std::size_t>(1, batch.episodes.size()));
  m.mean_return /= episodes;
  if (slots > 0) {
    m.throughput /= slots;
    m.overflow_rate /= slots * K;
  }
  if (decisions > 0) m.entropy /= decisions;
  return m;
}

}  // namespace

void TrainConfig::validate() const {
  if (horizon < 1 || episodes_per_iteration < 1 || iterations < 0 || critic_steps < 1 || frame < 1)
    throw ArgumentError("TrainConfig: horizon, episodes, critic steps and frame must be positive");
  if (resample_period < 0) throw ArgumentError("TrainConfig: resample period must be >= 0");
  if (!(td_lambda >= 0.0 && td_lambda <= 1.0)) throw ArgumentError("TrainConfig: lambda must lie in [0, 1]");
  if (!(entropy_weight >= 0.0)) throw ArgumentError("TrainConfig: entropy weight must be >= 0");
  if (!(actor_learning_rate > 0.0) || !(critic_learning_rate > 0.0))
    throw ArgumentError("TrainConfig: learning rates must be positive");
  if (reward_scale < 0.0) throw ArgumentError("TrainConfig: reward scale must be >= 0");
  if (plateau_patience < 0 || evaluation_cadence < 1) throw ArgumentError("TrainConfig: bad plateau/cadence settings");
  for (const int h : actor_hidden)
    if (h < 1) throw ArgumentError("TrainConfig: hidden sizes must be positive");
  for (const int h : critic_hidden)
    if (h < 1) throw ArgumentError("TrainConfig: hidden sizes must be positive");
}

ModelSource ModelSource::bayesian(PosteriorModel posterior) {
  ModelSource s;
  s.posterior_ = std::move(posterior);
  return s;
}

ModelSource ModelSource::fixed(ModelSample tables) {
  ModelSource s;
  s.fixed_ = std::move(tables);
  return s;
}

RolloutBatch generate_virtual_rollouts(const ModelSource& source, const PolicyParams& policy,
                                       const SystemConfig& config, const TrainConfig& tc, Rng& rng,
                                       const InitialStateFn& initial) {
  const auto table = actor_table(policy);
  const auto& enc = policy.encoding;
  const int K = config.num_devices;
  // Posterior draws use their own stream so that the environment stream is
  // the same whether or not the model is resampled.
  Rng model_rng(rng());

  RolloutBatch batch;
  batch.episodes.resize(static_cast<std::size_t>(tc.episodes_per_iteration));
  ModelSample sampled;
  const ModelSample* theta = source.is_bayesian() ? &sampled : &source.fixed_tables();
  for (int e = 0; e < tc.episodes_per_iteration; ++e) {
    if (source.is_bayesian()) {
      const bool redraw = tc.resample_period == 0 ? e == 0 : e % tc.resample_period == 0;
      if (redraw) {
        sampled = sample_model(source.posterior(), model_rng);
        ++batch.model_draws;
      }
    }
    auto& episode = batch.episodes[static_cast<std::size_t>(e)];
    SystemState state = initial ? initial(*theta, rng) : initial_state(*theta, config, rng);
    episode.steps.reserve(static_cast<std::size_t>(tc.horizon));
    for (int t = 0; t < tc.horizon; ++t) {
      RolloutStep step;
      step.position = t % enc.frame;
      step.actions.assign(static_cast<std::size_t>(K), 0);
      step.probs.resize(static_cast<std::size_t>(K));
      for (int k = 0; k < K; ++k) {
        const auto& probs = table[enc.actor_key(state[k], step.position, k)];
        step.probs[static_cast<std::size_t>(k)] = probs;
        step.actions[static_cast<std::size_t>(k)] = (state[k].q > 0 && uniform01(rng) < probs[1]) ? 1 : 0;
      }
      auto outcome = dtmac::step(*theta, state, step.actions, config, rng);
      step.reward = outcome.reward;
      step.delivered = count_ones(outcome.delivered);
      step.overflows = count_ones(outcome.overflow);
      step.state = std::move(state);
      state = std::move(outcome.next_state);
      episode.steps.push_back(std::move(step));
    }
    episode.final_state = std::move(state);
  }
  return batch;
}

double counterfactual_advantage(const std::array<double, 2>& q_values, int action_taken,
                                const std::array<double, 2>& probs) {
  const double baseline = probs[0] * q_values[0] + probs[1] * q_values[1];
  return q_values[static_cast<std::size_t>(action_taken)] - baseline;
}

std::vector<std::vector<std::vector<double>>> critic_targets(const RolloutBatch& batch, const CriticParams& critic,
                                                             double gamma, double td_lambda, double reward_scale) {
  const auto inputs = collect_critic_inputs(batch, critic.encoding);
  const Eigen::MatrixXd q = critic.network.forward(inputs.columns);
  return lambda_returns(batch, inputs, q, critic.encoding.num_devices, gamma, td_lambda, reward_scale);
}

TrainResult train(const ModelSource& source, const SystemConfig& config, const TrainConfig& tc, Rng& rng,
                  const InitialStateFn& initial) {
  tc.validate();
  const auto enc = encoding_for(config, tc);
  Rng init_rng(rng());
  auto policy = make_policy(enc, tc.actor_hidden, init_rng);
  auto critic = make_critic(enc, tc.critic_hidden, init_rng);
  return train(source, config, tc, std::move(policy), std::move(critic), rng, initial);
}

TrainResult train(const ModelSource& source, const SystemConfig& config, const TrainConfig& tc, PolicyParams policy,
                  CriticParams critic, Rng& rng, const InitialStateFn& initial) {
  tc.validate();
  const int K = config.num_devices;
  const double reward_scale = tc.reward_scale > 0.0 ? tc.reward_scale : 1.0 / config.xi;
  AdamState actor_opt;
  AdamState critic_opt;
  const AdamConfig actor_adam{tc.actor_learning_rate};
  const AdamConfig critic_adam{tc.critic_learning_rate};

  TrainResult result;
  double best_smoothed = -INFINITY;
  double smoothed = 0.0;
  int last_improvement = 0;

  for (int it = 0; it < tc.iterations; ++it) {
    const auto batch = generate_virtual_rollouts(source, policy, config, tc, rng, initial);
    auto metrics = batch_metrics(batch, K, config.gamma);
    metrics.iteration = it;

    // Critic: weighted least squares on deduplicated inputs.
    const auto inputs = collect_critic_inputs(batch, critic.encoding);
    const Eigen::Index U = inputs.columns.cols();
    Eigen::MatrixXd q_before = critic.network.forward(inputs.columns);
    const auto targets = lambda_returns(batch, inputs, q_before, K, config.gamma, tc.td_lambda, reward_scale);
    Eigen::MatrixXd target_sum = Eigen::MatrixXd::Zero(2, U);
    Eigen::MatrixXd target_count = Eigen::MatrixXd::Zero(2, U);
    double target_sq = 0.0;
    double samples = 0.0;
    for (std::size_t e = 0; e < batch.episodes.size(); ++e) {
      const auto& steps = batch.episodes[e].steps;
      for (std::size_t t = 0; t < steps.size(); ++t)
        for (int k = 0; k < K; ++k) {
          const auto col = inputs.column_of[e][t * static_cast<std::size_t>(K) + static_cast<std::size_t>(k)];
          const int a = steps[t].actions[static_cast<std::size_t>(k)];
          const double y = targets[e][t][static_cast<std::size_t>(k)];
          target_sum(a, col) += y;
          target_count(a, col) += 1.0;
          target_sq += y * y;
          samples += 1.0;
        }
    }
    double critic_loss = 0.0;
    for (int s = 0; s < tc.critic_steps; ++s) {
      Mlp::Trace trace;
      const Eigen::MatrixXd q = critic.network.forward(inputs.columns, trace);
      // d/dQ of (1/2N) sum_i (Q_i - y_i)^2, grouped by input and action.
      const Eigen::MatrixXd adjoint = (target_count.cwiseProduct(q) - target_sum) / samples;
      critic_loss = (0.5 * (target_count.cwiseProduct(q.cwiseAbs2()) - 2.0 * target_sum.cwiseProduct(q)).sum() +
                     0.5 * target_sq) /
                    samples;
      if (!std::isfinite(critic_loss)) throw NumericalError("critic loss diverged at iteration " + std::to_string(it), it);
      const auto grad = critic.network.backward(trace, adjoint);
      optimizer_step(critic.network.parameters(), grad, critic_opt, critic_adam);
    }
    metrics.critic_loss = critic_loss;

    // Actor: counterfactual advantages from the updated critic.
    const Eigen::MatrixXd q_after = critic.network.forward(inputs.columns);
    const double entropy_weight =
        tc.iterations > 0 ? tc.entropy_weight * (1.0 - static_cast<double>(it) / tc.iterations) : 0.0;
    const auto& enc = policy.encoding;
    Eigen::MatrixXd actor_inputs;
    actor_table(policy, &actor_inputs);
    Eigen::MatrixXd logit_adjoint = Eigen::MatrixXd::Zero(2, actor_inputs.cols());
    double actor_objective = 0.0;
    for (std::size_t e = 0; e < batch.episodes.size(); ++e) {
      const auto& steps = batch.episodes[e].steps;
      for (std::size_t t = 0; t < steps.size(); ++t)
        for (int k = 0; k < K; ++k) {
          const auto& step = steps[t];
          if (step.state[k].q == 0) continue;  // masked: pi is fixed, no gradient
          const auto col = inputs.column_of[e][t * static_cast<std::size_t>(K) + static_cast<std::size_t>(k)];
          const std::array<double, 2> qk{q_after(0, col), q_after(1, col)};
          const auto& pi = step.probs[static_cast<std::size_t>(k)];
          const int a = step.actions[static_cast<std::size_t>(k)];
          const double adv = counterfactual_advantage(qk, a, pi);
          const double h = entropy_of(pi);
          actor_objective += adv * std::log(std::max(pi[static_cast<std::size_t>(a)], 1e-300)) + entropy_weight * h;
          const auto key = static_cast<Eigen::Index>(enc.actor_key(step.state[k], step.position, k));
          for (int i = 0; i < 2; ++i) {
            const double indicator = i == a ? 1.0 : 0.0;
            const double dlogp = indicator - pi[static_cast<std::size_t>(i)];
            const double p_i = pi[static_cast<std::size_t>(i)];
            const double dh = p_i > 0.0 ? -p_i * (std::log(p_i) + h) : 0.0;
            // Minimizing the negated objective.
            logit_adjoint(i, key) -= (adv * dlogp + entropy_weight * dh) / samples;
          }
        }
    }
    if (!std::isfinite(actor_objective))
      throw NumericalError("actor objective diverged at iteration " + std::to_string(it), it);
    {
      Mlp::Trace trace;
      policy.network.forward(actor_inputs, trace);
      const auto grad = policy.network.backward(trace, logit_adjoint);
      optimizer_step(policy.network.parameters(), grad, actor_opt, actor_adam);
    }

    if (it % tc.evaluation_cadence == 0 || it + 1 == tc.iterations) result.curve.push_back(metrics);

    if (tc.plateau_patience > 0) {
      smoothed = it == 0 ? metrics.mean_return : 0.9 * smoothed + 0.1 * metrics.mean_return;
      if (smoothed > best_smoothed + tc.plateau_tolerance * std::abs(best_smoothed) || it == 0) {
        best_smoothed = smoothed;
        last_improvement = it;
      } else if (it - last_improvement >= tc.plateau_patience) {
        if (result.curve.empty() || result.curve.back().iteration != it) result.curve.push_back(metrics);
        break;
      }
    }
  }
  result.policy = std::move(policy);
  result.critic = std::move(critic);
  return result;
}

}  // namespace dtmac
