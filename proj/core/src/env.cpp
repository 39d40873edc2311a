#include "dtmac/env.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <numeric>
#include <string>

#include "dtmac/error.hpp"

namespace dtmac {

namespace {

double binomial(int n, int k) {
  double c = 1.0;
  for (int i = 1; i <= k; ++i) c = c * (n - k + i) / i;
  return c;
}

double delivery_probability(const JointAction& action, const BitVector& delivered, const ProbabilityTable& mpr) {
  int n_tx = 0;
  int n_rx = 0;
  for (std::size_t k = 0; k < action.size(); ++k) {
    if (delivered[k] > action[k]) return 0.0;
    n_tx += action[k];
    n_rx += delivered[k];
  }
  if (n_tx == 0) return 1.0;  // delivered is necessarily all-zero here
  return mpr[n_tx - 1][n_rx] / binomial(n_tx, n_rx);
}

std::vector<double> cesaro_stationary(const Eigen::MatrixXd& P) {
  // A_n = (1/n) sum_{i<n} P^i by doubling: S_2n = S_n + P^n S_n.
  const auto n = P.rows();
  Eigen::MatrixXd power = P;
  Eigen::MatrixXd sum = Eigen::MatrixXd::Identity(n, n);
  double count = 1.0;
  for (int i = 0; i < 24; ++i) {
    sum = sum + power * sum;
    power = power * power;
    count *= 2.0;
  }
  const Eigen::RowVectorXd start = Eigen::RowVectorXd::Constant(n, 1.0 / static_cast<double>(n));
  Eigen::RowVectorXd pi = start * sum / count;
  pi = pi.cwiseMax(0.0);
  pi /= pi.sum();
  return {pi.data(), pi.data() + n};
}

}  // namespace

int sample_generation(int pattern, const ProbabilityTable& table, Rng& rng) {
  if (pattern < 0 || pattern >= static_cast<int>(table.size()))
    throw ConfigError("sample_generation: pattern " + std::to_string(pattern) + " has no row");
  return sample_categorical(table[pattern], rng);
}

std::map<BitVector, double> mpr_distribution(const JointAction& action, const ProbabilityTable& mpr) {
  std::vector<std::size_t> transmitters;
  for (std::size_t k = 0; k < action.size(); ++k)
    if (action[k]) transmitters.push_back(k);
  std::map<BitVector, double> out;
  const std::size_t subsets = std::size_t{1} << transmitters.size();
  for (std::size_t mask = 0; mask < subsets; ++mask) {
    BitVector d(action.size(), 0);
    for (std::size_t j = 0; j < transmitters.size(); ++j)
      if ((mask >> j) & 1U) d[transmitters[j]] = 1;
    out[d] = delivery_probability(action, d, mpr);
  }
  return out;
}

std::map<BitVector, double> mpr_distribution(const JointAction& action, const SystemConfig& config) {
  return mpr_distribution(action, config.dynamics.mpr);
}

BitVector sample_delivery(const JointAction& action, const ProbabilityTable& mpr, Rng& rng) {
  std::vector<std::size_t> transmitters;
  for (std::size_t k = 0; k < action.size(); ++k)
    if (action[k]) transmitters.push_back(k);
  BitVector delivered(action.size(), 0);
  if (transmitters.empty()) return delivered;
  const int n_rx = sample_categorical(mpr[transmitters.size() - 1], rng);
  // Partial Fisher-Yates: the first n_rx entries form a uniform subset.
  for (int j = 0; j < n_rx; ++j) {
    const auto remaining = transmitters.size() - static_cast<std::size_t>(j);
    const auto pick = static_cast<std::size_t>(j) +
                      std::min(remaining - 1, static_cast<std::size_t>(uniform01(rng) * static_cast<double>(remaining)));
    std::swap(transmitters[static_cast<std::size_t>(j)], transmitters[pick]);
    delivered[transmitters[static_cast<std::size_t>(j)]] = 1;
  }
  return delivered;
}

BufferStep buffer_update(int q, int g_next, int d_next, int q_max) {
  if (q < 0 || q > q_max) throw ContractViolation("buffer_update: q=" + std::to_string(q) + " outside [0, Q_max]");
  if ((g_next != 0 && g_next != 1) || (d_next != 0 && d_next != 1))
    throw ContractViolation("buffer_update: g and d must be bits");
  if (q == 0 && d_next == 1) throw ContractViolation("buffer_update: delivery from an empty buffer");
  BufferStep out;
  out.q_next = std::min(q_max, q + g_next - d_next);
  out.overflow = q == q_max && g_next == 1 && d_next == 0;
  return out;
}

double device_reward(const DeviceObservation& now, const DeviceObservation& next, int q_max, double xi) {
  if (next.d == 1) return xi;
  if (now.q == q_max && next.g == 1) return -xi;
  return -1.0;
}

double reward(const SystemState& state, const JointAction& /*action*/, const SystemState& next_state,
              const SystemConfig& config) {
  double r = 0.0;
  for (int k = 0; k < config.num_devices; ++k)
    r += config.beta[k] * device_reward(state[k], next_state[k], config.q_max[k], config.xi);
  return r;
}

StepOutcome step(const DynamicsTables& tables, const SystemState& state, const JointAction& action,
                 const SystemConfig& config, Rng& rng) {
  if (state.size() != static_cast<std::size_t>(config.num_devices))
    throw ContractViolation("step: state has wrong number of devices");
  if (!action_compatible(state, action)) throw ContractViolation("step: action transmits from an empty buffer");

  StepOutcome out;
  out.next_state = empty_state(config.num_devices);
  for (std::size_t i = 0; i < config.clusters.size(); ++i) {
    const auto& members = config.clusters[i];
    const int next = sample_generation(cluster_pattern(state, members), tables.generation[i], rng);
    scatter_pattern(next, members, out.next_state);
  }
  out.delivered = sample_delivery(action, tables.mpr, rng);
  out.overflow.assign(action.size(), 0);
  for (int k = 0; k < config.num_devices; ++k) {
    auto& next = out.next_state[k];
    next.d = out.delivered[k];
    const auto buf = buffer_update(state[k].q, next.g, next.d, config.q_max[k]);
    next.q = buf.q_next;
    out.overflow[k] = buf.overflow ? 1 : 0;
  }
  out.reward = reward(state, action, out.next_state, config);
  return out;
}

double transition_probability(const DynamicsTables& tables, const SystemState& state, const JointAction& action,
                              const SystemState& next_state, const SystemConfig& config) {
  if (!action_compatible(state, action))
    throw ContractViolation("transition_probability: action transmits from an empty buffer");
  if (next_state.size() != state.size()) return 0.0;
  BitVector delivered(state.size(), 0);
  for (int k = 0; k < config.num_devices; ++k) {
    const auto& next = next_state[k];
    if ((next.g != 0 && next.g != 1) || (next.d != 0 && next.d != 1)) return 0.0;
    if (next.d > action[k]) return 0.0;
    if (next.q != std::min(config.q_max[k], state[k].q + next.g - next.d)) return 0.0;
    delivered[k] = static_cast<std::uint8_t>(next.d);
  }
  double p = delivery_probability(action, delivered, tables.mpr);
  for (std::size_t i = 0; i < config.clusters.size() && p > 0.0; ++i) {
    const auto& members = config.clusters[i];
    p *= tables.generation[i][cluster_pattern(state, members)][cluster_pattern(next_state, members)];
  }
  return p;
}

std::vector<double> stationary_distribution(const ProbabilityTable& table) {
  const auto n = static_cast<Eigen::Index>(table.size());
  Eigen::MatrixXd P(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) P(i, j) = table[i][j];

  // pi (P - I) = 0 with the last equation replaced by sum(pi) = 1.
  Eigen::MatrixXd A = P.transpose() - Eigen::MatrixXd::Identity(n, n);
  A.row(n - 1).setOnes();
  Eigen::VectorXd b = Eigen::VectorXd::Zero(n);
  b(n - 1) = 1.0;
  const Eigen::FullPivLU<Eigen::MatrixXd> lu(A);
  if (lu.isInvertible()) {
    Eigen::VectorXd pi = lu.solve(b);
    const double residual = (pi.transpose() * P - pi.transpose()).cwiseAbs().sum();
    if (pi.allFinite() && pi.minCoeff() > -1e-12 && residual < 1e-10) {
      pi = pi.cwiseMax(0.0);
      pi /= pi.sum();
      return {pi.data(), pi.data() + n};
    }
  }
  return cesaro_stationary(P);
}

SystemState initial_state(const DynamicsTables& tables, const SystemConfig& config, Rng& rng) {
  SystemState state = empty_state(config.num_devices);
  for (std::size_t i = 0; i < config.clusters.size(); ++i) {
    const auto pi = stationary_distribution(tables.generation[i]);
    scatter_pattern(sample_categorical(pi, rng), config.clusters[i], state);
  }
  return state;
}

std::vector<SystemState> enumerate_states(const SystemConfig& config) {
  std::vector<SystemState> states{empty_state(config.num_devices)};
  for (int k = 0; k < config.num_devices; ++k) {
    std::vector<SystemState> grown;
    for (const auto& partial : states)
      for (int q = 0; q <= config.q_max[k]; ++q)
        for (int g = 0; g <= 1; ++g)
          for (int d = 0; d <= 1; ++d) {
            SystemState s = partial;
            s[k] = DeviceObservation{q, g, d};
            grown.push_back(std::move(s));
          }
    states = std::move(grown);
  }
  return states;
}

}  // namespace dtmac
