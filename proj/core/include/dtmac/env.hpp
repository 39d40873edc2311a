#pragma once

#include <map>
#include <vector>

#include "dtmac/random.hpp"
#include "dtmac/system.hpp"

namespace dtmac {

// Draws the next cluster pattern from row `pattern` of `table`.
int sample_generation(int pattern, const ProbabilityTable& table, Rng& rng);

// P(d | a) for every d <= a elementwise. Nobody transmitting yields the
// all-zero delivery vector with probability one.
std::map<BitVector, double> mpr_distribution(const JointAction& action, const ProbabilityTable& mpr);
std::map<BitVector, double> mpr_distribution(const JointAction& action, const SystemConfig& config);

// Draws n_rx from the count table, then a uniform n_rx-subset of the transmitters.
BitVector sample_delivery(const JointAction& action, const ProbabilityTable& mpr, Rng& rng);

struct BufferStep {
  int q_next = 0;
  bool overflow = false;
};

// FIFO buffer with capacity q_max; a full buffer that receives a packet and
// fails to deliver drops its oldest packet.
BufferStep buffer_update(int q, int g_next, int d_next, int q_max);

double device_reward(const DeviceObservation& now, const DeviceObservation& next, int q_max, double xi);

double reward(const SystemState& state, const JointAction& action, const SystemState& next_state,
              const SystemConfig& config);

// One slot of the factored dynamics with the given tables standing in for
// the generation and MPR-count factors. Buffer rule and uniform receiver
// selection are structural and always applied exactly.
StepOutcome step(const DynamicsTables& tables, const SystemState& state, const JointAction& action,
                 const SystemConfig& config, Rng& rng);

inline StepOutcome step_ground_truth(const SystemState& state, const JointAction& action,
                                     const SystemConfig& config, Rng& rng) {
  return step(config.dynamics, state, action, config, rng);
}

// Exact product of generation, channel and buffer factors; 0 for next states
// that contradict the buffer rule.
double transition_probability(const DynamicsTables& tables, const SystemState& state,
                              const JointAction& action, const SystemState& next_state,
                              const SystemConfig& config);

inline double transition_probability(const SystemState& state, const JointAction& action,
                                     const SystemState& next_state, const SystemConfig& config) {
  return transition_probability(config.dynamics, state, action, next_state, config);
}

// A stationary distribution of a square row-stochastic table (Cesaro average
// of the power iterates from uniform, so periodic or reducible chains are fine).
std::vector<double> stationary_distribution(const ProbabilityTable& table);

// Empty buffers, no acknowledgements, generation bits from each cluster's
// stationary distribution under `tables`.
SystemState initial_state(const DynamicsTables& tables, const SystemConfig& config, Rng& rng);

// Every state in the product space {0..Q_max} x {0,1} x {0,1} per device.
std::vector<SystemState> enumerate_states(const SystemConfig& config);

}  // namespace dtmac
