#pragma once

#include <compare>
#include <cstdint>
#include <vector>

namespace dtmac {

// Per-device observation o^k = (q, g, d).
struct DeviceObservation {
  int q = 0;  // packets in buffer
  int g = 0;  // new packet generated this slot
  int d = 0;  // packet sent in the previous slot was acknowledged

  auto operator<=>(const DeviceObservation&) const = default;
};

// Joint observation of all devices; the state is jointly observable.
struct SystemState {
  std::vector<DeviceObservation> devices;

  std::size_t size() const { return devices.size(); }
  DeviceObservation& operator[](std::size_t k) { return devices[k]; }
  const DeviceObservation& operator[](std::size_t k) const { return devices[k]; }
  auto operator<=>(const SystemState&) const = default;
};

using BitVector = std::vector<std::uint8_t>;

// a^k = 1 transmits the head-of-line packet.
using JointAction = BitVector;

// Row-stochastic table. Rows may differ in length (the MPR table is ragged).
using ProbabilityTable = std::vector<std::vector<double>>;

// The learnable factors of the dynamics. generation[i] is indexed by the
// cluster bit pattern (bit j = g of the j-th member of cluster i) for both
// the conditioning row and the outcome column. mpr[n_tx - 1][n_rx] holds
// P(n_rx | n_tx) for n_tx in 1..K.
struct DynamicsTables {
  std::vector<ProbabilityTable> generation;
  ProbabilityTable mpr;

  bool operator==(const DynamicsTables&) const = default;
};

// A concrete realization of every learned table.
using ModelSample = DynamicsTables;

struct SystemConfig {
  int num_devices = 0;
  std::vector<std::vector<int>> clusters;  // 0-based device indices
  std::vector<int> q_max;
  DynamicsTables dynamics;  // ground truth
  std::vector<double> beta;
  double xi = 50.0;
  double gamma = 0.95;

  // Throws ConfigError when any structural or stochastic invariant fails.
  void validate() const;
  void validate_tables(const DynamicsTables& tables) const;

  int max_queue() const;
  int cluster_of(int device) const;
};

struct TransitionRecord {
  SystemState state;
  JointAction action;
  SystemState next_state;

  bool operator==(const TransitionRecord&) const = default;
};

using Dataset = std::vector<TransitionRecord>;

struct StepOutcome {
  SystemState next_state;
  double reward = 0.0;
  BitVector delivered;
  BitVector overflow;
};

// Pattern index of a cluster's generation bits.
int cluster_pattern(const SystemState& state, const std::vector<int>& members);

// Writes the bits of `pattern` into the g fields of the cluster members.
void scatter_pattern(int pattern, const std::vector<int>& members, SystemState& state);

int count_ones(const BitVector& bits);

SystemState empty_state(int num_devices);

// Checks a^k <= q^k for every device.
bool action_compatible(const SystemState& state, const JointAction& action);

// The configuration used in the case-study evaluation: four devices, two
// clusters, unit buffers, mutually exclusive arrivals, two-packet MPR channel.
SystemConfig reference_config();

}  // namespace dtmac
