#pragma once

#include <vector>

#include "dtmac/random.hpp"
#include "dtmac/system.hpp"

namespace dtmac {

// Decentralized access policy: device k decides from its own observation and
// the slot index only.
class DevicePolicy {
 public:
  virtual ~DevicePolicy() = default;

  // Probability of transmitting. Must be 0 when obs.q == 0.
  virtual double transmit_probability(const DeviceObservation& obs, int t, int agent) const = 0;
};

// Transmits with probability p whenever the buffer is nonempty. p = 0 is the
// always-idle policy, p = 1 always transmits when it can.
class PersistentPolicy final : public DevicePolicy {
 public:
  explicit PersistentPolicy(double p);
  double transmit_probability(const DeviceObservation& obs, int t, int agent) const override;

 private:
  double p_;
};

JointAction sample_joint_action(const DevicePolicy& policy, const SystemState& state, int t, Rng& rng);

// prod_k pi^k(a^k | o^k, t).
double joint_action_probability(const DevicePolicy& policy, const SystemState& state,
                                const JointAction& action, int t);

}  // namespace dtmac
