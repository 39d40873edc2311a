#include "dtmac/policy.hpp"

#include "dtmac/error.hpp"

namespace dtmac {

PersistentPolicy::PersistentPolicy(double p) : p_(p) {
  if (!(p >= 0.0 && p <= 1.0)) throw ArgumentError("PersistentPolicy: p must lie in [0, 1]");
}

double PersistentPolicy::transmit_probability(const DeviceObservation& obs, int /*t*/, int /*agent*/) const {
  return obs.q > 0 ? p_ : 0.0;
}

JointAction sample_joint_action(const DevicePolicy& policy, const SystemState& state, int t, Rng& rng) {
  JointAction action(state.size(), 0);
  for (std::size_t k = 0; k < state.size(); ++k) {
    const double p = policy.transmit_probability(state[k], t, static_cast<int>(k));
    action[k] = (state[k].q > 0 && bernoulli(p, rng)) ? 1 : 0;
  }
  return action;
}

double joint_action_probability(const DevicePolicy& policy, const SystemState& state, const JointAction& action,
                                int t) {
  double p = 1.0;
  for (std::size_t k = 0; k < state.size(); ++k) {
    const double transmit = policy.transmit_probability(state[k], t, static_cast<int>(k));
    p *= action[k] ? transmit : 1.0 - transmit;
  }
  return p;
}

}  // namespace dtmac
