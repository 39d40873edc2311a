#pragma once

#include <cmath>
#include <vector>

#include "dtmac/random.hpp"
#include "dtmac/system.hpp"

namespace dtmac::test {

// Uniform draw over the full observation space (ignores reachability).
inline SystemState random_state(const SystemConfig& config, Rng& rng) {
  SystemState s = empty_state(config.num_devices);
  for (int k = 0; k < config.num_devices; ++k) {
    s[std::size_t(k)].q = int(rng() % std::uint64_t(config.q_max[std::size_t(k)] + 1));
    s[std::size_t(k)].g = int(rng() % 2);
    s[std::size_t(k)].d = int(rng() % 2);
  }
  return s;
}

inline JointAction random_action(const SystemState& s, Rng& rng) {
  JointAction a(s.size(), 0);
  for (std::size_t k = 0; k < s.size(); ++k) a[k] = s[k].q > 0 ? std::uint8_t(rng() % 2) : 0;
  return a;
}

inline double binomial(int n, int k) {
  double r = 1.0;
  for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

}  // namespace dtmac::test
