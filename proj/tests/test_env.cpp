#include <doctest.h>

#include <map>

#include "dtmac/env.hpp"
#include "dtmac/error.hpp"
#include "support.hpp"

using namespace dtmac;
using dtmac::test::binomial;

namespace {

BitVector bits(std::initializer_list<int> v) {
  BitVector b;
  for (int x : v) b.push_back(std::uint8_t(x));
  return b;
}

BitVector from_mask(unsigned mask, int K) {
  BitVector b(std::size_t(K), 0);
  for (int k = 0; k < K; ++k) b[std::size_t(k)] = (mask >> k) & 1u;
  return b;
}

// Independent evaluation of P(d | a) straight from the count table.
double brute_force_delivery(const BitVector& a, const BitVector& d, const ProbabilityTable& mpr) {
  int n_tx = 0, n_rx = 0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    if (d[k] > a[k]) return 0.0;
    n_tx += a[k];
    n_rx += d[k];
  }
  if (n_tx == 0) return n_rx == 0 ? 1.0 : 0.0;
  return mpr[std::size_t(n_tx - 1)][std::size_t(n_rx)] / binomial(n_tx, n_rx);
}

}  // namespace

TEST_CASE("generation sampling never draws a zero-probability pattern") {
  const auto config = reference_config();
  Rng rng(11);
  std::vector<int> counts(4, 0);
  const int n = 100000;
  for (int i = 0; i < n; ++i) ++counts[std::size_t(sample_generation(i % 3, config.dynamics.generation[0], rng))];
  CHECK(counts[3] == 0);
  CHECK(std::abs(counts[0] / double(n) - 0.2) < 0.01);
  CHECK(std::abs(counts[1] / double(n) - 0.4) < 0.01);
  CHECK(std::abs(counts[2] / double(n) - 0.4) < 0.01);

  const ProbabilityTable degenerate(4, {1.0, 0.0, 0.0, 0.0});
  for (int i = 0; i < 100; ++i) CHECK(sample_generation(i % 4, degenerate, rng) == 0);
  CHECK_THROWS_AS(sample_generation(4, degenerate, rng), ConfigError);
}

TEST_CASE("MPR distribution examples") {
  const auto config = reference_config();
  auto single = mpr_distribution(bits({1, 0, 0, 0}), config);
  CHECK(single[bits({1, 0, 0, 0})] == doctest::Approx(1.0));
  CHECK(single[bits({0, 0, 0, 0})] == 0.0);

  auto pair = mpr_distribution(bits({1, 1, 0, 0}), config);
  CHECK(pair[bits({1, 0, 0, 0})] == doctest::Approx(0.4));
  CHECK(pair[bits({0, 1, 0, 0})] == doctest::Approx(0.4));
  CHECK(pair[bits({1, 1, 0, 0})] == doctest::Approx(0.2));
  CHECK(pair[bits({0, 0, 0, 0})] == doctest::Approx(0.0));

  auto triple = mpr_distribution(bits({1, 1, 1, 0}), config);
  CHECK(triple[bits({0, 0, 0, 0})] == doctest::Approx(1.0));

  auto none = mpr_distribution(bits({0, 0, 0, 0}), config);
  CHECK(none.size() == 1);
  CHECK(none[bits({0, 0, 0, 0})] == 1.0);
}

TEST_CASE("MPR distribution matches brute-force enumeration for every action") {
  const auto config = reference_config();
  for (unsigned am = 0; am < 16; ++am) {
    const auto a = from_mask(am, 4);
    const auto dist = mpr_distribution(a, config);
    double total = 0.0;
    for (const auto& [d, p] : dist) {
      total += p;
      for (std::size_t k = 0; k < 4; ++k) CHECK(d[k] <= a[k]);
    }
    CHECK(std::abs(total - 1.0) < 1e-9);
    for (unsigned dm = 0; dm < 16; ++dm) {
      const auto d = from_mask(dm, 4);
      const auto it = dist.find(d);
      const double got = it == dist.end() ? 0.0 : it->second;
      CHECK(std::abs(got - brute_force_delivery(a, d, config.dynamics.mpr)) < 1e-12);
    }
  }
}

TEST_CASE("delivery sampling matches the enumerated distribution") {
  const auto config = reference_config();
  Rng rng(12);
  const auto a = bits({1, 1, 0, 0});
  std::map<BitVector, int> counts;
  const int n = 100000;
  for (int i = 0; i < n; ++i) ++counts[sample_delivery(a, config.dynamics.mpr, rng)];
  for (const auto& [d, p] : mpr_distribution(a, config)) CHECK(std::abs(counts[d] / double(n) - p) < 0.01);
  CHECK(sample_delivery(bits({0, 0, 0, 0}), config.dynamics.mpr, rng) == bits({0, 0, 0, 0}));
  CHECK(sample_delivery(bits({1, 0, 0, 0}), config.dynamics.mpr, rng) == bits({1, 0, 0, 0}));
}

TEST_CASE("buffer update") {
  auto r = buffer_update(1, 1, 0, 1);
  CHECK(r.q_next == 1);
  CHECK(r.overflow);
  r = buffer_update(0, 0, 0, 1);
  CHECK(r.q_next == 0);
  CHECK_FALSE(r.overflow);
  r = buffer_update(1, 0, 1, 1);
  CHECK(r.q_next == 0);
  CHECK_FALSE(r.overflow);
  r = buffer_update(1, 1, 1, 1);
  CHECK(r.q_next == 1);
  CHECK_FALSE(r.overflow);
  r = buffer_update(0, 1, 0, 1);
  CHECK(r.q_next == 1);
  CHECK_FALSE(r.overflow);
  CHECK_THROWS_AS(buffer_update(2, 0, 0, 1), ContractViolation);
  CHECK_THROWS_AS(buffer_update(-1, 0, 0, 1), ContractViolation);
  CHECK_THROWS_AS(buffer_update(0, 0, 1, 1), ContractViolation);

  for (int qmax = 1; qmax <= 3; ++qmax)
    for (int q = 0; q <= qmax; ++q)
      for (int g = 0; g < 2; ++g)
        for (int d = 0; d <= std::min(q, 1); ++d) {
          const auto out = buffer_update(q, g, d, qmax);
          CHECK(out.q_next >= 0);
          CHECK(out.q_next <= qmax);
          CHECK(out.q_next == std::min(qmax, q + g - d));
          CHECK(out.overflow == (q == qmax && g == 1 && d == 0));
          if (out.overflow) CHECK(out.q_next == qmax);
        }
}

TEST_CASE("reward arithmetic") {
  const auto config = reference_config();
  auto s = empty_state(4);
  auto n = empty_state(4);
  const JointAction idle(4, 0);
  CHECK(reward(s, idle, n, config) == doctest::Approx(-4.0));

  s[0].q = 1;
  n[0].d = 1;
  CHECK(reward(s, bits({1, 0, 0, 0}), n, config) == doctest::Approx(47.0));

  s[1].q = 1;
  n[1].g = 1;
  n[1].q = 1;
  CHECK(reward(s, bits({1, 0, 0, 0}), n, config) == doctest::Approx(-2.0));
}

TEST_CASE("step composes the factors") {
  auto config = reference_config();
  Rng rng(13);
  const auto s = empty_state(4);
  for (int i = 0; i < 200; ++i) {
    const auto out = step_ground_truth(s, JointAction(4, 0), config, rng);
    double expected = 0.0;
    for (std::size_t k = 0; k < 4; ++k) {
      CHECK(out.next_state[k].d == 0);
      CHECK(out.next_state[k].q == out.next_state[k].g);
      CHECK(out.delivered[k] == 0);
      CHECK(out.overflow[k] == 0);
      expected -= 1.0;
    }
    CHECK(out.reward == doctest::Approx(expected));
  }

  // One-hot tables: every factor is forced.
  config.dynamics.generation = {ProbabilityTable(4, {0.0, 1.0, 0.0, 0.0}), ProbabilityTable(4, {0.0, 0.0, 1.0, 0.0})};
  config.dynamics.mpr = {{0.0, 1.0}, {0.0, 0.0, 1.0}, {1.0, 0.0, 0.0, 0.0}, {1.0, 0.0, 0.0, 0.0, 0.0}};
  SystemState full = empty_state(4);
  for (auto& o : full.devices) o.q = 1;
  const auto out = step_ground_truth(full, bits({1, 1, 0, 0}), config, rng);
  // Cluster 1 -> pattern 10 (device 1 generates), cluster 2 -> 01 (device 4).
  CHECK(out.next_state[0] == DeviceObservation{1, 1, 1});
  CHECK(out.next_state[1] == DeviceObservation{0, 0, 1});
  CHECK(out.next_state[2] == DeviceObservation{1, 0, 0});
  CHECK(out.next_state[3] == DeviceObservation{1, 1, 0});
  CHECK(out.overflow == bits({0, 0, 0, 1}));
  CHECK(out.reward == doctest::Approx(50 + 50 - 1 - 50));

  CHECK_THROWS_AS(step_ground_truth(empty_state(4), bits({1, 0, 0, 0}), config, rng), ContractViolation);
}

TEST_CASE("transition probability sums to one over the enumerated next states") {
  const auto config = reference_config();
  const auto states = enumerate_states(config);
  CHECK(states.size() == 4096);
  Rng rng(14);
  for (int trial = 0; trial < 100; ++trial) {
    const auto s = test::random_state(config, rng);
    const auto a = test::random_action(s, rng);
    double total = 0.0;
    for (const auto& n : states) total += transition_probability(s, a, n, config);
    CHECK(std::abs(total - 1.0) < 1e-9);
  }
}

TEST_CASE("transition probability special cases") {
  const auto config = reference_config();
  SystemState s = empty_state(4);
  s[0] = {1, 1, 0};
  SystemState n = empty_state(4);
  n[0] = {0, 0, 1};  // delivered, no arrival in either cluster
  CHECK(transition_probability(s, bits({1, 0, 0, 0}), n, config) == doctest::Approx(0.2 * 0.2));
  n[0].q = 1;  // buffer-inconsistent
  CHECK(transition_probability(s, bits({1, 0, 0, 0}), n, config) == 0.0);
}

TEST_CASE("sampled next states follow the product of factors") {
  const auto config = reference_config();
  Rng rng(15);
  SystemState s = empty_state(4);
  s[0] = {1, 1, 0};
  s[1] = {1, 0, 0};
  s[2] = {1, 0, 1};
  const auto a = bits({1, 1, 1, 0});
  std::map<SystemState, int> counts;
  const int n = 100000;
  for (int i = 0; i < n; ++i) ++counts[step_ground_truth(s, a, config, rng).next_state];
  double covered = 0.0;
  for (const auto& next : enumerate_states(config)) {
    const double p = transition_probability(s, a, next, config);
    covered += p;
    CHECK(std::abs(counts[next] / double(n) - p) < 0.01);
  }
  CHECK(covered == doctest::Approx(1.0));
}

TEST_CASE("stationary distribution and initial state") {
  const auto config = reference_config();
  const auto pi = stationary_distribution(config.dynamics.generation[0]);
  CHECK(pi[0] == doctest::Approx(0.2));
  CHECK(pi[1] == doctest::Approx(0.4));
  CHECK(pi[2] == doctest::Approx(0.4));
  CHECK(pi[3] == doctest::Approx(0.0));

  // Periodic chain: the Cesaro limit still exists.
  const ProbabilityTable flip{{0.0, 1.0}, {1.0, 0.0}};
  const auto pf = stationary_distribution(flip);
  CHECK(pf[0] == doctest::Approx(0.5));

  Rng rng(16);
  for (int i = 0; i < 50; ++i) {
    const auto s = initial_state(config.dynamics, config, rng);
    for (const auto& o : s.devices) {
      CHECK(o.q == 0);
      CHECK(o.d == 0);
    }
    CHECK(cluster_pattern(s, config.clusters[0]) != 3);
  }
}

TEST_CASE("config validation") {
  auto config = reference_config();
  CHECK_NOTHROW(config.validate());
  auto bad = config;
  bad.dynamics.generation[0][0] = {0.5, 0.4, 0.4, 0.0};
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = config;
  bad.clusters = {{0, 1}, {1, 2, 3}};
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = config;
  bad.gamma = 1.5;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = config;
  bad.dynamics.mpr[0] = {0.0, 0.5, 0.5};
  CHECK_THROWS_AS(bad.validate(), ConfigError);
}
