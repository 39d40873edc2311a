#include <doctest.h>

#include <map>
#include <set>
#include <sstream>

#include "dtmac/error.hpp"
#include "dtmac/nn.hpp"
#include "gradcheck.hpp"
#include "support.hpp"

using namespace dtmac;

namespace {

const FeatureEncoding kEnc{4, 2, 10};

Eigen::MatrixXd random_critic_batch(int n, Rng& rng) {
  const auto config = reference_config();
  Eigen::MatrixXd x(kEnc.critic_size(), n);
  for (int i = 0; i < n; ++i) {
    const auto s = test::random_state(config, rng);
    kEnc.encode_critic(s, test::random_action(s, rng), int(rng() % 4),
                       {x.col(i).data(), std::size_t(x.rows())});
  }
  return x;
}

Eigen::MatrixXd random_actor_batch(int n, Rng& rng) {
  Eigen::MatrixXd x(kEnc.actor_size(), n);
  for (int i = 0; i < n; ++i) {
    const DeviceObservation obs{int(rng() % 2), int(rng() % 2), int(rng() % 2)};
    kEnc.encode_actor(obs, int(rng() % 10), int(rng() % 4), {x.col(i).data(), std::size_t(x.rows())});
  }
  return x;
}

}  // namespace

TEST_CASE("feature encodings and keys") {
  Rng rng(31);
  const auto config = reference_config();
  std::vector<double> buf(std::size_t(kEnc.critic_size()));
  SystemState s = empty_state(4);
  s[2] = {1, 1, 0};
  kEnc.encode_critic(s, {0, 0, 1, 0}, 2, buf);
  // Device 3 block: one-hot q=1, g=1, d=0. Own action hidden, agent one-hot at 2.
  CHECK(buf[8 + 1] == 1.0);
  CHECK(buf[8 + 2] == 1.0);
  CHECK(buf[16 + 2] == 0.0);
  CHECK(buf[20 + 2] == 1.0);
  double total = 0.0;
  for (const double v : buf) total += v;
  CHECK(total == 6.0);  // 4 queue one-hots, one g bit, one agent id

  std::set<std::uint64_t> keys;
  for (int i = 0; i < 2000; ++i) {
    const auto st = test::random_state(config, rng);
    const auto a = test::random_action(st, rng);
    const int k = int(rng() % 4);
    const auto key = kEnc.critic_key(st, a, k);
    std::vector<double> x(buf.size());
    kEnc.encode_critic(st, a, k, x);
    // Same key exactly when the encoded vector is the same.
    static std::map<std::uint64_t, std::vector<double>> seen;
    const auto [it, inserted] = seen.emplace(key, x);
    if (!inserted) CHECK(it->second == x);
    keys.insert(key);
  }
  CHECK(keys.size() > 100);
  CHECK(kEnc.actor_key({1, 1, 1}, 9, 3) == std::uint64_t(2 * 4 * 10 * 4 - 1));
}

TEST_CASE("policy output is a masked distribution") {
  Rng rng(32);
  const auto policy = make_policy(kEnc, {64, 64}, rng);
  for (int i = 0; i < 1000; ++i) {
    const DeviceObservation obs{int(rng() % 2), int(rng() % 2), int(rng() % 2)};
    const auto p = policy_forward(policy, obs, int(rng() % 10), int(rng() % 4));
    CHECK(std::abs(p[0] + p[1] - 1.0) < 1e-9);
    if (obs.q == 0) {
      CHECK(p[1] == 0.0);
    } else {
      CHECK(p[1] > 0.0);
      CHECK(p[1] < 1.0);
    }
  }
  // Huge logits still produce exact masking and a valid distribution.
  CHECK(masked_softmax({0, 0, 0}, -1e300, 1e300)[1] == 0.0);
  const auto big = masked_softmax({1, 0, 0}, 0.0, 800.0);
  CHECK(big[1] == 1.0);
  CHECK(std::isfinite(big[0]));
}

TEST_CASE("neural policy cache agrees with the forward pass") {
  Rng rng(33);
  const auto params = make_policy(kEnc, {16}, rng);
  const NeuralPolicy policy(params);
  for (int q = 0; q < 2; ++q)
    for (int t = 0; t < 25; ++t)
      for (int k = 0; k < 4; ++k) {
        const DeviceObservation obs{q, t % 2, (t / 2) % 2};
        CHECK(std::abs(policy.transmit_probability(obs, t, k) - policy_forward(params, obs, t % 10, k)[1]) < 1e-14);
      }
}

TEST_CASE("critic outputs") {
  Rng rng(34);
  const auto config = reference_config();
  auto critic = make_critic(kEnc, {128, 128}, rng);
  for (int i = 0; i < 1000; ++i) {
    const auto s = test::random_state(config, rng);
    const auto q = critic_forward(critic, s, test::random_action(s, rng), int(rng() % 4));
    CHECK(std::isfinite(q[0]));
    CHECK(std::isfinite(q[1]));
  }
  // Pure: same inputs, same outputs.
  const auto s = test::random_state(config, rng);
  const auto a = test::random_action(s, rng);
  CHECK(critic_forward(critic, s, a, 1) == critic_forward(critic, s, a, 1));

  // Zero weights: output equals the output bias.
  auto& theta = critic.network.parameters();
  theta.setZero();
  theta(theta.size() - 2) = 0.25;
  theta(theta.size() - 1) = -3.5;
  const auto q = critic_forward(critic, s, a, 0);
  CHECK(q[0] == 0.25);
  CHECK(q[1] == -3.5);
}

TEST_CASE("critic is equivariant under relabeling two devices") {
  Rng rng(35);
  const auto config = reference_config();
  const auto critic = make_critic(kEnc, {32, 32}, rng);
  // Input permutation swapping devices 0 and 1: state blocks, action bits, agent ids.
  const int block = kEnc.queue_levels + 2;
  std::vector<int> perm(std::size_t(kEnc.critic_size()));
  for (int i = 0; i < kEnc.critic_size(); ++i) perm[std::size_t(i)] = i;
  for (int j = 0; j < block; ++j) std::swap(perm[std::size_t(j)], perm[std::size_t(block + j)]);
  const int ab = 4 * block;
  std::swap(perm[std::size_t(ab)], perm[std::size_t(ab + 1)]);
  std::swap(perm[std::size_t(ab + 4)], perm[std::size_t(ab + 5)]);
  // Relabeled network: column perm[i] of W1' is column i of W1.
  auto relabeled = critic;
  const int hidden = critic.network.layer_sizes()[1];
  for (int i = 0; i < kEnc.critic_size(); ++i)
    for (int h = 0; h < hidden; ++h)
      relabeled.network.parameters()(perm[std::size_t(i)] * hidden + h) = critic.network.parameters()(i * hidden + h);
  auto swap01 = [](auto v) {
    std::swap(v[0], v[1]);
    return v;
  };
  for (int trial = 0; trial < 200; ++trial) {
    SystemState s = test::random_state(config, rng);
    const auto a = test::random_action(s, rng);
    const int k = int(rng() % 4);
    const int k2 = k == 0 ? 1 : k == 1 ? 0 : k;
    SystemState s2 = s;
    s2.devices = swap01(s.devices);
    const auto q = critic_forward(critic, s, a, k);
    const auto q2 = critic_forward(relabeled, s2, swap01(a), k2);
    CHECK(std::abs(q[0] - q2[0]) < 1e-12);
    CHECK(std::abs(q[1] - q2[1]) < 1e-12);
  }
}

TEST_CASE("reverse-mode gradients match central differences") {
  Rng rng(36);
  SUBCASE("critic, squared loss") {
    const auto critic = make_critic(kEnc, {128, 128}, rng);
    const auto x = random_critic_batch(64, rng);
    test::SquaredLoss loss;
    loss.target = Eigen::MatrixXd::Random(2, 64);
    const auto r = test::gradient_check(critic.network, x, loss, 100, 1e-5, rng);
    CHECK(r.worst_relative_error < 1e-4);
  }
  SUBCASE("actor, policy-gradient loss") {
    const auto actor = make_policy(kEnc, {64, 64}, rng);
    const auto x = random_actor_batch(64, rng);
    test::LogPolicyLoss loss;
    for (int i = 0; i < 64; ++i) {
      loss.actions.push_back(int(rng() % 2));
      loss.weights.push_back(2 * uniform01(rng) - 1);
    }
    const auto r = test::gradient_check(actor.network, x, loss, 100, 1e-5, rng);
    CHECK(r.worst_relative_error < 1e-4);
  }
}

TEST_CASE("backward properties") {
  Rng rng(37);
  const auto critic = make_critic(kEnc, {32, 32}, rng);
  const auto x = random_critic_batch(16, rng);
  Mlp::Trace trace;
  const Eigen::MatrixXd out = critic.network.forward(x, trace);
  CHECK(critic.network.backward(trace, Eigen::MatrixXd::Zero(2, 16)).isZero(0.0));
  const Eigen::MatrixXd adj = Eigen::MatrixXd::Random(2, 16);
  const Eigen::VectorXd g1 = critic.network.backward(trace, adj);
  const Eigen::VectorXd g3 = critic.network.backward(trace, 3.0 * adj);
  CHECK((g3 - 3.0 * g1).cwiseAbs().maxCoeff() < 1e-12);

  Eigen::MatrixXd bad = adj;
  bad(1, 3) = NAN;
  try {
    (void)critic.network.backward(trace, bad);
    FAIL("expected NumericalError");
  } catch (const NumericalError& e) {
    CHECK(e.location() == critic.network.num_layers() - 1);
  }
  Mlp::Trace empty;
  CHECK_THROWS_AS((void)critic.network.backward(empty, adj), ArgumentError);
}

TEST_CASE("Adam") {
  const Eigen::VectorXd c = (Eigen::VectorXd(3) << 1.0, -2.0, 0.5).finished();
  auto loss = [&](const Eigen::VectorXd& x) { return 0.5 * (x - c).squaredNorm(); };

  Eigen::VectorXd x = Eigen::VectorXd::Zero(3);
  AdamState state;
  const AdamConfig config{1e-3};
  optimizer_step(x, Eigen::VectorXd::Zero(3), state, config);
  CHECK(x.isZero(0.0));
  CHECK(state.steps == 1);

  const double before = loss(x);
  optimizer_step(x, x - c, state, config);
  CHECK(loss(x) < before);

  auto run = [&] {
    Eigen::VectorXd y = Eigen::VectorXd::Constant(3, 0.3);
    AdamState s;
    for (int i = 0; i < 500; ++i) optimizer_step(y, y - c, s, AdamConfig{1e-2});
    return y;
  };
  const auto a = run(), b = run();
  CHECK(a == b);
  CHECK(loss(a) < loss(Eigen::VectorXd::Constant(3, 0.3)));
  CHECK_THROWS_AS(optimizer_step(x, Eigen::VectorXd::Zero(2), state, config), ArgumentError);
}

TEST_CASE("tensor files round-trip") {
  Rng rng(38);
  const auto policy = make_policy(kEnc, {8, 4}, rng);
  const auto critic = make_critic(kEnc, {6}, rng);
  std::stringstream ps, cs;
  save_policy(ps, policy);
  save_critic(cs, critic);
  CHECK(load_policy(ps) == policy);
  CHECK(load_critic(cs) == critic);

  std::stringstream wrong_kind;
  save_critic(wrong_kind, critic);
  CHECK_THROWS_AS(load_policy(wrong_kind), ConfigError);
  std::stringstream cut(ps.str().substr(0, 80));
  CHECK_THROWS_AS(load_policy(cut), ConfigError);
}
