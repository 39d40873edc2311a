#include <benchmark/benchmark.h>

#include "dtmac/bayes.hpp"
#include "dtmac/coma.hpp"
#include "dtmac/env.hpp"
#include "dtmac/harness.hpp"
#include "dtmac/monitor.hpp"
#include "dtmac/nn.hpp"

using namespace dtmac;

namespace {

TrainConfig bench_train_config() {
  TrainConfig tc;
  tc.iterations = 1;
  return tc;
}

FeatureEncoding encoding() { return {4, 2, 10}; }

}  // namespace

static void BM_EnvStep(benchmark::State& state) {
  const auto config = reference_config();
  Rng rng(1);
  SystemState s = initial_state(config.dynamics, config, rng);
  const PersistentPolicy policy(0.5);
  int t = 0;
  for (auto _ : state) {
    const auto a = sample_joint_action(policy, s, t++, rng);
    s = step_ground_truth(s, a, config, rng).next_state;
    benchmark::DoNotOptimize(s);
  }
}
BENCHMARK(BM_EnvStep);

static void BM_PosteriorSample(benchmark::State& state) {
  const auto config = reference_config();
  Rng rng(2);
  const auto data = collect_learning_data(config, 20, true, rng);
  const auto posterior = update_posterior(init_prior(config, 0.01), data, config);
  for (auto _ : state) benchmark::DoNotOptimize(sample_model(posterior, rng));
}
BENCHMARK(BM_PosteriorSample);

static void BM_CriticForwardBackward(benchmark::State& state) {
  Rng rng(3);
  const auto critic = make_critic(encoding(), {128, 128}, rng);
  const Eigen::Index n = state.range(0);
  const Eigen::MatrixXd x = Eigen::MatrixXd::Random(encoding().critic_size(), n);
  const Eigen::MatrixXd adjoint = Eigen::MatrixXd::Ones(2, n);
  for (auto _ : state) {
    Mlp::Trace trace;
    benchmark::DoNotOptimize(critic.network.forward(x, trace));
    benchmark::DoNotOptimize(critic.network.backward(trace, adjoint));
  }
  state.SetItemsProcessed(state.iterations() * n);
}
BENCHMARK(BM_CriticForwardBackward)->Arg(256)->Arg(2048);

static void BM_VirtualRollouts(benchmark::State& state) {
  const auto config = reference_config();
  const auto tc = bench_train_config();
  Rng rng(4);
  const auto policy = make_policy(FeatureEncoding{4, 2, tc.frame}, tc.actor_hidden, rng);
  const auto source = ModelSource::bayesian(init_prior(config, 0.01));
  for (auto _ : state) benchmark::DoNotOptimize(generate_virtual_rollouts(source, policy, config, tc, rng));
}
BENCHMARK(BM_VirtualRollouts)->Unit(benchmark::kMillisecond);

static void BM_TrainIteration(benchmark::State& state) {
  const auto config = reference_config();
  const auto tc = bench_train_config();
  Rng rng(5);
  const auto source = ModelSource::fixed(config.dynamics);
  for (auto _ : state) benchmark::DoNotOptimize(train(source, config, tc, rng));
}
BENCHMARK(BM_TrainIteration)->Unit(benchmark::kMillisecond);

static void BM_DisagreementScore(benchmark::State& state) {
  const auto config = reference_config();
  Rng rng(6);
  const auto data = collect_learning_data(config, 50, true, rng);
  const auto posterior = update_posterior(init_prior(config, 0.01), data, config);
  const auto window = collect_learning_data(config, 10, true, rng);
  std::vector<ModelSample> thetas;
  for (int i = 0; i < 50; ++i) thetas.push_back(sample_model(posterior, rng));
  for (auto _ : state)
    benchmark::DoNotOptimize(log_likelihood_variance(thetas, window, LikelihoodKind::of_cluster(0), config));
}
BENCHMARK(BM_DisagreementScore);
BENCHMARK_MAIN();
