#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <sstream>

#include "dtmac/env.hpp"
#include "dtmac/error.hpp"
#include "dtmac/harness.hpp"
#include "support.hpp"

using namespace dtmac;

namespace {

ExperimentConfig tiny_experiment() {
  auto c = reference_experiment_config();
  c.training.horizon = 10;
  c.training.episodes_per_iteration = 4;
  c.training.iterations = 2;
  c.training.actor_hidden = {8};
  c.training.critic_hidden = {8};
  c.oracle_budget_factor = 1;
  c.eval_horizon = 10;
  c.eval_episodes = 5;
  c.cycles = 2;
  c.learning_sizes = {0, 3};
  c.seed = 99;
  return c;
}

// Exact overflow rate and discounted return of the always-idle policy: each
// cluster is a Markov chain over (generation pattern, buffer occupancy).
std::pair<double, double> idle_chain_oracle(const SystemConfig& config, int horizon) {
  double overflow = 0.0, ret = 0.0;
  for (std::size_t c = 0; c < config.clusters.size(); ++c) {
    const auto& table = config.dynamics.generation[c];
    const int m = int(config.clusters[c].size());
    const int patterns = 1 << m;
    // dist[pattern][queue bits]; unit buffers.
    std::vector<std::vector<double>> dist(std::size_t(patterns), std::vector<double>(std::size_t(patterns), 0.0));
    const auto start = stationary_distribution(table);
    for (int p = 0; p < patterns; ++p) dist[std::size_t(p)][0] = start[std::size_t(p)];
    double discount = 1.0;
    for (int t = 0; t < horizon; ++t) {
      std::vector<std::vector<double>> next(std::size_t(patterns), std::vector<double>(std::size_t(patterns), 0.0));
      for (int p = 0; p < patterns; ++p)
        for (int q = 0; q < patterns; ++q) {
          const double w = dist[std::size_t(p)][std::size_t(q)];
          if (w == 0.0) continue;
          for (int p2 = 0; p2 < patterns; ++p2) {
            const double pr = w * table[std::size_t(p)][std::size_t(p2)];
            if (pr == 0.0) continue;
            for (int j = 0; j < m; ++j) {
              const bool drop = (q >> j & 1) && (p2 >> j & 1);
              overflow += pr * drop;
              ret += discount * pr * config.beta[std::size_t(config.clusters[c][std::size_t(j)])] *
                     (drop ? -config.xi : -1.0);
            }
            next[std::size_t(p2)][std::size_t(q | p2)] += pr;
          }
        }
      dist = std::move(next);
      discount *= config.gamma;
    }
  }
  return {overflow / (double(horizon) * config.num_devices), ret};
}

}  // namespace

TEST_CASE("mode names") {
  for (const auto m : {Mode::Bayesian, Mode::Frequentist, Mode::Oracle}) CHECK(parse_mode(to_string(m)) == m);
  CHECK_THROWS_AS(parse_mode("bayes"), ArgumentError);
}

TEST_CASE("exploration policy") {
  const auto config = reference_config();
  Rng rng(51);
  SystemState full = empty_state(4);
  for (auto& d : full.devices) d.q = 1;
  double sum = 0.0;
  const int n = 20000;
  for (int i = 0; i < n; ++i) {
    const auto p = exploration_policy(full, true, rng);
    CHECK(p[0] == p[3]);
    sum += p[0];
  }
  CHECK(std::abs(sum / n - 0.5) < 0.01);
  sum = 0.0;
  int distinct = 0;
  for (int i = 0; i < n; ++i) {
    const auto p = exploration_policy(full, false, rng);
    distinct += p[0] != p[1];
    sum += p[2];
  }
  CHECK(distinct == n);
  CHECK(std::abs(sum / n - 0.5) < 0.01);
  for (int i = 0; i < 200; ++i) {
    const auto s = test::random_state(config, rng);
    const auto p = exploration_policy(s, i % 2 == 0, rng);
    for (int k = 0; k < 4; ++k)
      if (s[std::size_t(k)].q == 0) CHECK(p[std::size_t(k)] == 0.0);
  }
}

TEST_CASE("learning data") {
  const auto config = reference_config();
  Rng rng(52);
  CHECK(collect_learning_data(config, 0, true, rng).empty());
  CHECK(collect_learning_data(config, 1, true, rng).empty());
  const auto data = collect_learning_data(config, 20, true, rng);
  CHECK(data.size() == 19);
  CHECK(is_chained(data));
  CHECK(data.front().state.devices[0].q == 0);
  for (std::size_t i = 0; i < data.size(); ++i) validate_record(data[i], config, i);
  Rng a(53), b(53);
  CHECK(collect_learning_data(config, 50, false, a) == collect_learning_data(config, 50, false, b));
}

TEST_CASE("policy evaluation") {
  const auto config = reference_config();

  SUBCASE("always idle against the exact chain") {
    Rng rng(54);
    const auto m = evaluate_policy(PersistentPolicy(0.0), config, 30, 20000, rng);
    const auto [overflow, ret] = idle_chain_oracle(config, 30);
    CHECK(m.throughput == 0.0);
    CHECK(std::abs(m.overflow_prob - overflow) < 3 * m.overflow_se);
    CHECK(std::abs(m.discounted_return - ret) < 3 * m.return_se);
  }

  SUBCASE("packet conservation per device") {
    Rng rng(55);
    for (const double p : {0.2, 0.7, 1.0}) {
      const auto traj =
          simulate(config.dynamics, PersistentPolicy(p), config, initial_state(config.dynamics, config, rng), 200, rng);
      CHECK(traj.transitions.size() == 200);
      CHECK(traj.rewards.size() == 200);
      CHECK(is_chained(traj.transitions));
      for (int k = 0; k < 4; ++k) {
        int arrivals = 0, delivered = 0, dropped = 0;
        for (const auto& r : traj.transitions) {
          const auto& now = r.state[std::size_t(k)];
          const auto& next = r.next_state[std::size_t(k)];
          arrivals += next.g;
          delivered += next.d;
          dropped += now.q == config.q_max[std::size_t(k)] && next.g == 1 && next.d == 0;
          if (next.d) CHECK(r.action[std::size_t(k)] == 1);
        }
        const int q0 = traj.transitions.front().state[std::size_t(k)].q;
        const int qH = traj.transitions.back().next_state[std::size_t(k)].q;
        CHECK(qH - q0 == arrivals - delivered - dropped);
      }
    }
  }

  SUBCASE("single device on a perfect channel delivers every arrival") {
    SystemConfig one;
    one.num_devices = 1;
    one.clusters = {{0}};
    one.q_max = {1};
    one.dynamics.generation = {{{0.7, 0.3}, {0.7, 0.3}}};
    one.dynamics.mpr = {{0.0, 1.0}};
    one.beta = {1.0};
    Rng rng(59);
    const auto m = evaluate_policy(PersistentPolicy(1.0), one, 2000, 20, rng);
    CHECK(m.overflow_prob == 0.0);
    CHECK(std::abs(m.throughput - 0.3) < 4 * m.throughput_se + 1e-3);
  }

  SUBCASE("standard errors shrink with episodes") {
    Rng a(56), b(56);
    const auto small = evaluate_policy(PersistentPolicy(0.5), config, 20, 50, a);
    const auto large = evaluate_policy(PersistentPolicy(0.5), config, 20, 2000, b);
    CHECK(large.return_se < small.return_se);
    CHECK(large.throughput_se > 0.0);
  }

  SUBCASE("arguments") {
    Rng rng(57);
    CHECK_THROWS_AS(evaluate_policy(PersistentPolicy(0.5), config, 0, 1, rng), ArgumentError);
  }
}

TEST_CASE("cycles and sweeps") {
  const auto exp = tiny_experiment();

  SUBCASE("run_cycle is deterministic") {
    for (const auto mode : {Mode::Bayesian, Mode::Frequentist, Mode::Oracle}) {
      const auto a = run_cycle(mode, 5, 1, exp);
      const auto b = run_cycle(mode, 5, 1, exp);
      CHECK(a.row.throughput == b.row.throughput);
      CHECK(a.row.discounted_return == b.row.discounted_return);
      CHECK(a.training.policy == b.training.policy);
      CHECK(a.row.error.empty());
    }
  }

  SUBCASE("oracle ignores the learning size") {
    const auto a = run_cycle(Mode::Oracle, 2, 0, exp);
    const auto b = run_cycle(Mode::Oracle, 20, 0, exp);
    CHECK(a.training.policy == b.training.policy);
    CHECK(a.row.discounted_return == b.row.discounted_return);
  }

  SUBCASE("cycles differ") {
    CHECK(!(run_cycle(Mode::Bayesian, 5, 0, exp).training.policy == run_cycle(Mode::Bayesian, 5, 1, exp).training.policy));
  }

  SUBCASE("sweep rows and summary") {
    int progress = 0;
    const auto rows = experiment_policy_sweep(exp, [&](const MetricsRow&) { ++progress; });
    REQUIRE(rows.size() == 3 * 2 * 2);
    for (const auto& r : rows) {
      CHECK(r.throughput >= 0.0);
      CHECK(r.throughput <= 2.0);
      CHECK(r.overflow_prob >= 0.0);
      CHECK(r.overflow_prob <= 1.0);
    }
    CHECK(progress == int(rows.size()));
    CHECK(rows[0].mode == Mode::Bayesian);
    CHECK(rows[0].T == 0);
    CHECK(rows[1].cycle == 1);
    CHECK(rows.back().mode == Mode::Oracle);
    CHECK(rows[0].throughput == run_cycle(Mode::Bayesian, 0, 0, exp).row.throughput);

    const auto summary = summarize_sweep(rows);
    REQUIRE(summary.size() == 6);
    for (const auto& s : summary) {
      std::vector<double> v;
      for (const auto& r : rows)
        if (r.mode == s.mode && r.T == s.T) v.push_back(r.throughput);
      CHECK(s.n == int(v.size()));
      CHECK(s.throughput_mean == doctest::Approx((v[0] + v[1]) / 2).epsilon(1e-12));
      CHECK(s.throughput_se == doctest::Approx(std::abs(v[0] - v[1]) / 2).epsilon(1e-9));
    }

    std::ostringstream out;
    write_metrics_csv(out, rows);
    CHECK(out.str().rfind("mode,T,cycle,throughput,overflow_prob,return,error\n", 0) == 0);
    std::ostringstream sum;
    write_summary_csv(sum, summary);
    const auto text = sum.str();
    CHECK(std::count(text.begin(), text.end(), '\n') == 7);
  }

  SUBCASE("failed cycles are skipped by the summary") {
    std::vector<MetricsRow> rows(3);
    rows[0].throughput = 1.0;
    rows[1].throughput = 3.0;
    rows[2].throughput = NAN;
    rows[2].error = "diverged";
    const auto s = summarize_sweep(rows);
    REQUIRE(s.size() == 1);
    CHECK(s[0].n == 2);
    CHECK(s[0].throughput_mean == 2.0);
  }
}

TEST_CASE("anomaly experiment plumbing") {
  auto exp = tiny_experiment();
  const auto anomalous = anomalous_dynamics(exp);
  CHECK(anomalous.generation[0] == exp.monitoring.anomalous_generation);
  CHECK(anomalous.generation[1] == exp.system.dynamics.generation[1]);
  CHECK(anomalous.mpr == exp.system.dynamics.mpr);

  Rng rng(58);
  const PersistentPolicy policy(0.5);
  const auto w = monitoring_window(exp.system, anomalous, policy, 10, rng);
  CHECK(w.size() == 9);
  CHECK(is_chained(w));
  // Under the anomaly device 2 never generates.
  for (const auto& r : w) CHECK(r.next_state[1].g == 0);

  exp.monitoring.phases = 3;
  exp.monitoring.nominal_windows = 20;
  exp.monitoring.anomalous_windows = 20;
  exp.monitoring.posterior_samples = 10;
  exp.monitoring.learning_sizes = {20};
  const auto a = experiment_anomaly_roc(exp, policy);
  const auto b = experiment_anomaly_roc(exp, policy);
  REQUIRE(a.entries.size() == 1);
  CHECK(a.entries[0].T == 20);
  CHECK(a.entries[0].bayesian.phase_curves.size() == 3);
  CHECK(a.entries[0].bayesian.mean_auc == b.entries[0].bayesian.mean_auc);
  CHECK(a.entries[0].frequentist.fpr_at_tpr80 == b.entries[0].frequentist.fpr_at_tpr80);
  double auc = 0.0;
  for (const auto& c : a.entries[0].bayesian.phase_curves) auc += c.auc;
  CHECK(a.entries[0].bayesian.mean_auc == doctest::Approx(auc / 3).epsilon(1e-12));
  const auto& grid = a.entries[0].bayesian.fpr_grid;
  CHECK(grid.front() == 0.0);
  CHECK(grid.back() == 1.0);
  CHECK(a.entries[0].bayesian.mean_tpr.back() == 1.0);
  const auto c = experiment_anomaly_roc(exp, policy, 1);
  CHECK(c.entries[0].bayesian.mean_auc != a.entries[0].bayesian.mean_auc);

  std::ostringstream s;
  write_roc_summary_csv(s, a, 50);
  CHECK(s.str().rfind("T,detector,phases,mean_auc,fpr_at_tpr80,policy_T\n", 0) == 0);
}

TEST_CASE("shipped configuration matches the built-in reference") {
  const auto loaded = load_experiment_config(std::string(DTMAC_SOURCE_DIR) + "/configs/paper.cfg");
  const auto builtin = reference_experiment_config();
  CHECK(to_config_file(loaded).to_string() == to_config_file(builtin).to_string());
  CHECK(loaded.system.dynamics == builtin.system.dynamics);
  CHECK(loaded.system.clusters == builtin.system.clusters);
  // Round trip through text.
  const auto again = experiment_config_from(ConfigFile::parse(to_config_file(builtin).to_string()));
  CHECK(to_config_file(again).to_string() == to_config_file(builtin).to_string());
}
