#include "dtmac/harness.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <ostream>
#include <set>

#include "dtmac/env.hpp"
#include "dtmac/error.hpp"

namespace dtmac {

namespace {

constexpr int kRocGridPoints = 1001;

struct MeanSe {
  double mean = 0.0;
  double se = 0.0;
};

MeanSe mean_se(const std::vector<double>& xs) {
  MeanSe r;
  if (xs.empty()) return r;
  for (const double x : xs) r.mean += x;
  r.mean /= double(xs.size());
  if (xs.size() < 2) return r;
  double ss = 0.0;
  for (const double x : xs) ss += (x - r.mean) * (x - r.mean);
  r.se = std::sqrt(ss / double(xs.size() - 1) / double(xs.size()));
  return r;
}

void check_keys(const ConfigFile& file, const std::string& section, const std::set<std::string>& known) {
  for (const auto& key : file.keys(section))
    if (!known.count(key)) throw ConfigError(file.source() + ": unknown key '" + key + "' in [" + section + "]");
}

std::uint64_t tag(int v) { return static_cast<std::uint64_t>(static_cast<std::int64_t>(v)); }

}  // namespace

std::string_view to_string(Mode mode) {
  switch (mode) {
    case Mode::Bayesian: return "bayesian";
    case Mode::Frequentist: return "frequentist";
    case Mode::Oracle: return "oracle";
  }
  return "?";
}

Mode parse_mode(std::string_view text) {
  if (text == "bayesian") return Mode::Bayesian;
  if (text == "frequentist") return Mode::Frequentist;
  if (text == "oracle") return Mode::Oracle;
  throw ArgumentError("unknown mode '" + std::string(text) + "' (expected bayesian, frequentist or oracle)");
}

void ExperimentConfig::validate() const {
  system.validate();
  training.validate();
  if (cycles < 1) throw ConfigError("experiment: cycles must be >= 1");
  if (modes.empty()) throw ConfigError("experiment: at least one mode is required");
  if (eval_horizon < 1 || eval_episodes < 1) throw ConfigError("experiment: evaluation horizon and episodes must be positive");
  if (oracle_budget_factor < 1) throw ConfigError("experiment: oracle budget factor must be >= 1");
  for (const int T : learning_sizes)
    if (T < 0) throw ConfigError("experiment: learning sizes must be >= 0");
  if (!(learning.bayesian_prior > 0.0) || !(learning.frequentist_prior > 1.0))
    throw ConfigError("learning: priors must satisfy bayesian > 0 and frequentist > 1");
  const auto& m = monitoring;
  if (m.window < 2) throw ConfigError("monitoring: window must be >= 2");
  if (m.posterior_samples < 2) throw ConfigError("monitoring: posterior samples must be >= 2");
  if (m.nominal_windows < 1 || m.anomalous_windows < 1 || m.phases < 1)
    throw ConfigError("monitoring: window counts and phases must be positive");
  if (m.cluster < 0 || m.cluster >= int(system.clusters.size())) throw ConfigError("monitoring: cluster out of range");
  for (const int T : m.learning_sizes)
    if (T < 0) throw ConfigError("monitoring: learning sizes must be >= 0");
  if (m.policy_learning_size < 0) throw ConfigError("monitoring: policy learning size must be >= 0");
  if (!m.anomalous_generation.empty()) {
    DynamicsTables tables = system.dynamics;
    tables.generation[std::size_t(m.cluster)] = m.anomalous_generation;
    try {
      system.validate_tables(tables);
    } catch (const ConfigError& e) {
      throw ConfigError(std::string("monitoring: anomalous generation table: ") + e.what());
    }
  }
}

ExperimentConfig experiment_config_from(const ConfigFile& file) {
  ExperimentConfig c;
  c.system = system_config_from(file);
  check_keys(file, "system", {"devices", "clusters", "q_max", "generation", "mpr", "beta", "xi", "gamma"});

  const std::string L = "learning";
  check_keys(file, L, {"bayesian_prior", "frequentist_prior", "shared_exploration"});
  if (file.has(L, "bayesian_prior")) c.learning.bayesian_prior = file.get_double(L, "bayesian_prior");
  if (file.has(L, "frequentist_prior")) c.learning.frequentist_prior = file.get_double(L, "frequentist_prior");
  if (file.has(L, "shared_exploration")) c.learning.shared_exploration = file.get_bool(L, "shared_exploration");

  const std::string R = "training";
  auto& t = c.training;
  check_keys(file, R,
             {"horizon", "episodes_per_iteration", "iterations", "resample_period", "td_lambda", "entropy_weight",
              "actor_learning_rate", "critic_learning_rate", "critic_steps", "frame", "actor_hidden", "critic_hidden",
              "reward_scale", "plateau_patience", "plateau_tolerance", "evaluation_cadence"});
  auto get_int = [&](const std::string& s, const char* key, int& out) {
    if (file.has(s, key)) out = file.get_int(s, key);
  };
  auto get_double = [&](const std::string& s, const char* key, double& out) {
    if (file.has(s, key)) out = file.get_double(s, key);
  };
  get_int(R, "horizon", t.horizon);
  get_int(R, "episodes_per_iteration", t.episodes_per_iteration);
  get_int(R, "iterations", t.iterations);
  get_int(R, "resample_period", t.resample_period);
  get_double(R, "td_lambda", t.td_lambda);
  get_double(R, "entropy_weight", t.entropy_weight);
  get_double(R, "actor_learning_rate", t.actor_learning_rate);
  get_double(R, "critic_learning_rate", t.critic_learning_rate);
  get_int(R, "critic_steps", t.critic_steps);
  get_int(R, "frame", t.frame);
  if (file.has(R, "actor_hidden")) t.actor_hidden = file.get_int_list(R, "actor_hidden");
  if (file.has(R, "critic_hidden")) t.critic_hidden = file.get_int_list(R, "critic_hidden");
  get_double(R, "reward_scale", t.reward_scale);
  get_int(R, "plateau_patience", t.plateau_patience);
  get_double(R, "plateau_tolerance", t.plateau_tolerance);
  get_int(R, "evaluation_cadence", t.evaluation_cadence);

  const std::string M = "monitoring";
  auto& m = c.monitoring;
  check_keys(file, M,
             {"window", "posterior_samples", "nominal_windows", "anomalous_windows", "phases", "cluster",
              "learning_sizes", "anomalous_generation", "policy_learning_size"});
  get_int(M, "window", m.window);
  get_int(M, "posterior_samples", m.posterior_samples);
  get_int(M, "nominal_windows", m.nominal_windows);
  get_int(M, "anomalous_windows", m.anomalous_windows);
  get_int(M, "phases", m.phases);
  if (file.has(M, "cluster")) m.cluster = file.get_int(M, "cluster") - 1;
  if (file.has(M, "learning_sizes")) m.learning_sizes = file.get_int_list(M, "learning_sizes");
  if (file.has(M, "anomalous_generation")) m.anomalous_generation = file.get_double_matrix(M, "anomalous_generation");
  get_int(M, "policy_learning_size", m.policy_learning_size);

  const std::string E = "experiment";
  check_keys(file, E,
             {"modes", "learning_sizes", "cycles", "eval_horizon", "eval_episodes", "oracle_budget_factor", "seed"});
  if (file.has(E, "modes")) {
    c.modes.clear();
    for (const auto& name : file.get_string_list(E, "modes")) {
      try {
        c.modes.push_back(parse_mode(name));
      } catch (const ArgumentError& e) {
        throw ConfigError(file.source() + ": " + e.what());
      }
    }
  }
  if (file.has(E, "learning_sizes")) c.learning_sizes = file.get_int_list(E, "learning_sizes");
  get_int(E, "cycles", c.cycles);
  get_int(E, "eval_horizon", c.eval_horizon);
  get_int(E, "eval_episodes", c.eval_episodes);
  get_int(E, "oracle_budget_factor", c.oracle_budget_factor);
  if (file.has(E, "seed")) {
    const long long seed = file.get_int64(E, "seed");
    if (seed < 0) throw ConfigError(file.source() + ": [experiment] seed must be >= 0");
    c.seed = std::uint64_t(seed);
  }

  for (const auto& section : file.sections())
    if (section != "system" && section != L && section != R && section != M && section != E && section != "posterior")
      throw ConfigError(file.source() + ": unknown section [" + section + "]");

  try {
    c.validate();
  } catch (const std::exception& e) {
    throw ConfigError(file.source() + ": " + e.what());
  }
  return c;
}

ExperimentConfig load_experiment_config(const std::filesystem::path& path) {
  return experiment_config_from(ConfigFile::load(path));
}

ConfigFile to_config_file(const ExperimentConfig& c) {
  ConfigFile f;
  write_system_config(f, c.system);
  f.set("learning", "bayesian_prior", c.learning.bayesian_prior);
  f.set("learning", "frequentist_prior", c.learning.frequentist_prior);
  f.set_raw("learning", "shared_exploration", c.learning.shared_exploration ? "true" : "false");

  const auto& t = c.training;
  f.set("training", "horizon", t.horizon);
  f.set("training", "episodes_per_iteration", t.episodes_per_iteration);
  f.set("training", "iterations", t.iterations);
  f.set("training", "resample_period", t.resample_period);
  f.set("training", "td_lambda", t.td_lambda);
  f.set("training", "entropy_weight", t.entropy_weight);
  f.set("training", "actor_learning_rate", t.actor_learning_rate);
  f.set("training", "critic_learning_rate", t.critic_learning_rate);
  f.set("training", "critic_steps", t.critic_steps);
  f.set("training", "frame", t.frame);
  f.set("training", "actor_hidden", t.actor_hidden);
  f.set("training", "critic_hidden", t.critic_hidden);
  f.set("training", "reward_scale", t.reward_scale);
  f.set("training", "plateau_patience", t.plateau_patience);
  f.set("training", "plateau_tolerance", t.plateau_tolerance);
  f.set("training", "evaluation_cadence", t.evaluation_cadence);

  const auto& m = c.monitoring;
  f.set("monitoring", "window", m.window);
  f.set("monitoring", "posterior_samples", m.posterior_samples);
  f.set("monitoring", "nominal_windows", m.nominal_windows);
  f.set("monitoring", "anomalous_windows", m.anomalous_windows);
  f.set("monitoring", "phases", m.phases);
  f.set("monitoring", "cluster", m.cluster + 1);
  f.set("monitoring", "learning_sizes", m.learning_sizes);
  if (!m.anomalous_generation.empty()) f.set("monitoring", "anomalous_generation", m.anomalous_generation);
  f.set("monitoring", "policy_learning_size", m.policy_learning_size);

  std::string modes = "[";
  for (std::size_t i = 0; i < c.modes.size(); ++i)
    modes += (i ? ", \"" : "\"") + std::string(to_string(c.modes[i])) + "\"";
  f.set_raw("experiment", "modes", modes + "]");
  f.set("experiment", "learning_sizes", c.learning_sizes);
  f.set("experiment", "cycles", c.cycles);
  f.set("experiment", "eval_horizon", c.eval_horizon);
  f.set("experiment", "eval_episodes", c.eval_episodes);
  f.set("experiment", "oracle_budget_factor", c.oracle_budget_factor);
  f.set_raw("experiment", "seed", std::to_string(c.seed));
  return f;
}

ExperimentConfig reference_experiment_config() {
  ExperimentConfig c;
  c.system = reference_config();
  c.monitoring.anomalous_generation = ProbabilityTable(4, {0.6, 0.4, 0.0, 0.0});
  return c;
}

std::vector<double> exploration_policy(const SystemState& state, bool shared, Rng& rng) {
  std::vector<double> probs(state.size());
  const double q_shared = shared ? uniform01(rng) : 0.0;
  for (std::size_t k = 0; k < state.size(); ++k) {
    const double q_t = shared ? q_shared : uniform01(rng);
    probs[k] = state[k].q > 0 ? q_t : 0.0;
  }
  return probs;
}

Dataset collect_learning_data(const SystemConfig& config, int T, bool shared, Rng& rng) {
  if (T < 0) throw ArgumentError("collect_learning_data: T must be >= 0");
  Dataset data;
  if (T <= 1) return data;
  SystemState state = initial_state(config.dynamics, config, rng);
  data.reserve(std::size_t(T - 1));
  for (int t = 0; t + 1 < T; ++t) {
    const auto probs = exploration_policy(state, shared, rng);
    JointAction action(state.size(), 0);
    for (std::size_t k = 0; k < state.size(); ++k) action[k] = bernoulli(probs[k], rng) ? 1 : 0;
    auto outcome = step_ground_truth(state, action, config, rng);
    data.push_back({state, action, outcome.next_state});
    state = std::move(outcome.next_state);
  }
  return data;
}

Trajectory simulate(const DynamicsTables& tables, const DevicePolicy& policy, const SystemConfig& config,
                    const SystemState& start, int steps, Rng& rng, int t0) {
  Trajectory traj;
  traj.t0 = t0;
  SystemState state = start;
  for (int i = 0; i < steps; ++i) {
    const auto action = sample_joint_action(policy, state, t0 + i, rng);
    auto outcome = step(tables, state, action, config, rng);
    traj.transitions.push_back({state, action, outcome.next_state});
    traj.rewards.push_back(outcome.reward);
    state = std::move(outcome.next_state);
  }
  return traj;
}

PolicyMetrics evaluate_policy(const DevicePolicy& policy, const SystemConfig& config, int horizon, int episodes,
                              Rng& rng) {
  if (horizon < 1 || episodes < 1) throw ArgumentError("evaluate_policy: horizon and episodes must be positive");
  std::vector<double> throughput, overflow, ret;
  const int K = config.num_devices;
  for (int e = 0; e < episodes; ++e) {
    SystemState state = initial_state(config.dynamics, config, rng);
    double delivered = 0.0, overflows = 0.0, g = 0.0, discount = 1.0;
    for (int t = 0; t < horizon; ++t) {
      const auto action = sample_joint_action(policy, state, t, rng);
      auto outcome = step_ground_truth(state, action, config, rng);
      delivered += count_ones(outcome.delivered);
      overflows += count_ones(outcome.overflow);
      g += discount * outcome.reward;
      discount *= config.gamma;
      state = std::move(outcome.next_state);
    }
    throughput.push_back(delivered / horizon);
    overflow.push_back(overflows / (double(horizon) * K));
    ret.push_back(g);
  }
  const auto tp = mean_se(throughput), of = mean_se(overflow), rt = mean_se(ret);
  return {tp.mean, of.mean, rt.mean, tp.se, of.se, rt.se};
}

CycleResult run_cycle(Mode mode, int T, int cycle, const ExperimentConfig& config) {
  const auto& sys = config.system;
  const std::uint64_t seed = config.seed;
  const std::uint64_t t_tag = mode == Mode::Oracle ? 0 : tag(T) + 1;
  Rng data_rng = make_rng(seed, {1, t_tag, tag(cycle)});
  Rng train_rng = make_rng(seed, {2, t_tag, tag(cycle)});
  Rng eval_rng = make_rng(seed, {3, tag(cycle)});

  CycleResult result;
  result.row.mode = mode;
  result.row.T = T;
  result.row.cycle = cycle;

  TrainConfig tc = config.training;
  std::optional<ModelSource> source;
  switch (mode) {
    case Mode::Bayesian: {
      const auto data = collect_learning_data(sys, T, config.learning.shared_exploration, data_rng);
      source = ModelSource::bayesian(update_posterior(init_prior(sys, config.learning.bayesian_prior), data, sys));
      break;
    }
    case Mode::Frequentist: {
      const auto data = collect_learning_data(sys, T, config.learning.shared_exploration, data_rng);
      const auto post = update_posterior(init_prior(sys, config.learning.frequentist_prior), data, sys);
      source = ModelSource::fixed(map_estimate(post));
      break;
    }
    case Mode::Oracle:
      source = ModelSource::fixed(sys.dynamics);
      if (tc.plateau_patience == 0) tc.plateau_patience = std::max(1, tc.iterations);
      tc.iterations *= config.oracle_budget_factor;
      break;
  }

  try {
    result.training = train(*source, sys, tc, train_rng);
  } catch (const NumericalError& e) {
    throw NumericalError(std::string(to_string(mode)) + " T=" + std::to_string(T) + " cycle=" +
                             std::to_string(cycle) + ": " + e.what(),
                         e.location());
  }
  const NeuralPolicy policy(result.training.policy);
  const auto metrics = evaluate_policy(policy, sys, config.eval_horizon, config.eval_episodes, eval_rng);
  result.row.throughput = metrics.throughput;
  result.row.overflow_prob = metrics.overflow_prob;
  result.row.discounted_return = metrics.discounted_return;
  return result;
}

std::vector<MetricsRow> experiment_policy_sweep(const ExperimentConfig& config, const ProgressFn& progress) {
  std::vector<MetricsRow> rows;
  std::map<int, MetricsRow> oracle_cache;
  for (const Mode mode : config.modes)
    for (const int T : config.learning_sizes)
      for (int cycle = 0; cycle < config.cycles; ++cycle) {
        MetricsRow row;
        const auto cached = oracle_cache.find(cycle);
        if (mode == Mode::Oracle && cached != oracle_cache.end()) {
          row = cached->second;
        } else {
          try {
            row = run_cycle(mode, T, cycle, config).row;
          } catch (const std::exception& e) {
            row = MetricsRow{mode, T, cycle, NAN, NAN, NAN, e.what()};
          }
          if (mode == Mode::Oracle) oracle_cache[cycle] = row;
        }
        row.T = T;
        if (progress) progress(row);
        rows.push_back(std::move(row));
      }
  return rows;
}

std::vector<SweepSummary> summarize_sweep(const std::vector<MetricsRow>& rows) {
  std::vector<std::pair<Mode, int>> order;
  std::map<std::pair<Mode, int>, std::array<std::vector<double>, 3>> groups;
  for (const auto& r : rows) {
    const auto key = std::make_pair(r.mode, r.T);
    if (!groups.count(key)) order.push_back(key);
    auto& g = groups[key];
    if (!r.error.empty()) continue;
    g[0].push_back(r.throughput);
    g[1].push_back(r.overflow_prob);
    g[2].push_back(r.discounted_return);
  }
  std::vector<SweepSummary> out;
  for (const auto& key : order) {
    const auto& g = groups[key];
    const auto tp = mean_se(g[0]), of = mean_se(g[1]), rt = mean_se(g[2]);
    out.push_back({key.first, key.second, int(g[0].size()), tp.mean, tp.se, of.mean, of.se, rt.mean, rt.se});
  }
  return out;
}

TrainResult train_monitoring_policy(const ExperimentConfig& config) {
  const auto& sys = config.system;
  Rng data_rng = make_rng(config.seed, {5});
  Rng train_rng = make_rng(config.seed, {6});
  const auto data =
      collect_learning_data(sys, config.monitoring.policy_learning_size, config.learning.shared_exploration, data_rng);
  const auto posterior = update_posterior(init_prior(sys, config.learning.bayesian_prior), data, sys);
  return train(ModelSource::bayesian(posterior), sys, config.training, train_rng);
}

DynamicsTables anomalous_dynamics(const ExperimentConfig& config) {
  if (config.monitoring.anomalous_generation.empty())
    throw ConfigError("monitoring: no anomalous generation table configured");
  DynamicsTables tables = config.system.dynamics;
  tables.generation.at(std::size_t(config.monitoring.cluster)) = config.monitoring.anomalous_generation;
  config.system.validate_tables(tables);
  return tables;
}

Dataset monitoring_window(const SystemConfig& config, const DynamicsTables& tables, const DevicePolicy& policy,
                          int window, Rng& rng) {
  const SystemState start = initial_state(tables, config, rng);
  return simulate(tables, policy, config, start, window - 1, rng).transitions;
}

RocExperimentResult experiment_anomaly_roc(const ExperimentConfig& config, const DevicePolicy& policy,
                                           std::uint64_t seed_offset) {
  const auto& sys = config.system;
  const auto& m = config.monitoring;
  const auto anomalous = anomalous_dynamics(config);
  const auto kind = LikelihoodKind::of_cluster(m.cluster);

  std::vector<double> grid(kRocGridPoints);
  for (int i = 0; i < kRocGridPoints; ++i) grid[std::size_t(i)] = double(i) / (kRocGridPoints - 1);

  RocExperimentResult result;
  for (const int T : m.learning_sizes) {
    RocExperimentEntry entry;
    entry.T = T;
    for (DetectorRoc* d : {&entry.bayesian, &entry.frequentist}) {
      d->fpr_grid = grid;
      d->mean_tpr.assign(grid.size(), 0.0);
    }
    for (int phase = 0; phase < m.phases; ++phase) {
      Rng data_rng = make_rng(config.seed, {7, seed_offset, tag(T), tag(phase)});
      Rng theta_rng = make_rng(config.seed, {8, seed_offset, tag(T), tag(phase)});
      Rng window_rng = make_rng(config.seed, {9, seed_offset, tag(T), tag(phase)});
      const auto data = collect_learning_data(sys, T, config.learning.shared_exploration, data_rng);
      const auto posterior = update_posterior(init_prior(sys, config.learning.bayesian_prior), data, sys);
      const auto theta_map =
          map_estimate(update_posterior(init_prior(sys, config.learning.frequentist_prior), data, sys));
      std::vector<ModelSample> thetas;
      for (int i = 0; i < m.posterior_samples; ++i) thetas.push_back(sample_model(posterior, theta_rng));

      std::array<std::vector<double>, 2> nominal, anomal;  // [bayesian, frequentist]
      auto score = [&](const DynamicsTables& tables, std::array<std::vector<double>, 2>& out) {
        const auto window = monitoring_window(sys, tables, policy, m.window, window_rng);
        out[0].push_back(log_likelihood_variance(thetas, window, kind, sys));
        out[1].push_back(frequentist_score(theta_map, window, m.cluster, sys).value);
      };
      for (int w = 0; w < m.nominal_windows; ++w) score(sys.dynamics, nominal);
      for (int w = 0; w < m.anomalous_windows; ++w) score(anomalous, anomal);

      DetectorRoc* detectors[2] = {&entry.bayesian, &entry.frequentist};
      for (int i = 0; i < 2; ++i) {
        auto curve = roc_curve(nominal[std::size_t(i)], anomal[std::size_t(i)]);
        const auto tpr = tpr_at(curve, grid);
        for (std::size_t j = 0; j < grid.size(); ++j) detectors[i]->mean_tpr[j] += tpr[j] / m.phases;
        detectors[i]->mean_auc += curve.auc / m.phases;
        detectors[i]->phase_curves.push_back(std::move(curve));
      }
    }
    for (DetectorRoc* d : {&entry.bayesian, &entry.frequentist})
      d->fpr_at_tpr80 = fpr_at_tpr(d->fpr_grid, d->mean_tpr, 0.8);
    result.entries.push_back(std::move(entry));
  }
  return result;
}

void write_metrics_csv(std::ostream& out, const std::vector<MetricsRow>& rows) {
  out << "mode,T,cycle,throughput,overflow_prob,return,error\n";
  for (const auto& r : rows) {
    out << to_string(r.mode) << ',' << r.T << ',' << r.cycle << ',';
    if (r.error.empty())
      out << format_double(r.throughput) << ',' << format_double(r.overflow_prob) << ','
          << format_double(r.discounted_return) << ",\n";
    else {
      std::string msg = r.error;
      std::replace(msg.begin(), msg.end(), ',', ';');
      std::replace(msg.begin(), msg.end(), '\n', ' ');
      out << ",,," << msg << '\n';
    }
  }
}

void write_summary_csv(std::ostream& out, const std::vector<SweepSummary>& rows) {
  out << "mode,T,n,throughput_mean,throughput_se,overflow_mean,overflow_se,return_mean,return_se\n";
  for (const auto& r : rows)
    out << to_string(r.mode) << ',' << r.T << ',' << r.n << ',' << format_double(r.throughput_mean) << ','
        << format_double(r.throughput_se) << ',' << format_double(r.overflow_mean) << ','
        << format_double(r.overflow_se) << ',' << format_double(r.return_mean) << ',' << format_double(r.return_se)
        << '\n';
}

void write_training_curve_csv(std::ostream& out, const std::vector<IterationMetrics>& curve) {
  out << "iteration,mean_return,throughput,overflow_rate,entropy,critic_loss\n";
  for (const auto& m : curve)
    out << m.iteration << ',' << format_double(m.mean_return) << ',' << format_double(m.throughput) << ','
        << format_double(m.overflow_rate) << ',' << format_double(m.entropy) << ',' << format_double(m.critic_loss)
        << '\n';
}

void write_roc_csv(std::ostream& out, const RocExperimentResult& result, bool bayesian) {
  out << "T,phase,threshold,fpr,tpr\n";
  for (const auto& entry : result.entries) {
    const auto& d = bayesian ? entry.bayesian : entry.frequentist;
    for (std::size_t p = 0; p < d.phase_curves.size(); ++p)
      for (const auto& pt : d.phase_curves[p].points)
        out << entry.T << ',' << p << ',' << format_double(pt.threshold) << ',' << format_double(pt.fpr) << ','
            << format_double(pt.tpr) << '\n';
  }
}

void write_roc_mean_csv(std::ostream& out, const RocExperimentResult& result) {
  out << "T,detector,fpr,tpr\n";
  for (const auto& entry : result.entries)
    for (const auto* d : {&entry.bayesian, &entry.frequentist})
      for (std::size_t j = 0; j < d->fpr_grid.size(); ++j)
        out << entry.T << ',' << (d == &entry.bayesian ? "bayesian" : "frequentist") << ','
            << format_double(d->fpr_grid[j]) << ',' << format_double(d->mean_tpr[j]) << '\n';
}

void write_roc_summary_csv(std::ostream& out, const RocExperimentResult& result, int policy_learning_size) {
  out << "T,detector,phases,mean_auc,fpr_at_tpr80,policy_T\n";
  for (const auto& entry : result.entries)
    for (const auto* d : {&entry.bayesian, &entry.frequentist})
      out << entry.T << ',' << (d == &entry.bayesian ? "bayesian" : "frequentist") << ',' << d->phase_curves.size()
          << ',' << format_double(d->mean_auc) << ',' << format_double(d->fpr_at_tpr80) << ','
          << policy_learning_size << '\n';
}

}  // namespace dtmac
