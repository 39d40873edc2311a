// dtmac: command line front end for simulation, model learning, COMA training,
// monitoring and the two reproduction experiments.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>

#include <CLI11.hpp>

#include "dtmac/bayes.hpp"
#include "dtmac/config_file.hpp"
#include "dtmac/env.hpp"
#include "dtmac/error.hpp"
#include "dtmac/harness.hpp"
#include "dtmac/monitor.hpp"
#include "dtmac/nn.hpp"
#include "dtmac/records.hpp"

namespace fs = std::filesystem;
using namespace dtmac;

namespace {

struct Globals {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::string mode;
};

struct Options {
  int steps = 0;
  int T = -1;
  int iterations = -1;
  int cycles = -1;
  int phases = -1;
  double persist = -1.0;
  std::string policy;
  std::string posterior;
  std::string data;
  std::string curve;
  std::vector<int> sizes;
};

ExperimentConfig load(const Globals& g) {
  ExperimentConfig c = g.config.empty() ? reference_experiment_config() : load_experiment_config(g.config);
  if (g.seed) c.seed = *g.seed;
  if (!g.mode.empty()) c.modes = {parse_mode(g.mode)};
  return c;
}

// Relative output paths resolve under $DTMAC_OUT_DIR when it is set.
fs::path output_path(const Globals& g, const std::string& fallback) {
  fs::path p = g.out.empty() ? fs::path(fallback) : fs::path(g.out);
  if (const char* dir = std::getenv("DTMAC_OUT_DIR"); dir && *dir && p.is_relative()) p = fs::path(dir) / p;
  return p;
}

std::ofstream open_out(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  return out;
}

fs::path sibling(const fs::path& path, const std::string& suffix) {
  return path.parent_path() / (path.stem().string() + suffix);
}

std::unique_ptr<DevicePolicy> load_device_policy(const Options& o, double fallback_p) {
  if (!o.policy.empty()) {
    std::ifstream in(o.policy);
    if (!in) throw std::runtime_error("cannot open policy file " + o.policy);
    return std::make_unique<NeuralPolicy>(load_policy(in));
  }
  return std::make_unique<PersistentPolicy>(o.persist >= 0.0 ? o.persist : fallback_p);
}

Dataset learning_data(const ExperimentConfig& c, const Options& o, int default_T) {
  if (!o.data.empty()) {
    std::ifstream in(o.data);
    if (!in) throw std::runtime_error("cannot open data file " + o.data);
    return read_trajectory(in, c.system.num_devices).transitions;
  }
  Rng rng = make_rng(c.seed, {11});
  return collect_learning_data(c.system, o.T >= 0 ? o.T : default_T, c.learning.shared_exploration, rng);
}

PosteriorModel load_posterior(const ExperimentConfig& c, const std::string& path) {
  return posterior_from(ConfigFile::load(path), c.system);
}

Mode single_mode(const Globals& g) { return g.mode.empty() ? Mode::Bayesian : parse_mode(g.mode); }

int cmd_simulate(const Globals& g, const Options& o) {
  const auto c = load(g);
  const auto policy = load_device_policy(o, 0.5);
  Rng rng = make_rng(c.seed, {10});
  const auto start = initial_state(c.system.dynamics, c.system, rng);
  const int steps = o.steps > 0 ? o.steps : c.eval_horizon;
  const auto traj = simulate(c.system.dynamics, *policy, c.system, start, steps, rng);
  auto out = open_out(output_path(g, "trajectory.csv"));
  write_trajectory(out, traj, c.system.num_devices);
  return 0;
}

int cmd_learn(const Globals& g, const Options& o) {
  const auto c = load(g);
  const Mode mode = single_mode(g);
  if (mode == Mode::Oracle) throw ArgumentError("learn: oracle mode does not learn a model");
  const auto data = learning_data(c, o, 20);
  const double prior = mode == Mode::Bayesian ? c.learning.bayesian_prior : c.learning.frequentist_prior;
  const auto posterior = update_posterior(init_prior(c.system, prior), data, c.system);
  ConfigFile file;
  write_posterior(file, posterior);
  const auto estimate = mode == Mode::Bayesian ? posterior_mean(posterior) : map_estimate(posterior);
  file.set("estimate", "kind", std::string(mode == Mode::Bayesian ? "posterior_mean" : "map"));
  file.set("estimate", "transitions", int(data.size()));
  file.set("estimate", "generation", estimate.generation);
  file.set("estimate", "mpr", estimate.mpr);
  auto out = open_out(output_path(g, "posterior.cfg"));
  out << file.to_string();
  return 0;
}

int cmd_train(const Globals& g, const Options& o) {
  auto c = load(g);
  if (o.iterations >= 0) c.training.iterations = o.iterations;
  const Mode mode = single_mode(g);
  TrainResult result;
  if (o.posterior.empty()) {
    c.learning_sizes = {o.T >= 0 ? o.T : 20};
    result = run_cycle(mode, c.learning_sizes[0], 0, c).training;
  } else {
    const auto posterior = load_posterior(c, o.posterior);
    Rng rng = make_rng(c.seed, {12});
    const auto source =
        mode == Mode::Bayesian ? ModelSource::bayesian(posterior) : ModelSource::fixed(map_estimate(posterior));
    result = train(source, c.system, c.training, rng);
  }
  const auto path = output_path(g, "policy.tensors");
  {
    auto out = open_out(path);
    save_policy(out, result.policy);
  }
  {
    auto out = open_out(sibling(path, ".critic.tensors"));
    save_critic(out, result.critic);
  }
  auto curve = open_out(o.curve.empty() ? sibling(path, ".curve.csv") : fs::path(o.curve));
  write_training_curve_csv(curve, result.curve);
  return 0;
}

int cmd_evaluate(const Globals& g, const Options& o) {
  const auto c = load(g);
  const auto policy = load_device_policy(o, 1.0);
  Rng rng = make_rng(c.seed, {13});
  const auto m = evaluate_policy(*policy, c.system, o.steps > 0 ? o.steps : c.eval_horizon, c.eval_episodes, rng);
  auto out = open_out(output_path(g, "evaluation.csv"));
  out << "throughput,throughput_se,overflow_prob,overflow_se,return,return_se\n"
      << format_double(m.throughput) << ',' << format_double(m.throughput_se) << ','
      << format_double(m.overflow_prob) << ',' << format_double(m.overflow_se) << ','
      << format_double(m.discounted_return) << ',' << format_double(m.return_se) << '\n';
  return 0;
}

int cmd_monitor(const Globals& g, const Options& o) {
  const auto c = load(g);
  if (o.data.empty()) throw ArgumentError("monitor: --data <trajectory.csv> is required");
  std::ifstream in(o.data);
  if (!in) throw std::runtime_error("cannot open data file " + o.data);
  const auto window = read_trajectory(in, c.system.num_devices);

  // Counts come from the posterior file (Bayesian prior) or from fresh learning data.
  PosteriorModel bayes;
  if (!o.posterior.empty()) {
    bayes = load_posterior(c, o.posterior);
  } else {
    Options learn = o;
    learn.data.clear();
    const auto data = learning_data(c, learn, c.monitoring.policy_learning_size);
    bayes = update_posterior(init_prior(c.system, c.learning.bayesian_prior), data, c.system);
  }
  PosteriorModel freq = bayes;
  auto shift = [&](DirichletTable& t) {
    for (auto& row : t.alpha)
      for (auto& a : row) a += c.learning.frequentist_prior - c.learning.bayesian_prior;
  };
  for (auto& t : freq.generation) shift(t);
  shift(freq.mpr);

  Rng rng = make_rng(c.seed, {14});
  const int cluster = c.monitoring.cluster;
  const auto bayes_score = disagreement_score(bayes, window.transitions, c.monitoring.posterior_samples,
                                              LikelihoodKind::of_cluster(cluster), c.system, rng);
  const auto freq_score = frequentist_score(map_estimate(freq), window.transitions, cluster, c.system);
  const double full_ll = log_likelihood(posterior_mean(bayes), window.transitions, nullptr, c.system, window.t0);
  auto out = open_out(output_path(g, "scores.csv"));
  out << "transitions,bayesian_variance,frequentist_negll,mean_model_ll\n"
      << window.transitions.size() << ',' << format_double(bayes_score.value) << ','
      << format_double(freq_score.value) << ',' << format_double(full_ll) << '\n';
  return 0;
}

int cmd_sweep(const Globals& g, const Options& o) {
  auto c = load(g);
  if (o.iterations >= 0) c.training.iterations = o.iterations;
  if (o.cycles > 0) c.cycles = o.cycles;
  if (!o.sizes.empty()) c.learning_sizes = o.sizes;
  c.validate();
  const auto rows = experiment_policy_sweep(c, [](const MetricsRow& r) {
    std::cerr << to_string(r.mode) << " T=" << r.T << " cycle=" << r.cycle;
    if (r.error.empty())
      std::cerr << " throughput=" << r.throughput << " overflow=" << r.overflow_prob << '\n';
    else
      std::cerr << " failed: " << r.error << '\n';
  });
  const auto path = output_path(g, "sweep.csv");
  {
    auto out = open_out(path);
    write_metrics_csv(out, rows);
  }
  auto out = open_out(sibling(path, "_summary.csv"));
  write_summary_csv(out, summarize_sweep(rows));
  return 0;
}

int cmd_roc(const Globals& g, const Options& o) {
  auto c = load(g);
  if (o.iterations >= 0) c.training.iterations = o.iterations;
  if (o.phases > 0) c.monitoring.phases = o.phases;
  if (!o.sizes.empty()) c.monitoring.learning_sizes = o.sizes;
  c.validate();
  std::unique_ptr<DevicePolicy> policy;
  if (o.policy.empty())
    policy = std::make_unique<NeuralPolicy>(train_monitoring_policy(c).policy);
  else
    policy = load_device_policy(o, 0.0);
  const auto result = experiment_anomaly_roc(c, *policy);
  const fs::path dir = output_path(g, ".");
  const int policy_T = o.policy.empty() ? c.monitoring.policy_learning_size : -1;
  {
    auto out = open_out(dir / "roc_bayesian.csv");
    write_roc_csv(out, result, true);
  }
  {
    auto out = open_out(dir / "roc_frequentist.csv");
    write_roc_csv(out, result, false);
  }
  {
    auto out = open_out(dir / "roc_mean.csv");
    write_roc_mean_csv(out, result);
  }
  auto out = open_out(dir / "roc_summary.csv");
  write_roc_summary_csv(out, result, policy_T);
  for (const auto& e : result.entries)
    std::cerr << "T=" << e.T << " bayesian auc=" << e.bayesian.mean_auc << " fpr@0.8=" << e.bayesian.fpr_at_tpr80
              << " | frequentist auc=" << e.frequentist.mean_auc << " fpr@0.8=" << e.frequentist.fpr_at_tpr80
              << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Digital-twin multiple access: model learning, COMA training and monitoring"};
  app.require_subcommand(1);
  Globals g;
  Options o;
  app.add_option("--config", g.config, "Experiment config file (default: built-in reference system)");
  app.add_option("--seed", g.seed, "Base seed (overrides [experiment] seed)");
  app.add_option("--out", g.out, "Output file, or output directory for roc");
  app.add_option("--mode", g.mode, "bayesian | frequentist | oracle")
      ->check(CLI::IsMember({"bayesian", "frequentist", "oracle"}));

  auto* simulate = app.add_subcommand("simulate", "Run a policy on the ground truth and write a trajectory");
  simulate->add_option("--steps", o.steps, "Transitions (default: eval_horizon)");
  simulate->add_option("--policy", o.policy, "Policy tensor file");
  simulate->add_option("--persist", o.persist, "p-persistent policy when no --policy is given (default 0.5)");

  auto* learn = app.add_subcommand("learn", "Learn a Dirichlet posterior from exploration data");
  learn->add_option("--data", o.data, "Trajectory CSV (default: collect T exploration steps)");
  learn->add_option("-T,--T", o.T, "Exploration steps to collect (default 20)");

  auto* train = app.add_subcommand("train", "Train a COMA policy on a learned model or the ground truth");
  train->add_option("-T,--T", o.T, "Exploration steps (default 20, ignored with --posterior)");
  train->add_option("--posterior", o.posterior, "Posterior file written by learn");
  train->add_option("--iterations", o.iterations, "Override training iterations");
  train->add_option("--curve", o.curve, "Training curve CSV (default: next to the policy file)");

  auto* evaluate = app.add_subcommand("evaluate", "Evaluate a policy on the ground truth");
  evaluate->add_option("--policy", o.policy, "Policy tensor file");
  evaluate->add_option("--persist", o.persist, "p-persistent policy when no --policy is given (default 1)");
  evaluate->add_option("--steps", o.steps, "Horizon (default: eval_horizon)");

  auto* monitor = app.add_subcommand("monitor", "Score a monitoring window with both detectors");
  monitor->add_option("--data", o.data, "Trajectory CSV to score")->required();
  monitor->add_option("--posterior", o.posterior, "Posterior file written by learn in bayesian mode");
  monitor->add_option("-T,--T", o.T, "Learn from T fresh exploration steps when no posterior is given");

  auto* sweep = app.add_subcommand("sweep", "Policy sweep over learning sizes and modes");
  sweep->add_option("--cycles", o.cycles, "Override cycle count");
  sweep->add_option("--iterations", o.iterations, "Override training iterations");
  sweep->add_option("--sizes", o.sizes, "Override learning sizes")->delimiter(',');

  auto* roc = app.add_subcommand("roc", "Anomaly-detection ROC experiment");
  roc->add_option("--phases", o.phases, "Override learning phases per size");
  roc->add_option("--iterations", o.iterations, "Override training iterations of the monitoring policy");
  roc->add_option("--sizes", o.sizes, "Override monitoring learning sizes")->delimiter(',');
  roc->add_option("--policy", o.policy, "Use this policy instead of training one");

  for (auto* sub : {simulate, learn, train, evaluate, monitor, sweep, roc}) sub->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    std::cout << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    std::cerr << "dtmac: " << e.what() << "\n\n" << app.help();
    return 2;
  }

  try {
    if (*simulate) return cmd_simulate(g, o);
    if (*learn) return cmd_learn(g, o);
    if (*train) return cmd_train(g, o);
    if (*evaluate) return cmd_evaluate(g, o);
    if (*monitor) return cmd_monitor(g, o);
    if (*sweep) return cmd_sweep(g, o);
    if (*roc) return cmd_roc(g, o);
  } catch (const std::exception& e) {
    std::cerr << "dtmac: error: " << e.what() << '\n';
    return 1;
  }
  return 1;
}
