#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "dtmac/bayes.hpp"
#include "dtmac/coma.hpp"
#include "dtmac/config_file.hpp"
#include "dtmac/monitor.hpp"
#include "dtmac/nn.hpp"
#include "dtmac/policy.hpp"
#include "dtmac/records.hpp"
#include "dtmac/system.hpp"

namespace dtmac {

enum class Mode { Bayesian, Frequentist, Oracle };

std::string_view to_string(Mode mode);
Mode parse_mode(std::string_view text);

struct LearningConfig {
  double bayesian_prior = 0.01;
  double frequentist_prior = 1.01;
  // One transmit probability per slot shared by all devices; false draws one per device.
  bool shared_exploration = true;
};

struct MonitoringConfig {
  int window = 10;  // T^M states per window, T^M - 1 transitions
  int posterior_samples = 50;
  int nominal_windows = 200;
  int anomalous_windows = 200;
  int phases = 50;
  int cluster = 0;  // 0-based cluster scored by the cluster log-likelihood
  std::vector<int> learning_sizes{20, 50};
  ProbabilityTable anomalous_generation;  // replaces the monitored cluster's table
  int policy_learning_size = 50;          // T of the Bayesian policy that produces windows
};

struct ExperimentConfig {
  SystemConfig system;
  LearningConfig learning;
  TrainConfig training;
  MonitoringConfig monitoring;
  std::vector<Mode> modes{Mode::Bayesian, Mode::Frequentist, Mode::Oracle};
  std::vector<int> learning_sizes{0, 1, 2, 3, 4, 5, 10, 15, 20};
  int cycles = 50;
  int eval_horizon = 100;
  int eval_episodes = 100;
  int oracle_budget_factor = 10;
  std::uint64_t seed = 1;

  void validate() const;
};

// Reads [system], [learning], [training], [monitoring] and [experiment].
// Missing keys outside [system] keep their defaults.
ExperimentConfig experiment_config_from(const ConfigFile& file);
ExperimentConfig load_experiment_config(const std::filesystem::path& path);
ConfigFile to_config_file(const ExperimentConfig& config);

// The shipped case-study configuration.
ExperimentConfig reference_experiment_config();

// Per-device transmit probabilities of the random exploration policy for one
// slot: q_t ~ U[0,1] (shared or per device), masked by empty buffers.
std::vector<double> exploration_policy(const SystemState& state, bool shared, Rng& rng);

// Runs the ground truth under the exploration policy for T slots from the
// initial state: T - 1 transitions (none for T <= 1).
Dataset collect_learning_data(const SystemConfig& config, int T, bool shared, Rng& rng);

// Runs `policy` on the given dynamics for `steps` transitions starting at
// `start` and slot index `t0`.
Trajectory simulate(const DynamicsTables& tables, const DevicePolicy& policy, const SystemConfig& config,
                    const SystemState& start, int steps, Rng& rng, int t0 = 0);

struct PolicyMetrics {
  double throughput = 0.0;      // delivered packets per slot
  double overflow_prob = 0.0;   // per device per slot
  double discounted_return = 0.0;
  double throughput_se = 0.0;   // standard errors over episodes
  double overflow_se = 0.0;
  double return_se = 0.0;
};

PolicyMetrics evaluate_policy(const DevicePolicy& policy, const SystemConfig& config, int horizon, int episodes,
                              Rng& rng);

struct MetricsRow {
  Mode mode = Mode::Bayesian;
  int T = 0;
  int cycle = 0;
  double throughput = 0.0;
  double overflow_prob = 0.0;
  double discounted_return = 0.0;
  std::string error;  // nonempty when the cycle failed
};

struct CycleResult {
  MetricsRow row;
  TrainResult training;
};

// collect -> learn -> train -> evaluate. Seeds derive from (config.seed, T,
// cycle) so Bayesian and frequentist runs of one (T, cycle) see the same
// learning data; oracle runs ignore T.
CycleResult run_cycle(Mode mode, int T, int cycle, const ExperimentConfig& config);

using ProgressFn = std::function<void(const MetricsRow&)>;

// One row per (mode, T, cycle) in that nesting order.
std::vector<MetricsRow> experiment_policy_sweep(const ExperimentConfig& config, const ProgressFn& progress = {});

struct SweepSummary {
  Mode mode = Mode::Bayesian;
  int T = 0;
  int n = 0;
  double throughput_mean = 0.0, throughput_se = 0.0;
  double overflow_mean = 0.0, overflow_se = 0.0;
  double return_mean = 0.0, return_se = 0.0;
};

std::vector<SweepSummary> summarize_sweep(const std::vector<MetricsRow>& rows);

// Bayesian policy trained at T = monitoring.policy_learning_size; produces the
// operation-phase windows scored by the detectors.
TrainResult train_monitoring_policy(const ExperimentConfig& config);

struct DetectorRoc {
  std::vector<RocCurve> phase_curves;
  std::vector<double> fpr_grid;
  std::vector<double> mean_tpr;  // vertical average of phase curves
  double mean_auc = 0.0;
  double fpr_at_tpr80 = 0.0;
};

struct RocExperimentEntry {
  int T = 0;
  DetectorRoc bayesian;
  DetectorRoc frequentist;
};

struct RocExperimentResult {
  std::vector<RocExperimentEntry> entries;  // one per monitoring learning size
};

// For each learning size and phase: learn posterior and MAP from fresh data,
// score nominal and anomalous windows under `policy`, build per-phase ROC
// curves, then average them. `seed_offset` selects an independent repetition.
RocExperimentResult experiment_anomaly_roc(const ExperimentConfig& config, const DevicePolicy& policy,
                                           std::uint64_t seed_offset = 0);

// Nominal windows run the ground truth; anomalous windows swap in the
// anomalous generation table. Each window starts from the initial-state rule.
Dataset monitoring_window(const SystemConfig& config, const DynamicsTables& tables, const DevicePolicy& policy,
                          int window, Rng& rng);
DynamicsTables anomalous_dynamics(const ExperimentConfig& config);

// CSV writers.
void write_metrics_csv(std::ostream& out, const std::vector<MetricsRow>& rows);
void write_summary_csv(std::ostream& out, const std::vector<SweepSummary>& rows);
void write_training_curve_csv(std::ostream& out, const std::vector<IterationMetrics>& curve);
// Per-phase curves: T, phase, threshold, fpr, tpr.
void write_roc_csv(std::ostream& out, const RocExperimentResult& result, bool bayesian);
// Vertically averaged curves on the FPR grid.
void write_roc_mean_csv(std::ostream& out, const RocExperimentResult& result);
void write_roc_summary_csv(std::ostream& out, const RocExperimentResult& result, int policy_learning_size);

}  // namespace dtmac
