#pragma once

#include <span>
#include <vector>

#include "dtmac/random.hpp"
#include "dtmac/system.hpp"

namespace dtmac {

// Concentration parameters, one row per conditioning context.
struct DirichletTable {
  std::vector<std::vector<double>> alpha;

  bool operator==(const DirichletTable&) const = default;
};

// Posterior over the C generation tables and the MPR count table.
struct PosteriorModel {
  std::vector<DirichletTable> generation;
  DirichletTable mpr;  // contexts n_tx = 1..K, outcomes 0..n_tx

  bool operator==(const PosteriorModel&) const = default;
};

PosteriorModel init_prior(const SystemConfig& config, double alpha0);

// Adds one count per observed event. Generation events are keyed by
// (cluster pattern at t -> pattern at t+1); channel events by
// (n_tx at t -> n_rx at t+1) and only for n_tx >= 1.
// Throws RecordError naming the first malformed record.
PosteriorModel update_posterior(const PosteriorModel& prior, const Dataset& dataset,
                                const SystemConfig& config);

// Structural validation used by update_posterior and the record loader.
void validate_record(const TransitionRecord& record, const SystemConfig& config, std::size_t index);

ModelSample posterior_mean(const PosteriorModel& posterior);

// (alpha - 1) / sum(alpha - 1) per row; throws MapUndefinedError if any alpha <= 1.
ModelSample map_estimate(const PosteriorModel& posterior);

std::vector<double> sample_dirichlet(std::span<const double> alpha, Rng& rng);

ModelSample sample_model(const PosteriorModel& posterior, Rng& rng);

// Returns the posterior with every concentration multiplied by `factor`.
PosteriorModel scale_posterior(const PosteriorModel& posterior, double factor);

StepOutcome model_step(const ModelSample& theta, const SystemState& state, const JointAction& action,
                       const SystemConfig& config, Rng& rng);

double model_transition_probability(const ModelSample& theta, const SystemState& state,
                                    const JointAction& action, const SystemState& next_state,
                                    const SystemConfig& config);

}  // namespace dtmac
