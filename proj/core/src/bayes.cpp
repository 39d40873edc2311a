#include "dtmac/bayes.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "dtmac/env.hpp"
#include "dtmac/error.hpp"

namespace dtmac {

namespace {

ProbabilityTable normalize_rows(const DirichletTable& table, double shift) {
  ProbabilityTable out;
  out.reserve(table.alpha.size());
  for (const auto& row : table.alpha) {
    double total = 0.0;
    for (const double a : row) total += a - shift;
    std::vector<double> p(row.size());
    for (std::size_t j = 0; j < row.size(); ++j) p[j] = (row[j] - shift) / total;
    out.push_back(std::move(p));
  }
  return out;
}

template <typename RowFn>
ModelSample map_tables(const PosteriorModel& posterior, RowFn&& fn) {
  ModelSample out;
  for (const auto& table : posterior.generation) out.generation.push_back(fn(table));
  out.mpr = fn(posterior.mpr);
  return out;
}

template <typename Fn>
void for_each_alpha(PosteriorModel& posterior, Fn&& fn) {
  for (auto& table : posterior.generation)
    for (auto& row : table.alpha)
      for (auto& a : row) fn(a);
  for (auto& row : posterior.mpr.alpha)
    for (auto& a : row) fn(a);
}

}  // namespace

PosteriorModel init_prior(const SystemConfig& config, double alpha0) {
  if (!(alpha0 > 0.0) || !std::isfinite(alpha0)) throw ArgumentError("init_prior: alpha0 must be positive");
  PosteriorModel prior;
  for (const auto& cluster : config.clusters) {
    const std::size_t patterns = std::size_t{1} << cluster.size();
    prior.generation.push_back(DirichletTable{std::vector<std::vector<double>>(patterns, std::vector<double>(patterns, alpha0))});
  }
  for (int n = 1; n <= config.num_devices; ++n)
    prior.mpr.alpha.emplace_back(static_cast<std::size_t>(n) + 1, alpha0);
  return prior;
}

void validate_record(const TransitionRecord& record, const SystemConfig& config, std::size_t index) {
  const auto K = static_cast<std::size_t>(config.num_devices);
  if (record.state.size() != K || record.next_state.size() != K || record.action.size() != K)
    throw RecordError(index, "expected " + std::to_string(K) + " devices");
  for (std::size_t k = 0; k < K; ++k) {
    const auto& s = record.state[k];
    const auto& n = record.next_state[k];
    const int q_max = config.q_max[k];
    if (s.q < 0 || s.q > q_max || n.q < 0 || n.q > q_max) throw RecordError(index, "buffer occupancy out of range");
    if (s.g < 0 || s.g > 1 || s.d < 0 || s.d > 1 || n.g < 0 || n.g > 1 || n.d < 0 || n.d > 1)
      throw RecordError(index, "g and d must be bits");
    if (record.action[k] > 1 || record.action[k] > s.q) throw RecordError(index, "action transmits from an empty buffer");
    if (n.d > record.action[k]) throw RecordError(index, "delivery without transmission");
    if (n.q != std::min(q_max, s.q + n.g - n.d)) throw RecordError(index, "next buffer contradicts the update rule");
  }
}

PosteriorModel update_posterior(const PosteriorModel& prior, const Dataset& dataset, const SystemConfig& config) {
  if (prior.generation.size() != config.clusters.size() ||
      prior.mpr.alpha.size() != static_cast<std::size_t>(config.num_devices))
    throw ArgumentError("update_posterior: posterior does not match the system structure");
  // Integer tallies first, then one addition per entry, so the result is
  // exactly prior + count.
  PosteriorModel counts = prior;
  for_each_alpha(counts, [](double& a) { a = 0.0; });
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    const auto& rec = dataset[i];
    validate_record(rec, config, i);
    for (std::size_t c = 0; c < config.clusters.size(); ++c) {
      const auto& members = config.clusters[c];
      counts.generation[c].alpha[cluster_pattern(rec.state, members)][cluster_pattern(rec.next_state, members)] += 1.0;
    }
    const int n_tx = count_ones(rec.action);
    if (n_tx >= 1) {
      int n_rx = 0;
      for (const auto& obs : rec.next_state.devices) n_rx += obs.d;
      counts.mpr.alpha[n_tx - 1][n_rx] += 1.0;
    }
  }
  PosteriorModel post = prior;
  auto add = [](DirichletTable& to, const DirichletTable& from) {
    for (std::size_t r = 0; r < to.alpha.size(); ++r)
      for (std::size_t c = 0; c < to.alpha[r].size(); ++c) to.alpha[r][c] += from.alpha[r][c];
  };
  for (std::size_t c = 0; c < post.generation.size(); ++c) add(post.generation[c], counts.generation[c]);
  add(post.mpr, counts.mpr);
  return post;
}

ModelSample posterior_mean(const PosteriorModel& posterior) {
  return map_tables(posterior, [](const DirichletTable& t) { return normalize_rows(t, 0.0); });
}

ModelSample map_estimate(const PosteriorModel& posterior) {
  auto check = [](const DirichletTable& t) {
    for (const auto& row : t.alpha)
      for (const double a : row)
        if (!(a > 1.0)) throw MapUndefinedError("map_estimate: concentration " + std::to_string(a) + " <= 1");
  };
  for (const auto& t : posterior.generation) check(t);
  check(posterior.mpr);
  return map_tables(posterior, [](const DirichletTable& t) { return normalize_rows(t, 1.0); });
}

std::vector<double> sample_dirichlet(std::span<const double> alpha, Rng& rng) {
  std::vector<double> log_g(alpha.size());
  double top = -INFINITY;
  for (std::size_t j = 0; j < alpha.size(); ++j) {
    log_g[j] = sample_log_gamma(alpha[j], rng);
    top = std::max(top, log_g[j]);
  }
  double total = 0.0;
  for (auto& v : log_g) {
    v = std::exp(v - top);
    total += v;
  }
  for (auto& v : log_g) v /= total;
  return log_g;
}

ModelSample sample_model(const PosteriorModel& posterior, Rng& rng) {
  return map_tables(posterior, [&rng](const DirichletTable& t) {
    ProbabilityTable rows;
    rows.reserve(t.alpha.size());
    for (const auto& row : t.alpha) rows.push_back(sample_dirichlet(row, rng));
    return rows;
  });
}

PosteriorModel scale_posterior(const PosteriorModel& posterior, double factor) {
  PosteriorModel out = posterior;
  auto scale = [factor](DirichletTable& t) {
    for (auto& row : t.alpha)
      for (auto& a : row) a *= factor;
  };
  for (auto& t : out.generation) scale(t);
  scale(out.mpr);
  return out;
}

StepOutcome model_step(const ModelSample& theta, const SystemState& state, const JointAction& action,
                       const SystemConfig& config, Rng& rng) {
  return step(theta, state, action, config, rng);
}

double model_transition_probability(const ModelSample& theta, const SystemState& state, const JointAction& action,
                                    const SystemState& next_state, const SystemConfig& config) {
  return transition_probability(theta, state, action, next_state, config);
}

}  // namespace dtmac
