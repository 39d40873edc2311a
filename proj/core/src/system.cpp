#include "dtmac/system.hpp"

#include <cmath>
#include <set>
#include <string>

#include "dtmac/error.hpp"

namespace dtmac {

namespace {

constexpr double kRowTolerance = 1e-9;

void check_row(const std::vector<double>& row, std::size_t expected_size, const std::string& where) {
  if (row.size() != expected_size)
    throw ConfigError(where + ": expected " + std::to_string(expected_size) + " entries, got " +
                      std::to_string(row.size()));
  double sum = 0.0;
  for (const double p : row) {
    if (!(p >= 0.0) || !std::isfinite(p)) throw ConfigError(where + ": negative or non-finite probability");
    sum += p;
  }
  if (std::abs(sum - 1.0) > kRowTolerance) throw ConfigError(where + ": row sums to " + std::to_string(sum));
}

}  // namespace

void SystemConfig::validate() const {
  if (num_devices < 1) throw ConfigError("system: need at least one device");
  if (static_cast<int>(q_max.size()) != num_devices) throw ConfigError("system: q_max needs one entry per device");
  for (const int q : q_max)
    if (q < 1) throw ConfigError("system: buffer capacities must be >= 1");
  if (static_cast<int>(beta.size()) != num_devices) throw ConfigError("system: beta needs one entry per device");
  if (!(xi > 0.0)) throw ConfigError("system: xi must be positive");
  if (!(gamma >= 0.0 && gamma <= 1.0)) throw ConfigError("system: gamma must lie in [0, 1]");
  std::set<int> seen;
  for (const auto& cluster : clusters) {
    if (cluster.empty()) throw ConfigError("system: empty cluster");
    if (cluster.size() > 20) throw ConfigError("system: cluster too large for pattern tables");
    for (const int k : cluster) {
      if (k < 0 || k >= num_devices) throw ConfigError("system: cluster member out of range");
      if (!seen.insert(k).second) throw ConfigError("system: clusters overlap");
    }
  }
  if (static_cast<int>(seen.size()) != num_devices) throw ConfigError("system: clusters do not cover all devices");
  validate_tables(dynamics);
}

void SystemConfig::validate_tables(const DynamicsTables& tables) const {
  if (tables.generation.size() != clusters.size())
    throw ConfigError("tables: need one generation table per cluster");
  for (std::size_t i = 0; i < clusters.size(); ++i) {
    const std::size_t patterns = std::size_t{1} << clusters[i].size();
    const auto& table = tables.generation[i];
    if (table.size() != patterns)
      throw ConfigError("tables: generation table " + std::to_string(i + 1) + " needs " + std::to_string(patterns) +
                        " rows");
    for (std::size_t r = 0; r < patterns; ++r)
      check_row(table[r], patterns, "generation table " + std::to_string(i + 1) + " row " + std::to_string(r));
  }
  if (static_cast<int>(tables.mpr.size()) != num_devices)
    throw ConfigError("tables: MPR table needs one row per n_tx in 1..K");
  for (int n = 1; n <= num_devices; ++n)
    check_row(tables.mpr[n - 1], static_cast<std::size_t>(n) + 1, "mpr row n_tx=" + std::to_string(n));
}

int SystemConfig::max_queue() const {
  int m = 0;
  for (const int q : q_max) m = std::max(m, q);
  return m;
}

int SystemConfig::cluster_of(int device) const {
  for (std::size_t i = 0; i < clusters.size(); ++i)
    for (const int k : clusters[i])
      if (k == device) return static_cast<int>(i);
  throw ConfigError("device " + std::to_string(device) + " belongs to no cluster");
}

int cluster_pattern(const SystemState& state, const std::vector<int>& members) {
  int pattern = 0;
  for (std::size_t j = 0; j < members.size(); ++j)
    if (state[members[j]].g) pattern |= 1 << j;
  return pattern;
}

void scatter_pattern(int pattern, const std::vector<int>& members, SystemState& state) {
  for (std::size_t j = 0; j < members.size(); ++j) state[members[j]].g = (pattern >> j) & 1;
}

int count_ones(const BitVector& bits) {
  int n = 0;
  for (const auto b : bits) n += b ? 1 : 0;
  return n;
}

SystemState empty_state(int num_devices) {
  return SystemState{std::vector<DeviceObservation>(static_cast<std::size_t>(num_devices))};
}

bool action_compatible(const SystemState& state, const JointAction& action) {
  if (action.size() != state.size()) return false;
  for (std::size_t k = 0; k < action.size(); ++k) {
    if (action[k] > 1) return false;
    if (action[k] > state[k].q) return false;
  }
  return true;
}

SystemConfig reference_config() {
  SystemConfig config;
  config.num_devices = 4;
  config.clusters = {{0, 1}, {2, 3}};
  config.q_max = {1, 1, 1, 1};
  // Patterns {00, 10, 01, 11}: at most one device per cluster generates, each with 0.4.
  const std::vector<double> row{0.2, 0.4, 0.4, 0.0};
  const ProbabilityTable table(4, row);
  config.dynamics.generation = {table, table};
  config.dynamics.mpr = {
      {0.0, 1.0},
      {0.0, 0.8, 0.2},
      {1.0, 0.0, 0.0, 0.0},
      {1.0, 0.0, 0.0, 0.0, 0.0},
  };
  config.beta = {1.0, 1.0, 1.0, 1.0};
  config.xi = 50.0;
  config.gamma = 0.95;
  return config;
}

}  // namespace dtmac
