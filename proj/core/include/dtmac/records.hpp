#pragma once

#include <iosfwd>
#include <vector>

#include "dtmac/system.hpp"

namespace dtmac {

// Line-delimited trajectory records, CSV with a header:
//
//   t,q1..qK,g1..gK,d1..dK,a1..aK,reward
//
// Row t carries s_t, a_t and r(s_t, a_t, s_{t+1}). A chained dataset of n
// transitions takes n + 1 rows; the last row holds the final state with
// empty action and reward cells.
struct Trajectory {
  int t0 = 0;
  Dataset transitions;
  std::vector<double> rewards;  // same length as transitions
};

void write_trajectory(std::ostream& out, const Trajectory& trajectory, int num_devices);

// Throws RecordError with the offending line for malformed input, and for
// datasets that do not chain.
Trajectory read_trajectory(std::istream& in, int num_devices);

bool is_chained(const Dataset& dataset);

}  // namespace dtmac
