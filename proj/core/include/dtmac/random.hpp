#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>
#include <span>

namespace dtmac {

using Rng = std::mt19937_64;

// Mixes a base seed with a list of tags into an independent stream seed.
std::uint64_t derive_seed(std::uint64_t base, std::initializer_list<std::uint64_t> tags);

inline Rng make_rng(std::uint64_t base, std::initializer_list<std::uint64_t> tags) {
  return Rng(derive_seed(base, tags));
}

double uniform01(Rng& rng);

bool bernoulli(double p, Rng& rng);

// Inverse-CDF draw. Never returns an index whose probability is zero.
int sample_categorical(std::span<const double> probs, Rng& rng);

// log of a Gamma(shape, 1) variate. Stays finite for shapes far below one,
// where the variate itself underflows double precision.
double sample_log_gamma(double shape, Rng& rng);

}  // namespace dtmac
