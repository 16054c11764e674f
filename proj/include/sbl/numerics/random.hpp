#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace sbl {

using Rng = std::mt19937_64;

// Mixes a base seed with stream coordinates (category, instance, view, ...)
// into an independent seed. Pure, so parallel work can derive per-item
// generators without sharing state.
std::uint64_t derive_seed(std::uint64_t base, std::initializer_list<std::uint64_t> stream);

inline Rng make_rng(std::uint64_t base, std::initializer_list<std::uint64_t> stream) {
  return Rng(derive_seed(base, stream));
}

double uniform(Rng& rng, double lo, double hi);
double standard_normal(Rng& rng);
// Uniform integer in [lo, hi].
std::size_t uniform_index(Rng& rng, std::size_t lo, std::size_t hi);

}  // namespace sbl
