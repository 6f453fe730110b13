#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace gagnet {

// Deterministic draws on top of mt19937_64. std::uniform_real_distribution is
// implementation-defined, so the mappings are spelled out here; checkpoints and
// manifests must reproduce bit-exactly from a seed.

inline double uniform01(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

inline double uniform(std::mt19937_64& rng, double lo, double hi) {
  return lo + (hi - lo) * uniform01(rng);
}

inline std::int64_t uniform_int(std::mt19937_64& rng, std::int64_t lo, std::int64_t hi_inclusive) {
  // Modulo bias is irrelevant at the ranges used here (offsets, pool picks).
  const std::uint64_t span = static_cast<std::uint64_t>(hi_inclusive - lo) + 1;
  return lo + static_cast<std::int64_t>(rng() % span);
}

/// Box-Muller; consumes two draws per call.
inline double normal(std::mt19937_64& rng) {
  double u1 = uniform01(rng);
  double u2 = uniform01(rng);
  if (u1 < 1e-300) u1 = 1e-300;
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

}  // namespace gagnet
