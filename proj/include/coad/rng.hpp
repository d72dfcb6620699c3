#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace coad {

// SplitMix64 scramble; used to derive independent per-task seeds from a
// master seed so replications can run in any order (or in parallel) and
// still produce identical streams.
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream) {
  return splitmix64(splitmix64(master) ^ (0x632be59bd9b4e019ULL + stream));
}

inline std::mt19937_64 make_rng(std::uint64_t seed) {
  return std::mt19937_64(splitmix64(seed));
}

// Marsaglia polar method, no cached spare: each call consumes a fresh pair
// of uniforms, which keeps draw sequences reproducible across call sites.
inline double standard_normal(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  for (;;) {
    const double u = unit(rng);
    const double v = unit(rng);
    const double s = u * u + v * v;
    if (s > 0.0 && s < 1.0) {
      return u * std::sqrt(-2.0 * std::log(s) / s);
    }
  }
}

// Standard normal conditioned on [-1, 1] by rejection (acceptance ~68%).
inline double truncated_standard_normal(std::mt19937_64& rng) {
  for (;;) {
    const double e = standard_normal(rng);
    if (e >= -1.0 && e <= 1.0) return e;
  }
}

inline double uniform_real(std::mt19937_64& rng, double lo, double hi) {
  std::uniform_real_distribution<double> dist(lo, hi);
  return dist(rng);
}

}  // namespace coad
