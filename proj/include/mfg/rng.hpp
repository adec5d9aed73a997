#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

namespace mfg {

// SplitMix64 finalizer; used to derive independent per-episode streams from
// (seed, episode-index) so results do not depend on scheduling.
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

inline std::mt19937_64 make_stream(std::uint64_t seed, std::uint64_t stream_index) {
  return std::mt19937_64(splitmix64(splitmix64(seed) ^ stream_index));
}

// Uniform double in [0, 1); bit-reproducible across platforms, unlike
// std::uniform_real_distribution.
inline double uniform01(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

inline double uniform_in(std::mt19937_64& rng, double lo, double hi) {
  return lo + (hi - lo) * uniform01(rng);
}

// Uniform sample from the probability simplex (exponential spacings).
inline std::vector<double> random_simplex(std::mt19937_64& rng, std::size_t n) {
  std::vector<double> v(n);
  double total = 0.0;
  for (auto& x : v) {
    double u = uniform01(rng);
    if (u <= 0.0) u = 0x1.0p-53;
    x = -std::log(u);
    total += x;
  }
  for (auto& x : v) x /= total;
  return v;
}

// Index sample from an explicit probability row using one uniform draw.
inline int sample_index(std::mt19937_64& rng, const std::vector<double>& probs) {
  double u = uniform01(rng);
  double acc = 0.0;
  for (std::size_t i = 0; i + 1 < probs.size(); ++i) {
    acc += probs[i];
    if (u < acc) return static_cast<int>(i);
  }
  return static_cast<int>(probs.size()) - 1;
}

}  // namespace mfg
