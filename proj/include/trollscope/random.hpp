#pragma once

// Portable, reproducible randomness. std::uniform_*_distribution and
// std::shuffle are implementation-defined, so every sampling routine in the
// project goes through these helpers on top of std::mt19937_64.

#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <span>
#include <utility>
#include <vector>

namespace trollscope {

using Rng = std::mt19937_64;

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Independent stream for sub-task `index` of a run seeded with `seed`.
inline Rng derive_rng(std::uint64_t seed, std::uint64_t index) {
  return Rng(splitmix64(splitmix64(seed) ^ splitmix64(index + 0x632be59bd9b4e019ULL)));
}

/// Uniform integer in [0, n) by rejection; n > 0.
inline std::uint64_t uniform_index(Rng& rng, std::uint64_t n) {
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                              std::numeric_limits<std::uint64_t>::max() % n;
  std::uint64_t x;
  do {
    x = rng();
  } while (x >= limit);
  return x % n;
}

/// Uniform double in [0, 1) with 53 random bits.
inline double uniform_unit(Rng& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

inline double uniform_real(Rng& rng, double lo, double hi) {
  return lo + (hi - lo) * uniform_unit(rng);
}

inline bool bernoulli(Rng& rng, double p) { return uniform_unit(rng) < p; }

/// Fisher-Yates; identical output on every platform for a given rng state.
template <typename T>
void shuffle_in_place(std::span<T> items, Rng& rng) {
  for (std::size_t i = items.size(); i > 1; --i) {
    std::size_t j = uniform_index(rng, i);
    std::swap(items[i - 1], items[j]);
  }
}

template <typename T>
void shuffle_in_place(std::vector<T>& items, Rng& rng) {
  shuffle_in_place(std::span<T>(items), rng);
}

/// First `k` elements of a partial Fisher-Yates pass: a uniform sample
/// without replacement, in draw order.
template <typename T>
std::vector<T> sample_without_replacement(std::vector<T> pool, std::size_t k, Rng& rng) {
  for (std::size_t i = 0; i < k && i < pool.size(); ++i) {
    std::size_t j = i + uniform_index(rng, pool.size() - i);
    std::swap(pool[i], pool[j]);
  }
  pool.resize(std::min(k, pool.size()));
  return pool;
}

/// Geometric number of failures before a success, mean (1-p)/p.
inline std::uint64_t geometric(Rng& rng, double mean) {
  if (mean <= 0) return 0;
  double p = 1.0 / (1.0 + mean);
  double u = uniform_unit(rng);
  return static_cast<std::uint64_t>(std::floor(std::log1p(-u) / std::log1p(-p)));
}

}  // namespace trollscope
