#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <utility>

namespace prdesc {

// The standard distributions are implementation-defined, so everything that
// must be reproducible draws through these helpers on top of mt19937_64
// (whose output sequence is fixed by the standard).
using Rng = std::mt19937_64;

/// Uniform double in [0, 1) with 53 random bits.
inline double uniform01(Rng& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

inline double uniform(Rng& rng, double lo, double hi) {
  return lo + (hi - lo) * uniform01(rng);
}

/// Uniform integer in [0, n). n must be positive.
inline std::uint64_t uniform_index(Rng& rng, std::uint64_t n) {
  // Rejection sampling removes modulo bias.
  const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
  std::uint64_t x;
  do {
    x = rng();
  } while (x >= limit);
  return x % n;
}

template <typename T>
void shuffle(std::span<T> items, Rng& rng) {
  for (std::size_t i = items.size(); i > 1; --i) {
    std::size_t j = uniform_index(rng, i);
    std::swap(items[i - 1], items[j]);
  }
}

/// Fixed offsets for deriving subsystem seeds from the single run seed.
namespace seed_offset {
inline constexpr std::uint64_t kSplit = 1;
inline constexpr std::uint64_t kInit = 2;
inline constexpr std::uint64_t kMlShuffle = 3;
inline constexpr std::uint64_t kHybridShuffle = 4;
inline constexpr std::uint64_t kSampling = 5;
}  // namespace seed_offset

}  // namespace prdesc
