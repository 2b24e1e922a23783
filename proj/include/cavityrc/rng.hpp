#pragma once

#include <cstdint>
#include <random>

namespace cavityrc {

// All randomness in the project flows through mt19937_64 plus the mappings
// below. std::uniform_real_distribution is implementation-defined, so the
// [0,1) mapping is pinned here to keep outputs bit-identical across builds.

inline double uniform01(std::mt19937_64 &gen) {
  return static_cast<double>(gen() >> 11) * 0x1.0p-53;
}

inline double uniform(std::mt19937_64 &gen, double lo, double hi) {
  return lo + (hi - lo) * uniform01(gen);
}

/// Integer in [0, n), rejection-sampled so the result is unbiased and stable.
inline std::uint64_t uniform_index(std::mt19937_64 &gen, std::uint64_t n) {
  const std::uint64_t limit = std::uint64_t(-1) - std::uint64_t(-1) % n;
  std::uint64_t x;
  do {
    x = gen();
  } while (x >= limit);
  return x % n;
}

} // namespace cavityrc
