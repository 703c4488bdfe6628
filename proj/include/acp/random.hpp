#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace acp {

// Seed for an independent sub-stream; mixing keeps nearby (seed, stream)
// pairs uncorrelated.
inline std::uint64_t substream_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed * 0x9E3779B97F4A7C15ULL + stream * 0xD1B54A32D192ED03ULL + 0x632BE59BD9B4E019ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

// Uniform on [0, 1) with 53 random bits; portable across standard libraries.
inline double draw_uniform(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

inline double draw_exponential(std::mt19937_64& rng, double mean) {
  return -mean * std::log1p(-draw_uniform(rng));
}

}  // namespace acp
