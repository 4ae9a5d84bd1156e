#pragma once

#include <cstdint>

namespace polyfp::rng {

/// SplitMix64 finalizer: bijective 64-bit avalanche.
inline std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

/// Counter-based stream: the value depends only on (seed, particle, step,
/// draw), so parallel evaluation order cannot change the stream.
/// step < 2^24 and draw < 2^8 occupy disjoint bit fields of the counter.
inline std::uint64_t counter_value(std::uint64_t seed, std::uint64_t particle,
                                   std::uint64_t step, std::uint64_t draw) {
  const std::uint64_t counter = (particle << 32) ^ (step << 8) ^ draw;
  return mix64(mix64(seed + 0x9E3779B97F4A7C15ULL) ^ counter);
}

/// Uniform in the open interval (0, 1).
inline double to_uniform(std::uint64_t bits) {
  return (static_cast<double>(bits >> 11) + 0.5) * 0x1.0p-53;
}

/// Two independent standard normals by the Box-Muller transform from the
/// counter-based stream; draw indexes the pair.
void normal_pair(std::uint64_t seed, std::uint64_t particle, std::uint64_t step,
                 std::uint64_t pair_index, double& n0, double& n1);

}  // namespace polyfp::rng
