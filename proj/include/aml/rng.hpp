#pragma once

// Counter-based random numbers: the i-th draw for a seed depends only on
// (seed, stream, i), so results do not depend on evaluation order.

#include <cmath>
#include <cstdint>
#include <numbers>

namespace aml::rng {

constexpr std::uint64_t splitmix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

constexpr std::uint64_t hash(std::uint64_t seed, std::uint64_t stream, std::uint64_t counter) {
  return splitmix64(splitmix64(splitmix64(seed) ^ stream) + counter);
}

/// Uniform in [0, 1) with 53 random bits.
constexpr double uniform(std::uint64_t seed, std::uint64_t stream, std::uint64_t counter) {
  return static_cast<double>(hash(seed, stream, counter) >> 11) * 0x1.0p-53;
}

/// Standard normal via Box-Muller on two consecutive counters.
inline double normal(std::uint64_t seed, std::uint64_t stream, std::uint64_t counter) {
  const double u1 = 1.0 - uniform(seed, stream, 2 * counter);  // (0, 1]
  const double u2 = uniform(seed, stream, 2 * counter + 1);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

namespace streams {
inline constexpr std::uint64_t init_angles = 1;
inline constexpr std::uint64_t init_gauss = 2;
inline constexpr std::uint64_t perceptron = 3;
inline constexpr std::uint64_t test = 99;
}  // namespace streams

}  // namespace aml::rng
