#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

namespace rsched {

/// Counter-based generator: each draw is a pure function of
/// (seed, stream, counter), so rollouts can be replayed or run in any order.
/// The mixing function is the SplitMix64 finalizer.
class CounterRng {
 public:
  CounterRng(std::uint64_t seed, std::uint64_t stream)
      : key_(mix(seed ^ mix(stream + 0x9E3779B97F4A7C15ULL))) {}

  /// Uniform in [0, 1) with 53 random bits.
  double uniform(std::uint64_t counter) const {
    const std::uint64_t bits = mix(key_ + counter * 0xD1B54A32D192ED03ULL);
    return static_cast<double>(bits >> 11) * 0x1.0p-53;
  }

  /// Standard normal via Box-Muller on uniforms 2k and 2k+1.
  double normal(std::uint64_t k) const {
    const double u1 = 1.0 - uniform(2 * k);  // (0, 1]
    const double u2 = uniform(2 * k + 1);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

  static std::uint64_t mix(std::uint64_t z) {
    z += 0x9E3779B97F4A7C15ULL;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

 private:
  std::uint64_t key_;
};

}  // namespace rsched
