#pragma once

#include <cstdint>

namespace flydram {

// SplitMix64 (Steele, Lea, Flood 2014). Constants are the published ones.
inline constexpr std::uint64_t kGoldenGamma = 0x9E3779B97F4A7C15ULL;

constexpr std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

/// Order-independent hash of a key tuple; the building block of every keyed
/// stream in the library.
constexpr std::uint64_t hash_combine(std::uint64_t key, std::uint64_t value) {
  return mix64(key + kGoldenGamma + mix64(value));
}

/// Sequential generator over the SplitMix64 sequence. Satisfies
/// UniformRandomBitGenerator so it plugs into <random> and <algorithm>.
class SplitMix64 {
 public:
  using result_type = std::uint64_t;

  explicit constexpr SplitMix64(std::uint64_t seed) : state_(seed) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return ~result_type{0}; }

  constexpr result_type operator()() {
    state_ += kGoldenGamma;
    return mix64(state_);
  }

  /// Uniform double in [0, 1) with 53 bits of resolution.
  double uniform() { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

  /// Uniform integer in [0, bound). Lemire's multiply-shift; bias < 2^-64 * bound.
  std::uint64_t below(std::uint64_t bound) {
    return static_cast<std::uint64_t>((static_cast<unsigned __int128>((*this)()) * bound) >> 64);
  }

 private:
  std::uint64_t state_;
};

/// Probability -> 64-bit threshold such that `hash < threshold` fires with
/// probability p for a uniform hash. p >= 1 always fires.
constexpr std::uint64_t probability_threshold(double p) {
  if (p <= 0.0) return 0;
  if (p >= 1.0) return ~std::uint64_t{0};
  return static_cast<std::uint64_t>(p * 18446744073709551616.0);
}

}  // namespace flydram
