#pragma once

#include <cstdint>
#include <limits>

#include "kuramoto/common.hpp"

namespace kuramoto {

namespace detail {

// SplitMix64 finalizer. Bijective on 64-bit words.
inline std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ull;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

}  // namespace detail

// Derive an independent stream seed from (base seed, stream index).
// Deterministic, and distinct indices give uncorrelated streams, so trials
// can be evaluated in any order or in parallel.
inline std::uint64_t substream_seed(std::uint64_t base, std::uint64_t index) {
  return detail::mix64(detail::mix64(base) + 0x9e3779b97f4a7c15ull * (index + 1));
}

// Counter-based generator: output i is a hash of (key, i). State is two
// words, copies are cheap, and a given seed yields the same sequence on any
// platform with IEEE doubles.
class CounterRng {
 public:
  explicit CounterRng(std::uint64_t seed) : key_(detail::mix64(seed)) {}

  std::uint64_t next_u64() { return detail::mix64(key_ + 0x9e3779b97f4a7c15ull * ++counter_); }

  // Uniform on [0, 1), 53 random bits.
  double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  // Standard normal via Box-Muller; the second deviate of each pair is cached.
  double next_gaussian() {
    if (has_cached_) {
      has_cached_ = false;
      return cached_;
    }
    double u1 = next_double();
    double u2 = next_double();
    // Guard the log against u1 == 0.
    while (u1 <= 0.0) u1 = next_double();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double phi = two_pi * u2;
    cached_ = r * std::sin(phi);
    has_cached_ = true;
    return r * std::cos(phi);
  }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
  double cached_ = 0.0;
  bool has_cached_ = false;
};

}  // namespace kuramoto
