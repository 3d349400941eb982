#pragma once

// Deterministic random number generation.
//
// Two flavours:
//  * Rng — a sequential SplitMix64 stream for initialisation, shuffling and
//    data synthesis. Same seed => same sequence on every platform.
//  * counter_uniform — a stateless counter-based generator used by dropout:
//    the value depends only on (seed, stream, call, index), so masks are
//    reproducible regardless of how many other ops ran in between.

#include <cmath>
#include <cstdint>

namespace hpmixer {

/// SplitMix64 finalizer; bijective 64-bit mix with good avalanche behaviour.
inline std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

/// Order-sensitive key combiner for deriving sub-stream seeds.
inline std::uint64_t key_combine(std::uint64_t a, std::uint64_t b) {
  return mix64(a ^ (0x9e3779b97f4a7c15ull + b + (a << 6) + (a >> 2)));
}

/// Sequential pseudo-random stream (SplitMix64 core, Box-Muller normals).
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(mix64(seed ^ 0xa0761d6478bd642full)) {}

  std::uint64_t next_u64() {
    state_ += 0x9e3779b97f4a7c15ull;
    std::uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

  /// Uniform double in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Log-uniform draw on [lo, hi], lo > 0.
  double log_uniform(double lo, double hi) {
    return std::exp(uniform(std::log(lo), std::log(hi)));
  }

  /// Standard normal via Box-Muller (pairs cached).
  double normal() {
    if (has_cached_) {
      has_cached_ = false;
      return cached_;
    }
    double u1 = uniform();
    double u2 = uniform();
    // Guard against log(0).
    while (u1 <= 0.0) u1 = uniform();
    double r = std::sqrt(-2.0 * std::log(u1));
    double theta = 6.283185307179586476925286766559 * u2;
    cached_ = r * std::sin(theta);
    has_cached_ = true;
    return r * std::cos(theta);
  }

  /// Uniform integer in [0, n); n must be positive.
  std::uint64_t uniform_int(std::uint64_t n) {
    // Rejection-free modulo is fine here: n is tiny relative to 2^64 in all
    // our uses, so the bias is far below anything observable.
    return next_u64() % n;
  }

  /// In-place Fisher-Yates shuffle.
  template <typename It>
  void shuffle(It first, It last) {
    auto n = static_cast<std::uint64_t>(last - first);
    for (std::uint64_t i = n; i > 1; --i) {
      std::uint64_t j = uniform_int(i);
      std::swap(first[i - 1], first[j]);
    }
  }

 private:
  std::uint64_t state_;
  bool has_cached_ = false;
  double cached_ = 0.0;
};

/// Stateless uniform in [0, 1) keyed by (seed, stream, call, index).
inline double counter_uniform(std::uint64_t seed, std::uint64_t stream,
                              std::uint64_t call, std::uint64_t index) {
  std::uint64_t k = key_combine(key_combine(key_combine(seed, stream), call), index);
  return static_cast<double>(k >> 11) * 0x1.0p-53;
}

}  // namespace hpmixer
