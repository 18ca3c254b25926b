// Copyright (c) 2026 The gelcal authors.
// SPDX-License-Identifier: Apache-2.0

#ifndef GELCAL_RNG_HPP_
#define GELCAL_RNG_HPP_

#include <cstdint>

namespace gelcal {

/// Counter-based 64-bit generator (splitmix64 output function applied to
/// key + counter).  Streams for different seeds are independent even for
/// adjacent seed values, and every draw depends only on (seed, counter),
/// which keeps replicate streams stable under any execution order.
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed) : key_(mix(seed ^ 0x7c139a5e3ull)) {}

  std::uint64_t next_u64() {
    return mix(key_ + 0x9E3779B97F4A7C15ull * ++counter_);
  }

  /// Uniform draw strictly inside (0,1).
  double next_uniform() {
    return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
  }

  /// Standard normal by inverse CDF; draw-order stable (one uniform each).
  double next_normal();

  bool next_bernoulli(double p) { return next_uniform() < p; }

 private:
  static std::uint64_t mix(std::uint64_t z) {
    z ^= z >> 30;
    z *= 0xBF58476D1CE4E5B9ull;
    z ^= z >> 27;
    z *= 0x94D049BB133111EBull;
    z ^= z >> 31;
    return z;
  }

  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

}  // namespace gelcal

#endif  // GELCAL_RNG_HPP_
