// Copyright 2026 the agm authors.
// SPDX-License-Identifier: Apache-2.0

#ifndef AGM_RNG_HPP
#define AGM_RNG_HPP

#include <cmath>
#include <cstdint>

namespace agm {

/// splitmix64-based generator. Hand-rolled so that synthetic scenes, noise
/// perturbation and every seeded fixture are bit-reproducible across
/// standard library implementations (std distributions are not).
class Rng {
 public:
  explicit Rng(uint64_t seed) : state_(seed) {}

  uint64_t next_u64() {
    uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  /// Uniform in [0, 1).
  double uniform01() { return (next_u64() >> 11) * 0x1.0p-53; }

  /// Uniform in (0, 1]; never returns 0 (safe under log()).
  double uniform01_open() { return ((next_u64() >> 11) + 1) * 0x1.0p-53; }

  /// Uniform integer in [0, n). Modulo bias is irrelevant at our ranges.
  uint64_t below(uint64_t n) { return next_u64() % n; }

  int range(int lo, int hi) {  // inclusive bounds
    return lo + static_cast<int>(below(static_cast<uint64_t>(hi - lo + 1)));
  }

  /// Standard normal via Box-Muller, spare value cached.
  double gaussian() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1 = uniform01_open();
    double u2 = uniform01();
    double r = std::sqrt(-2.0 * std::log(u1));
    double a = 6.283185307179586476925286766559 * u2;
    spare_ = r * std::sin(a);
    has_spare_ = true;
    return r * std::cos(a);
  }

  /// Derives an independent stream, e.g. one per ROI index, so results do
  /// not depend on worker scheduling.
  static uint64_t derive(uint64_t seed, uint64_t stream) {
    Rng r(seed ^ (0x517cc1b727220a95ULL * (stream + 1)));
    return r.next_u64();
  }

 private:
  uint64_t state_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace agm

#endif  // AGM_RNG_HPP
