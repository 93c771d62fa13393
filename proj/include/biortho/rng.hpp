#pragma once

#include <cmath>
#include <cstdint>
#include <initializer_list>

namespace biortho {

/// Counter-based seeded random stream (splitmix64 core).
///
/// Streams are derived from a master seed plus a path of integers, so
/// trial t of point p of experiment e gets an independent stream from
/// (master, e, p, t) without any sequential dependence between trials.
/// Identical (seed, path) always yields the identical sequence.
class RandomStream {
 public:
  explicit RandomStream(std::uint64_t seed) : state_(seed) {}

  static RandomStream derive(std::uint64_t master,
                             std::initializer_list<std::uint64_t> path) {
    std::uint64_t s = mix(master + kGamma);
    for (std::uint64_t p : path) s = mix(s ^ mix(p + kGamma));
    return RandomStream(s);
  }

  std::uint64_t next_u64() {
    state_ += kGamma;
    return mix(state_);
  }

  /// Uniform double in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  /// Standard normal variate (Box-Muller, fixed draw count of 2 per pair).
  double gaussian() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    // shift into (0,1] so the log is finite
    const double u1 = (static_cast<double>(next_u64() >> 11) + 1.0) * 0x1.0p-53;
    const double u2 = uniform();
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 6.283185307179586476925287 * u2;
    spare_ = radius * std::sin(angle);
    has_spare_ = true;
    return radius * std::cos(angle);
  }

 private:
  static constexpr std::uint64_t kGamma = 0x9e3779b97f4a7c15ULL;

  static std::uint64_t mix(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  std::uint64_t state_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace biortho
