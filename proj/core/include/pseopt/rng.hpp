#pragma once

#include "pseopt/types.hpp"

#include <cstdint>

namespace pseopt {

/// PCG32 generator (O'Neill). Small, fast, and identical output on every
/// platform, which keeps seeded runs byte-reproducible.
class Pcg32 {
 public:
  explicit Pcg32(std::uint64_t seed, std::uint64_t stream = 0x14057b7ef767814fULL) {
    state_ = 0u;
    inc_ = (stream << 1u) | 1u;
    next_u32();
    state_ += seed;
    next_u32();
  }

  std::uint32_t next_u32() {
    std::uint64_t old = state_;
    state_ = old * 6364136223846793005ULL + inc_;
    std::uint32_t xorshifted = static_cast<std::uint32_t>(((old >> 18u) ^ old) >> 27u);
    std::uint32_t rot = static_cast<std::uint32_t>(old >> 59u);
    return (xorshifted >> rot) | (xorshifted << ((32u - rot) & 31u));
  }

  /// Uniform double in [0, 1) with 53 random bits.
  double next_double() {
    std::uint64_t hi = next_u32();
    std::uint64_t lo = next_u32();
    return static_cast<double>(((hi << 32) | lo) >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * next_double(); }

  Vec3 uniform_in_box(const Vec3& lo, const Vec3& hi) {
    return Vec3(uniform(lo.x(), hi.x()), uniform(lo.y(), hi.y()), uniform(lo.z(), hi.z()));
  }

  /// Uniform integer in [0, n).
  std::uint32_t next_below(std::uint32_t n) {
    return static_cast<std::uint32_t>(next_double() * n);
  }

 private:
  std::uint64_t state_;
  std::uint64_t inc_;
};

}  // namespace pseopt
