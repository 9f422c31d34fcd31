#pragma once

#include <cstdint>

namespace flare {

// 64-bit linear congruential generator (Knuth MMIX multiplier). Chosen over
// <random> engines+distributions because the double mapping below is pinned
// bit-for-bit across platforms. Reports record the name "lcg64".
class Lcg64 {
public:
  static constexpr const char* kName = "lcg64";

  explicit Lcg64(uint64_t seed = 0) : state_(seed + 0x9E3779B97F4A7C15ULL) {
    // burn a few rounds so small seeds decorrelate
    next();
    next();
  }

  uint64_t next() {
    state_ = state_ * 6364136223846793005ULL + 1442695040888963407ULL;
    return state_;
  }

  // uniform in [0,1) with 53-bit resolution
  double next_double() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * next_double(); }

  // uniform integer in [0, n)
  uint64_t next_below(uint64_t n) { return n ? next() % n : 0; }

private:
  uint64_t state_;
};

}  // namespace flare
