#pragma once

#include <cmath>
#include <cstdint>

namespace vw {

// Counter-based 64-bit generator (SplitMix64 output function applied to
// seed + counter * golden gamma). The i-th draw depends only on (seed, i),
// so streams can be split by deriving child seeds and replay is exact.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : seed_(seed) {}

  static std::uint64_t mix(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
  }

  std::uint64_t next_u64() { return mix(seed_ + (++counter_) * 0x9E3779B97F4A7C15ull); }

  // Child stream whose draws are independent of this stream's position.
  Rng child(std::uint64_t tag) const { return Rng(mix(seed_ ^ mix(tag))); }

  // Uniform in [0, 1) with 53 random mantissa bits.
  double u01() { return double(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * u01(); }

  // Box-Muller; consumes two draws per pair, caches the spare.
  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u1 = u01(), u2 = u01();
    while (u1 <= 0.0) u1 = u01();
    double r = std::sqrt(-2.0 * std::log(u1));
    double th = 6.283185307179586476925286766559 * u2;
    spare_ = r * std::sin(th);
    have_spare_ = true;
    return r * std::cos(th);
  }

  // Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n) { return n ? next_u64() % n : 0; }

 private:
  std::uint64_t seed_ = 0;
  std::uint64_t counter_ = 0;
  double spare_ = 0.0;
  bool have_spare_ = false;
};

}  // namespace vw
