#pragma once

#include <cstdint>
#include <random>

namespace cowrite {

// Portable deterministic randomness. std::uniform_*_distribution output is
// implementation-defined, so seeded results go through these helpers instead.

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(splitmix64(seed)) {}

  // Uniform in [0, 1) with 53 bits of precision.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  // Uniform integer in [0, bound] by rejection; bound < 2^64 - 1.
  std::uint64_t below_or_equal(std::uint64_t bound) {
    if (bound == 0) return 0;
    const std::uint64_t range = bound + 1;
    const std::uint64_t limit = (~std::uint64_t{0} / range) * range;
    std::uint64_t x;
    do {
      x = engine_();
    } while (x >= limit);
    return x % range;
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace cowrite
