#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace velgan {

// Deterministic RNG used project-wide. mt19937_64 is fully specified by the
// standard and the draw methods below avoid std distributions (whose output
// is implementation-defined), so any (seed -> sequence) mapping is stable
// across compilers and standard libraries.
class Rng {
 public:
  explicit Rng(uint64_t seed) : eng_(seed) {}

  uint64_t next_u64() { return eng_(); }

  // Unbiased draw in [0, n) by rejection.
  uint64_t uniform_below(uint64_t n) {
    if (n == 0) return 0;
    const uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    uint64_t x;
    do {
      x = eng_();
    } while (x >= limit);
    return x % n;
  }

  // Inclusive integer range.
  int uniform_int(int lo, int hi) {
    return lo + static_cast<int>(uniform_below(static_cast<uint64_t>(hi - lo) + 1));
  }

  // Uniform in [a, b) with 53-bit resolution.
  double uniform(double a = 0.0, double b = 1.0) {
    const double u = static_cast<double>(eng_() >> 11) * 0x1.0p-53;
    return a + (b - a) * u;
  }

  // Box-Muller, one value per call (no cached spare).
  double normal(double mean = 0.0, double stddev = 1.0) {
    double u1;
    do {
      u1 = uniform();
    } while (u1 <= 0.0);
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    return mean + stddev * r * std::cos(2.0 * M_PI * u2);
  }

  // splitmix64 finalizer; combines a base seed with a stream index so that
  // per-inline / per-role substreams are independent but reproducible.
  static uint64_t mix(uint64_t a, uint64_t b) {
    uint64_t z = a + 0x9e3779b97f4a7c15ULL * (b + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

 private:
  std::mt19937_64 eng_;
};

}  // namespace velgan
