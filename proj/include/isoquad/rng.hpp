#pragma once

#include <cmath>
#include <cstdint>

namespace isoquad {

// Counter-based splittable PRNG. Every output word is a pure function of
// (key, counter) through the splitmix64 finalizer, so consumers can be run
// in any order or in parallel and still reproduce the same stream. Streams
// are derived from (seed, stream id); per-trial substreams come from fork().
class SplitRng {
 public:
  static constexpr uint64_t kGolden = 0x9E3779B97F4A7C15ULL;

  SplitRng(uint64_t seed, uint64_t stream = 0)
      : key_(mix64(mix64(seed + kGolden) ^ (stream * 0xD1B54A32D192ED03ULL + 0x8BB84B93962EACC9ULL))) {}

  // splitmix64 finalizer
  static uint64_t mix64(uint64_t z) {
    z ^= z >> 30;
    z *= 0xBF58476D1CE4E5B9ULL;
    z ^= z >> 27;
    z *= 0x94D049BB133111EBULL;
    z ^= z >> 31;
    return z;
  }

  SplitRng fork(uint64_t child) const { return SplitRng(key_ ^ 0xA0761D6478BD642FULL, child); }

  uint64_t next_u64() { return mix64(key_ + (++counter_) * kGolden); }

  // uniform in [0,1)
  double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  // uniform in (0,1), safe under log()
  double next_unit_open() {
    return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
  }

  int next_sign() { return (next_u64() & 1u) ? 1 : -1; }

  uint64_t next_below(uint64_t bound) { return next_u64() % bound; }

  double next_gaussian() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u1 = next_unit_open();
    double u2 = next_double();
    double r = std::sqrt(-2.0 * std::log(u1));
    double a = 6.28318530717958647692 * u2;
    spare_ = r * std::sin(a);
    have_spare_ = true;
    return r * std::cos(a);
  }

  // unit-variance Laplace (scale 1/sqrt(2))
  double next_laplace() {
    double c = next_unit_open() - 0.5;
    double mag = -std::log(1.0 - 2.0 * std::fabs(c));
    return std::copysign(mag, c) * 0.70710678118654752440;
  }

  // Gamma(a, 1) for a > 1, Marsaglia-Tsang squeeze
  double next_gamma(double a) {
    double d = a - 1.0 / 3.0;
    double c = 1.0 / std::sqrt(9.0 * d);
    for (;;) {
      double x, v;
      do {
        x = next_gaussian();
        v = 1.0 + c * x;
      } while (v <= 0.0);
      v = v * v * v;
      double u = next_unit_open();
      if (u < 1.0 - 0.0331 * x * x * x * x) return d * v;
      if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v;
    }
  }

  // Student t with nu > 2 degrees of freedom, unscaled
  double next_student_t(double nu) {
    double z = next_gaussian();
    double chi2 = 2.0 * next_gamma(0.5 * nu);
    return z / std::sqrt(chi2 / nu);
  }

 private:
  explicit SplitRng(uint64_t rawkey) : key_(rawkey) {}

  uint64_t key_ = 0;
  uint64_t counter_ = 0;
  double spare_ = 0.0;
  bool have_spare_ = false;
};

}  // namespace isoquad
