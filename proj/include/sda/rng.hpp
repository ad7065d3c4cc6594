#pragma once

#include <cmath>
#include <complex>
#include <cstdint>

namespace sda {

/// Deterministic, platform-independent PRNG (splitmix64). Used everywhere a
/// seeded stream is required so that reports are reproducible bit-for-bit on
/// a given platform regardless of the standard library.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  /// Uniform in [0, 1).
  double uniform() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  /// Uniform in [lo, hi).
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Uniform integer in [lo, hi] inclusive.
  std::int64_t uniform_int(std::int64_t lo, std::int64_t hi) {
    return lo + static_cast<std::int64_t>(next_u64() % static_cast<std::uint64_t>(hi - lo + 1));
  }

  /// Standard normal via Box-Muller.
  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u1 = uniform();
    double u2 = uniform();
    while (u1 <= 1e-300) u1 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 2.0 * M_PI * u2;
    spare_ = r * std::sin(theta);
    have_spare_ = true;
    return r * std::cos(theta);
  }

  /// Complex standard normal (unit variance per component).
  std::complex<double> cnormal() { return {normal(), normal()}; }

  /// Uniform in the closed unit disc.
  std::complex<double> unit_disc() {
    const double r = std::sqrt(uniform());
    const double theta = 2.0 * M_PI * uniform();
    return std::polar(r, theta);
  }

  /// Derive an independent stream for sub-task `index` (splittable scheme
  /// used for concurrent trials).
  static std::uint64_t derive_seed(std::uint64_t root, std::uint64_t index) {
    Rng r(root ^ (0x517cc1b727220a95ULL * (index + 1)));
    return r.next_u64();
  }

 private:
  std::uint64_t state_;
  double spare_ = 0.0;
  bool have_spare_ = false;
};

}  // namespace sda
