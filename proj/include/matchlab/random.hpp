#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <utility>

namespace matchlab {

/// SplitMix64 finalizer. Bijective on 64-bit words.
constexpr std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Seed of the (n, trial) record under a master seed. The two salts keep
/// (n, trial) and (trial, n) apart.
constexpr std::uint64_t record_seed(std::uint64_t master, std::uint64_t n, std::uint64_t trial) {
  return mix64(master ^ mix64(n ^ 0x6a09e667f3bcc909ULL) ^ mix64(trial ^ 0xbb67ae8584caa73bULL));
}

/// Independent child stream of a seed (stream 0 = X cloud, 1 = Y cloud, ...).
constexpr std::uint64_t child_seed(std::uint64_t seed, std::uint64_t stream) {
  return mix64(seed ^ mix64(stream + 0x3c6ef372fe94f82bULL));
}

/// Portable generator: mt19937_64 for bits, explicit conversions for variates so
/// streams are bit-identical across standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(mix64(seed)) {}

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  /// Uniform on (0, 1).
  double uniform_open() {
    double u = 0.0;
    while (u == 0.0) u = uniform();
    return u;
  }

  /// Pair of independent standard normals (Marsaglia polar method).
  std::pair<double, double> normal_pair() {
    for (;;) {
      const double v1 = 2.0 * uniform() - 1.0;
      const double v2 = 2.0 * uniform() - 1.0;
      const double s = v1 * v1 + v2 * v2;
      if (s >= 1.0 || s == 0.0) continue;
      const double f = std::sqrt(-2.0 * std::log(s) / s);
      return {v1 * f, v2 * f};
    }
  }

  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    auto [a, b] = normal_pair();
    spare_ = b;
    has_spare_ = true;
    return a;
  }

  std::uint64_t bits() { return engine_(); }

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace matchlab
