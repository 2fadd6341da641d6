#pragma once

#include <cstdint>
#include <random>

#include "pesgen/geometry.hpp"

namespace pesgen {

/// splitmix64 step; used to derive independent per-sample seeds from a master seed.
inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Seed for stream `index` of a master seed. Streams are mutually independent
/// and stable across runs, so work can be sharded without changing results.
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) {
  std::uint64_t s = master ^ (0x5851f42d4c957f2dULL * (index + 1));
  splitmix64(s);
  return splitmix64(s);
}

/// Deterministic RNG. Doubles are extracted from the raw 64-bit stream by hand
/// so draws do not depend on the standard library's distribution internals.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  std::uint64_t bits() { return gen_(); }

  /// Uniform on [0, 1).
  double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

  /// Uniform on (0, 1].
  double open_unit() { return 1.0 - uniform(); }

  /// Uniform on [lo, hi).
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Uniform integer in [0, n).
  std::uint64_t integer(std::uint64_t n) { return gen_() % n; }

  /// Uniformly distributed direction on the unit sphere.
  Vec3 unit_vector() {
    const double z = 1.0 - 2.0 * uniform();
    const double phi = 2.0 * 3.14159265358979323846 * uniform();
    const double s = std::sqrt(std::max(0.0, 1.0 - z * z));
    return {s * std::cos(phi), s * std::sin(phi), z};
  }

 private:
  std::mt19937_64 gen_;
};

}  // namespace pesgen
