#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <span>

#include "odpp/error.hpp"

namespace odpp {

/// Seeded generator with platform-independent draws. The standard
/// distributions are implementation-defined, so uniform reals and categorical
/// samples are derived from raw mt19937_64 output directly.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Standard normal via Box-Muller (one value per call, no caching).
  double normal() {
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
  }

  std::size_t index(std::size_t n) {
    if (n == 0) fail(ErrorCode::invalid_argument, "Rng::index on empty range");
    return static_cast<std::size_t>(uniform() * static_cast<double>(n)) % n;
  }

  /// Samples an index from a probability vector. Falls back to the last
  /// positive entry when rounding leaves the cumulative sum short of u.
  std::size_t categorical(std::span<const double> probs) {
    const double u = uniform();
    double acc = 0.0;
    std::size_t last = probs.size();
    for (std::size_t i = 0; i < probs.size(); ++i) {
      if (probs[i] <= 0.0) continue;
      acc += probs[i];
      last = i;
      if (u < acc) return i;
    }
    if (last == probs.size()) fail(ErrorCode::invalid_argument, "categorical over zero mass");
    return last;
  }

  /// Derives an independent child stream; used to give each rollout its own
  /// generator so collection order never changes results.
  Rng split() { return Rng(splitmix(engine_())); }

 private:
  static std::uint64_t splitmix(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
  }

  std::mt19937_64 engine_;
};

}  // namespace odpp
