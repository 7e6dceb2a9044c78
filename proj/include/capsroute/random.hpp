#pragma once

#include <cstdint>
#include <random>

namespace capsroute {

/// Seeded generator with a fixed, platform-independent mapping from the
/// mt19937_64 stream to doubles. The standard distributions are
/// implementation-defined, so they are not used anywhere fixtures depend on.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  /// Uniform on [0, 1) with 53 random bits.
  double uniform01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  /// Uniform on [lo, hi).
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  /// Uniform integer on [lo, hi].
  std::uint64_t uniform_int(std::uint64_t lo, std::uint64_t hi) {
    return lo + engine_() % (hi - lo + 1);
  }

  /// Standard normal via Box-Muller; one value per call.
  double normal();

 private:
  std::mt19937_64 engine_;
};

}  // namespace capsroute
