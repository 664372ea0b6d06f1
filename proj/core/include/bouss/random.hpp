#pragma once

#include <cstdint>
#include <random>

namespace bouss {

/// Seeded generator used for every randomized check and sampled estimate.
///
/// The engine is MT19937-64 (std::mt19937_64) seeded with the single run seed.
/// Doubles are formed from the top 53 bits of one engine output, so sequences
/// are identical across standard libraries (std::uniform_real_distribution is
/// implementation-defined and is deliberately not used).
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  /// Uniform on [0, 1).
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  std::uint64_t next() { return engine_(); }

 private:
  std::mt19937_64 engine_;
};

}  // namespace bouss
