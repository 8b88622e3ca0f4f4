#ifndef ANISOVA_RANDOM_HPP_
#define ANISOVA_RANDOM_HPP_

#include <cstdint>
#include <random>

namespace anisova {

// Seeded generator with platform-independent uniform and normal draws
// (std distributions are implementation-defined).
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  // Uniform in [0, 1) with 53 random bits.
  double uniform() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }
  // Standard normal (Marsaglia polar method).
  double normal();
  // Independent child stream derived from this one.
  Rng split();

  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace anisova

#endif  // ANISOVA_RANDOM_HPP_
