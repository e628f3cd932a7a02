#pragma once

#include <cstdint>
#include <random>

namespace camdist {

// Seeded random source with distribution formulas fixed in this library, so
// streams are identical across standard library implementations.
class Rng {
 public:
  explicit Rng(uint64_t seed);

  uint64_t NextU64();
  // Uniform in [0, 1).
  double Uniform();
  double Uniform(double lo, double hi);
  // Uniform integer in [0, n). n must be positive.
  uint64_t UniformInt(uint64_t n);
  double Normal();
  bool Bernoulli(double p);

 private:
  std::mt19937_64 engine_;
  bool has_spare_normal_ = false;
  double spare_normal_ = 0.0;
};

// SplitMix64 finalizer over (seed, stream); derives independent sub-seeds.
uint64_t DeriveSeed(uint64_t seed, uint64_t stream);

}  // namespace camdist
