#pragma once

#include <cstdint>

namespace dkt {

// splitmix64 PRNG: one 64-bit counter state, mixed per draw. The integer
// stream and the uniform mapping are pure integer/IEEE ops, so identical
// seeds give identical streams on every platform.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64();

  // Uniform in [0, 1) with 53-bit resolution.
  double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * next_double(); }

  // Uniform in [0, n), n > 0, via multiply-shift.
  std::uint64_t next_below(std::uint64_t n);

  // Box-Muller transform; consumes exactly two uniforms per call.
  double normal(double mean = 0.0, double sd = 1.0);

  int bernoulli(double p) { return next_double() < p ? 1 : 0; }

 private:
  std::uint64_t state_;
};

// k-th output of a splitmix64 stream seeded with `base`. Used to derive
// independent per-purpose seeds (data, init, shuffle, ...) from the single
// user-facing seed.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t purpose);

}  // namespace dkt
