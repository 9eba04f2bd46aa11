#include "dkt/rng.hpp"

#include <cmath>

namespace dkt {

namespace {
constexpr double kTwoPi = 6.283185307179586476925286766559;
}

std::uint64_t Rng::next_u64() {
  std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ull);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

std::uint64_t Rng::next_below(std::uint64_t n) {
  return static_cast<std::uint64_t>(
      (static_cast<unsigned __int128>(next_u64()) * static_cast<unsigned __int128>(n)) >> 64);
}

double Rng::normal(double mean, double sd) {
  const double u1 = 1.0 - next_double();  // (0, 1], keeps log finite
  const double u2 = next_double();
  const double radius = std::sqrt(-2.0 * std::log(u1));
  return mean + sd * radius * std::cos(kTwoPi * u2);
}

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t purpose) {
  Rng r(base);
  std::uint64_t out = 0;
  for (std::uint64_t i = 0; i <= purpose; ++i) out = r.next_u64();
  return out;
}

}  // namespace dkt
