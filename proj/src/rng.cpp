#include "qfi/rng.hpp"

#include <cmath>

namespace qfi {

double Rng::normal() {
  // Box-Muller, always consuming exactly two draws.
  double u1 = unit();
  double u2 = unit();
  if (u1 <= 0.0) u1 = 0x1.0p-53;
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925286766559 * u2);
}

std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b) {
  std::uint64_t x = a;
  Rng::splitmix64(x);
  x ^= b + 0x9e3779b97f4a7c15ULL + (x << 6) + (x >> 2);
  return Rng::splitmix64(x);
}

std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b, std::uint64_t c) {
  return mix_seed(mix_seed(a, b), c);
}

std::uint64_t fnv1a64(const char* data, std::size_t len) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (std::size_t i = 0; i < len; ++i) {
    h ^= static_cast<unsigned char>(data[i]);
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace qfi
