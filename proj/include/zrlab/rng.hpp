#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string_view>

namespace zrlab {

// Project-wide generator. Independent streams are split off a master seed by
// hashing a derivation label (and optional index) through SplitMix64, so every
// stochastic quantity is traceable to (seed, label, index).
using Rng = std::mt19937_64;

constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

constexpr std::uint64_t fnv1a64(std::string_view s) noexcept {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : s) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::uint64_t derive_seed(std::uint64_t seed, std::string_view label, std::uint64_t index = 0);

inline Rng make_rng(std::uint64_t seed, std::string_view label, std::uint64_t index = 0) {
  return Rng(derive_seed(seed, label, index));
}

// Uniform on [0,1) with 53 random bits.
inline double uniform01(Rng& g) { return static_cast<double>(g() >> 11) * 0x1.0p-53; }

// Exp(rate) by inversion; rate > 0.
inline double exponential(Rng& g, double rate) { return -std::log1p(-uniform01(g)) / rate; }

// Number of failures before the first success, success probability 1-q.
inline std::int64_t geometric_failures(Rng& g, double q) {
  if (q <= 0.0) return 0;
  const double u = 1.0 - uniform01(g);  // (0,1]
  return static_cast<std::int64_t>(std::floor(std::log(u) / std::log(q)));
}

}  // namespace zrlab
