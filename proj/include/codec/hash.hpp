#pragma once

// Stateless hashing used to derive reproducible pseudo-random values from
// token sequences. Everything here is fully specified integer arithmetic, so
// values agree across compilers and platforms.

#include <cmath>
#include <cstdint>
#include <numbers>
#include <span>

#include "codec/types.hpp"

namespace codec::hashing {

inline std::uint64_t mix(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t combine(std::uint64_t h, std::uint64_t v) { return mix(h ^ mix(v)); }

inline std::uint64_t combine(std::uint64_t h, std::span<const TokenId> seq) {
  h = combine(h, seq.size());
  for (auto t : seq) h = combine(h, static_cast<std::uint64_t>(static_cast<std::uint32_t>(t)));
  return h;
}

// Uniform in [0, 1).
inline double unit(std::uint64_t h) { return static_cast<double>(h >> 11) * 0x1.0p-53; }

// Standard normal via Box-Muller on two derived uniforms.
inline double normal(std::uint64_t h) {
  double u1 = unit(mix(h ^ 0x5851f42d4c957f2dULL));
  double u2 = unit(mix(h ^ 0x14057b7ef767814fULL));
  if (u1 < 1e-300) u1 = 1e-300;
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

}  // namespace codec::hashing
