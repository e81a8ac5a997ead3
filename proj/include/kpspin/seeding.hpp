#pragma once

#include <cstdint>
#include <random>

namespace kpspin {

// splitmix64 finalizer.
inline std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Stable seed for task (i, j) under a root seed:
//   mix64(mix64(mix64(root) ^ i) ^ j)
// Independent of evaluation order, so serial and parallel runs agree.
inline std::uint64_t derive_seed(std::uint64_t root, std::uint64_t i, std::uint64_t j = 0) {
  return mix64(mix64(mix64(root) ^ i) ^ j);
}

using Rng = std::mt19937_64;

inline Rng make_rng(std::uint64_t seed) { return Rng(seed); }

}  // namespace kpspin
