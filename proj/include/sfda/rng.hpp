#pragma once

#include <cstdint>
#include <random>
#include <string>

namespace sfda {

using Rng = std::mt19937_64;

/// Derive an independent stream from (seed, tag) so that adding a consumer
/// does not perturb the draws seen by the others.
inline std::uint64_t derive_seed(std::uint64_t seed, const std::string& tag) {
  // FNV-1a over the tag, mixed with the base seed.
  std::uint64_t h = 14695981039346656037ull ^ seed;
  for (unsigned char c : tag) {
    h ^= c;
    h *= 1099511628211ull;
  }
  h ^= h >> 33;
  h *= 0xff51afd7ed558ccdull;
  h ^= h >> 33;
  return h;
}

inline Rng make_rng(std::uint64_t seed, const std::string& tag) {
  return Rng(derive_seed(seed, tag));
}

}  // namespace sfda
