#pragma once

#include <cstdint>

#include "vrrw/sites.hpp"

namespace vrrw {

/// Version tag for the (seed, i, j) -> uniform derivation rule. Stamped into
/// every output file header so archived data stays interpretable if the rule
/// ever changes.
inline constexpr const char* kDerivationVersion = "cbmix64-v1";

/// 64-bit finalizer with full avalanche (splitmix64 finalization step).
constexpr std::uint64_t mix64(std::uint64_t x) {
  x ^= x >> 30;
  x *= 0xbf58476d1ce4e5b9ULL;
  x ^= x >> 27;
  x *= 0x94d049bb133111ebULL;
  x ^= x >> 31;
  return x;
}

/// Signed sites fold into the unsigned key space: 0,-1,1,-2,2,... -> 0,1,2,3,4.
constexpr std::uint64_t zigzag(Site j) {
  return j >= 0 ? 2ULL * static_cast<std::uint64_t>(j)
                : 2ULL * static_cast<std::uint64_t>(-(j + 1)) + 1ULL;
}

/// The i.i.d. uniform array omega_{i,j} indexed by (visit index i >= 1,
/// site j), realized as a pure keyed function of (master_seed, i, j).
/// Evaluation is stateless, so two walks consuming cells in different
/// orders read identical values, and concurrent reads are safe.
struct UniformTable {
  std::uint64_t master_seed = 0;

  std::uint64_t bits(std::uint64_t i, Site j) const {
    std::uint64_t h = mix64(master_seed ^ 0x9e3779b97f4a7c15ULL);
    h = mix64(h + 0x9e3779b97f4a7c15ULL * i);
    h = mix64(h + 0xc2b2ae3d27d4eb4fULL * zigzag(j));
    return h;
  }

  /// Uniform in [0,1): top 53 bits scaled by 2^-53.
  double at(std::uint64_t i, Site j) const {
    return static_cast<double>(bits(i, j) >> 11) * 0x1.0p-53;
  }
};

/// Derives the seed of replicate r from a master seed. Injective in r for a
/// fixed master: r -> master + C*(r+1) is injective mod 2^64 (C odd) and
/// mix64 is a bijection.
constexpr std::uint64_t replicate_seed(std::uint64_t master, std::uint64_t r) {
  return mix64(master + 0x9e3779b97f4a7c15ULL * (r + 1));
}

}  // namespace vrrw
