#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace sharp {

using Rng = std::mt19937_64;

/// Seed of an independent stream derived from a run seed and a fixed label
/// ("init", "shuffle", "sampling", ...), optionally indexed (e.g. by epoch).
std::uint64_t derive_seed(std::uint64_t seed, std::string_view label, std::uint64_t index = 0);

inline Rng make_rng(std::uint64_t seed, std::string_view label, std::uint64_t index = 0) {
  return Rng(derive_seed(seed, label, index));
}

/// Uniform double in the open interval (0, 1).
double uniform_open(Rng& rng);
/// Standard normal draw (Box-Muller over uniform_open, platform independent).
double standard_normal(Rng& rng);

}  // namespace sharp
