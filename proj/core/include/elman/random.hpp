#pragma once

#include <cstdint>
#include <random>

namespace elman {

/// Purpose tags keep substreams of one seed disjoint.
enum class RngTag : std::uint32_t {
  Boundary = 1,
  Multistart = 2,
  Spherical = 3,
  Euclidean = 4,
  Trial = 5,
  RecursionMc = 6,
  FreeEnergy = 7,
  Instance = 8,
};

/// Engine keyed by (seed, tag, index): streams are independent of draw order.
inline std::mt19937_64 make_rng(std::uint64_t seed, RngTag tag, std::uint64_t index) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(tag), static_cast<std::uint32_t>(index),
                    static_cast<std::uint32_t>(index >> 32)};
  return std::mt19937_64(seq);
}

}  // namespace elman
