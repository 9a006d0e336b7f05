#pragma once

#include <cstdint>
#include <random>

namespace rfmag {

using Rng = std::mt19937_64;

/// Independent stream for shot `index` of ensemble `stream` under `master_seed`.
/// The mapping depends only on the three keys, so shots can be generated in
/// any order or on any number of workers.
inline Rng shot_rng(std::uint64_t master_seed, std::uint64_t index,
                    std::uint64_t stream = 0) {
  std::seed_seq seq{static_cast<std::uint32_t>(master_seed),
                    static_cast<std::uint32_t>(master_seed >> 32),
                    static_cast<std::uint32_t>(stream),
                    static_cast<std::uint32_t>(stream >> 32),
                    static_cast<std::uint32_t>(index),
                    static_cast<std::uint32_t>(index >> 32)};
  return Rng(seq);
}

inline double standard_normal(Rng& rng) {
  std::normal_distribution<double> dist(0.0, 1.0);
  return dist(rng);
}

}  // namespace rfmag
