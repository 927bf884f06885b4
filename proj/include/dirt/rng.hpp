#pragma once

#include <cstdint>
#include <random>

namespace dirt {

using Rng = std::mt19937_64;

/// Derives an independent stream from a base seed and a stream id, so that
/// runs are reproducible while sub-tasks get decorrelated generators.
inline Rng make_rng(std::uint64_t seed, std::uint64_t stream = 0) {
    const std::uint64_t mixed = stream ^ 0x9e3779b97f4a7c15ull;
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(mixed), static_cast<std::uint32_t>(mixed >> 32)};
    return Rng(seq);
}

inline double uniform01(Rng& rng) {
    return std::uniform_real_distribution<double>(0.0, 1.0)(rng);
}

} // namespace dirt
