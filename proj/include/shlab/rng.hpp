#pragma once

#include <cstdint>

namespace shlab {

// Counter-based uniform draws: the value depends only on (seed, stream, index),
// so results are independent of evaluation order and worker scheduling.
constexpr std::uint64_t splitmix64(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

constexpr std::uint64_t counter_hash(std::uint64_t seed, std::uint64_t stream, std::uint64_t index) {
    return splitmix64(splitmix64(splitmix64(seed) ^ stream) ^ index);
}

/// Uniform double in [0, 1) with 53 random bits.
constexpr double counter_uniform(std::uint64_t seed, std::uint64_t stream, std::uint64_t index) {
    return static_cast<double>(counter_hash(seed, stream, index) >> 11) * 0x1.0p-53;
}

namespace streams {
inline constexpr std::uint64_t kPartitionJitter = 1;
inline constexpr std::uint64_t kObservationNoise = 2;
inline constexpr std::uint64_t kActuatorNoise = 3;
inline constexpr std::uint64_t kRunSeed = 4;
inline constexpr std::uint64_t kShellSampler = 5;
}  // namespace streams

}  // namespace shlab
