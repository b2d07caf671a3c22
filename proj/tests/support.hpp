#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

#include "shlab/geometry.hpp"
#include "shlab/rng.hpp"

namespace testing {

// Uniform point on the unit sphere from two counter draws.
inline shlab::AmbientVector random_unit(std::uint64_t seed, std::uint64_t i) {
    const double z = 1.0 - 2.0 * shlab::counter_uniform(seed, 100, 2 * i);
    const double th = 2.0 * std::numbers::pi * shlab::counter_uniform(seed, 100, 2 * i + 1);
    const double r = std::sqrt(1.0 - z * z);
    return {r * std::cos(th), r * std::sin(th), z};
}

inline double uniform(std::uint64_t seed, std::uint64_t i, double lo, double hi) {
    return lo + (hi - lo) * shlab::counter_uniform(seed, 101, i);
}

// Reference geodesic distance through atan2, independent of the clamped arccos.
inline double angle_between(const shlab::AmbientVector& a, const shlab::AmbientVector& b) {
    return std::atan2(shlab::norm(shlab::cross(a, b)), shlab::dot(a, b));
}

}  // namespace testing
