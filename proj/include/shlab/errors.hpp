#pragma once

#include <stdexcept>
#include <string>

namespace shlab {

// Input outside the domain of a map (zero vector for the radial projection,
// a point off the unit sphere, the poles of mu).
struct DomainError : std::domain_error {
    using std::domain_error::domain_error;
};

// Geodesic direction requested at x = +-p.
struct UndefinedDirectionError : std::domain_error {
    using std::domain_error::domain_error;
};

// Point outside the omega-tube where a tube decomposition is required.
struct TubeMembershipError : std::domain_error {
    using std::domain_error::domain_error;
};

// The origin has no unique nearest point on the sphere.
struct DegenerateNearestPointError : std::domain_error {
    using std::domain_error::domain_error;
};

struct ParameterError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace shlab
