#pragma once

#include "shlab/geometry.hpp"

namespace shlab {

struct SphereControl {
    double u1{0.0};
    double u2{0.0};

    constexpr SphereControl operator+(const SphereControl& o) const { return {u1 + o.u1, u2 + o.u2}; }
    constexpr SphereControl operator*(double s) const { return {u1 * s, u2 * s}; }
    constexpr bool operator==(const SphereControl&) const = default;
    double norm() const { return std::hypot(u1, u2); }
};

/// Control for the ambient extension: sphere control u, normal gain v, drift w.
struct ExtendedControl {
    SphereControl u;
    double v{0.0};
    AmbientVector w;
};

/// Sphere system A1(x) u1 + A2(x) u2 with A1 = M1 B1 and A2 = B2.
AmbientVector f_sphere(const SpherePoint& x, const SphereControl& u);

/// The same field evaluated at an ambient state near the sphere: B1, B2 use the
/// raw coordinates and M1 is taken at the radial projection. This is the
/// right-hand side handed to the integrator, whose stage points leave the
/// sphere at O(h^2). |x| = 1 is invariant for it.
AmbientVector sphere_field(const AmbientVector& x, const SphereControl& u);

/// Tube extension f1(y, u, v) = f(pi_M(y), u) + pi_N(y) v inside the omega-tube
/// (strict inequalities) and zero outside.
AmbientVector f1(const AmbientVector& y, const SphereControl& u, double v,
                 const TubeConfig& tube = TubeConfig::sphere());

/// Global extension f2(z, <u,v,w>) = phi(z) f1(z, u, v) + (1 - phi(z)) w.
AmbientVector f2(const AmbientVector& z, const ExtendedControl& c, const TubeConfig& tube = TubeConfig::sphere());

}  // namespace shlab
