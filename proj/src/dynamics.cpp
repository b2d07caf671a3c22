#include "shlab/dynamics.hpp"

namespace shlab {

AmbientVector f_sphere(const SpherePoint& x, const SphereControl& u) {
    const auto [b1, b2] = base_fields(x);
    return bump_m1(x) * u.u1 * b1 + u.u2 * b2;
}

AmbientVector sphere_field(const AmbientVector& x, const SphereControl& u) {
    const auto [b1, b2] = base_fields(x);
    return bump_m1(sphere_project(x)) * u.u1 * b1 + u.u2 * b2;
}

AmbientVector f1(const AmbientVector& y, const SphereControl& u, double v, const TubeConfig& tube) {
    if (!tube.in_tube(y)) return {};
    const auto [base, normal] = tube_decompose(y, tube);
    return f_sphere(base, u) + normal * v;
}

AmbientVector f2(const AmbientVector& z, const ExtendedControl& c, const TubeConfig& tube) {
    const double weight = phi(z, tube);
    if (weight == 0.0) return c.w;
    if (weight == 1.0) return f1(z, c.u, c.v, tube);
    return weight * f1(z, c.u, c.v, tube) + (1.0 - weight) * c.w;
}

}  // namespace shlab
