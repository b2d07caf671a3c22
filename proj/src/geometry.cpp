#include "shlab/geometry.hpp"

#include <algorithm>
#include <string>

#include "shlab/errors.hpp"

namespace shlab {

namespace {

// Smallest normal-vector length accepted by geodesic_direction; |p - (p.x)x| = sin G(x, p).
constexpr double kMinSinDistance = 1e-9;

double geodesic_to_pole_set(const SpherePoint& x) {
    const double to_q = std::acos(std::clamp(x.x3(), -1.0, 1.0));
    const double to_minus_q = std::acos(std::clamp(-x.x3(), -1.0, 1.0));
    return std::min(to_q, to_minus_q);
}

}  // namespace

SpherePoint::SpherePoint(const AmbientVector& coords) : coords_(coords) {
    if (!is_finite(coords)) {
        throw DomainError("SpherePoint: non-finite coordinates");
    }
    const double deviation = std::abs(norm(coords) - 1.0);
    if (deviation > kUnitNormTolerance) {
        throw DomainError("SpherePoint: | |x| - 1 | = " + std::to_string(deviation) + " exceeds tolerance");
    }
}

SpherePoint pole_q() { return SpherePoint(kPoleQ); }
SpherePoint aux_r() { return SpherePoint(kAuxR); }

void TubeConfig::validate() const {
    if (!(omega > 0.0)) throw ParameterError("TubeConfig: omega must be positive");
    if (!(eps > 0.0) || eps > omega / 2.0) throw ParameterError("TubeConfig: need 0 < eps <= omega/2");
    if (!(1.0 - omega < comega_inner && comega_inner < sharp_inner && sharp_inner < 1.0 &&
          1.0 < sharp_outer && sharp_outer < comega_outer && comega_outer < 1.0 + omega)) {
        throw ParameterError("TubeConfig: shells must nest as 1-omega < C_in < X#_in < 1 < X#_out < C_out < 1+omega");
    }
}

bool TubeConfig::in_tube(const AmbientVector& y) const {
    const double n = norm(y);
    return 1.0 - omega < n && n < 1.0 + omega;
}

bool TubeConfig::in_comega(const AmbientVector& z) const {
    const double n = norm(z);
    return n < comega_inner || n > comega_outer;
}

double smooth_transition(double t) {
    if (t <= 0.0) return 0.0;
    if (t >= 1.0) return 1.0;
    const double a = std::exp(-1.0 / t);
    const double b = std::exp(-1.0 / (1.0 - t));
    return a / (a + b);
}

double geodesic_distance(const SpherePoint& x, const SpherePoint& y) {
    return std::acos(std::clamp(dot(x.coords(), y.coords()), -1.0, 1.0));
}

SpherePoint sphere_project(const AmbientVector& y) {
    const double n = norm(y);
    if (!(n > 0.0) || !std::isfinite(n)) {
        throw DomainError("sphere_project: projection undefined at the origin");
    }
    return SpherePoint(y / n);
}

AmbientVector geodesic_direction(const SpherePoint& x, const SpherePoint& p) {
    const AmbientVector& xc = x.coords();
    const AmbientVector normal = p.coords() - dot(p.coords(), xc) * xc;
    const double n = norm(normal);
    if (n <= kMinSinDistance) {
        throw UndefinedDirectionError("geodesic_direction: x coincides with +-p");
    }
    return normal / n;
}

std::pair<AmbientVector, AmbientVector> base_fields(const AmbientVector& x) {
    return {kPoleQ - dot(x, kPoleQ) * x, cross(x, kPoleQ)};
}

std::pair<AmbientVector, AmbientVector> base_fields(const SpherePoint& x) { return base_fields(x.coords()); }

double bump_m1(const SpherePoint& x) {
    // Outside x1 > 0 the band x1/4 <= x2 <= 3x1/4 is empty and the point lies
    // in the one-set (x2 >= 7x1/8 or x2 <= x1/8).
    if (x.x1() <= 0.0) return 1.0;
    const double ratio = x.x2() / x.x1();
    constexpr double pi = std::numbers::pi;
    const double lower = smooth_transition((ratio - 1.0 / 8.0) * 8.0);   // 0 at x2 <= x1/8, 1 at x2 >= x1/4
    const double upper = smooth_transition((7.0 / 8.0 - ratio) * 8.0);  // 0 at x2 >= 7x1/8, 1 at x2 <= 3x1/4
    const double polar = smooth_transition((geodesic_to_pole_set(x) - pi / 8.0) / (pi / 8.0));
    return 1.0 - lower * upper * polar;
}

double phi(const AmbientVector& z, const TubeConfig& tube) {
    const double s = dot(z, z);
    const double in_lo = tube.comega_inner * tube.comega_inner;
    const double in_hi = tube.sharp_inner * tube.sharp_inner;
    const double out_lo = tube.sharp_outer * tube.sharp_outer;
    const double out_hi = tube.comega_outer * tube.comega_outer;
    return smooth_transition((s - in_lo) / (in_hi - in_lo)) * smooth_transition((out_hi - s) / (out_hi - out_lo));
}

std::pair<SpherePoint, AmbientVector> tube_decompose(const AmbientVector& y, const TubeConfig& tube) {
    if (!tube.in_tube(y)) {
        throw TubeMembershipError("tube_decompose: |y| = " + std::to_string(norm(y)) + " outside the omega-tube");
    }
    SpherePoint base = sphere_project(y);
    return {base, y - base.coords()};
}

}  // namespace shlab
