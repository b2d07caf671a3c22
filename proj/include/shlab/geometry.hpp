#pragma once

#include <cmath>
#include <numbers>
#include <utility>

namespace shlab {

/// Point or velocity in the embedding space R^3.
struct AmbientVector {
    double x1{0.0};
    double x2{0.0};
    double x3{0.0};

    constexpr AmbientVector operator+(const AmbientVector& o) const { return {x1 + o.x1, x2 + o.x2, x3 + o.x3}; }
    constexpr AmbientVector operator-(const AmbientVector& o) const { return {x1 - o.x1, x2 - o.x2, x3 - o.x3}; }
    constexpr AmbientVector operator-() const { return {-x1, -x2, -x3}; }
    constexpr AmbientVector operator*(double s) const { return {x1 * s, x2 * s, x3 * s}; }
    constexpr AmbientVector operator/(double s) const { return {x1 / s, x2 / s, x3 / s}; }
    constexpr AmbientVector& operator+=(const AmbientVector& o) {
        x1 += o.x1;
        x2 += o.x2;
        x3 += o.x3;
        return *this;
    }
    constexpr bool operator==(const AmbientVector&) const = default;
};

constexpr AmbientVector operator*(double s, const AmbientVector& v) { return v * s; }

constexpr double dot(const AmbientVector& a, const AmbientVector& b) { return a.x1 * b.x1 + a.x2 * b.x2 + a.x3 * b.x3; }

constexpr AmbientVector cross(const AmbientVector& a, const AmbientVector& b) {
    return {a.x2 * b.x3 - a.x3 * b.x2, a.x3 * b.x1 - a.x1 * b.x3, a.x1 * b.x2 - a.x2 * b.x1};
}

inline double norm(const AmbientVector& v) { return std::sqrt(dot(v, v)); }

inline bool is_finite(const AmbientVector& v) {
    return std::isfinite(v.x1) && std::isfinite(v.x2) && std::isfinite(v.x3);
}

/// Unit vector in R^3. Construction checks | |x| - 1 | <= kUnitNormTolerance and
/// never renormalizes, so drift of integrated states stays observable.
class SpherePoint {
public:
    static constexpr double kUnitNormTolerance = 1e-9;

    explicit SpherePoint(const AmbientVector& coords);

    const AmbientVector& coords() const { return coords_; }
    double x1() const { return coords_.x1; }
    double x2() const { return coords_.x2; }
    double x3() const { return coords_.x3; }

    SpherePoint operator-() const { return SpherePoint(-coords_); }

private:
    AmbientVector coords_;
};

// q: the pole defining the attractor {+-q}; r: the auxiliary point penalised by V_r.
inline constexpr AmbientVector kPoleQ{0.0, 0.0, 1.0};
inline constexpr AmbientVector kAuxR{0.0, 1.0, 0.0};

SpherePoint pole_q();
SpherePoint aux_r();

/// Tube data for an embedded manifold with constant width omega.
///
/// eps is the attractor tube radius (half the minimum of omega over the
/// attractor). The blend phi is 1 on the shell [sharp_inner, sharp_outer]
/// (the set X#) and 0 outside the open shell (comega_inner, comega_outer),
/// whose complement is clos C_omega.
struct TubeConfig {
    double omega{0.25};
    double eps{0.125};
    double sharp_inner{7.0 / 8.0};
    double sharp_outer{9.0 / 8.0};
    double comega_inner{13.0 / 16.0};
    double comega_outer{19.0 / 16.0};

    /// The unit-sphere instance: omega = 1/4, X# = [7/8, 9/8], kept shell [13/16, 19/16].
    static TubeConfig sphere() { return {}; }

    void validate() const;

    bool in_tube(const AmbientVector& y) const;
    /// Membership in C_omega (strictly outside the kept shell).
    bool in_comega(const AmbientVector& z) const;
    /// |grad omega|; identically zero for a constant-width tube.
    double omega_gradient_norm(const AmbientVector&) const { return 0.0; }
};

/// C-infinity transition: 0 for t <= 0, 1 for t >= 1, strictly between otherwise.
double smooth_transition(double t);

/// Great-circle distance arccos(x . y) with the dot product clamped to [-1, 1].
double geodesic_distance(const SpherePoint& x, const SpherePoint& y);

/// Radial projection y / |y|. Throws DomainError at the origin.
SpherePoint sphere_project(const AmbientVector& y);

/// Unit tangent at x along the great circle toward p.
/// Throws UndefinedDirectionError when x = +-p.
AmbientVector geodesic_direction(const SpherePoint& x, const SpherePoint& p);

/// (B1(x), B2(x)) = (q - (x.q) x, x cross q).
std::pair<AmbientVector, AmbientVector> base_fields(const SpherePoint& x);
std::pair<AmbientVector, AmbientVector> base_fields(const AmbientVector& x);

/// Smooth bump vanishing exactly on the geodesic rectangle
/// {x1/4 <= x2 <= 3 x1/4, V_q >= pi/4} and equal to 1 on
/// {x2 >= 7 x1/8 or x2 <= x1/8 or V_q <= pi/8}.
double bump_m1(const SpherePoint& x);

/// Blend phi(z) = Gamma(|z|^2) for the given tube.
double phi(const AmbientVector& z, const TubeConfig& tube = TubeConfig::sphere());

/// Base point and normal offset of a tube point: (Pi_s(y), y - Pi_s(y)).
/// Throws TubeMembershipError outside the omega-tube.
std::pair<SpherePoint, AmbientVector> tube_decompose(const AmbientVector& y,
                                                     const TubeConfig& tube = TubeConfig::sphere());

}  // namespace shlab
