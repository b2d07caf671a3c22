#pragma once

#include <cstddef>
#include <functional>
#include <string>
#include <vector>

#include "shlab/geometry.hpp"
#include "shlab/sampling.hpp"

namespace shlab {

/// min over {+-q} of the geodesic distance, in [0, pi/2].
double v_q(const SpherePoint& x);
/// max over {+-r} of the geodesic distance, in [pi/2, pi].
double v_r(const SpherePoint& x);
/// V = V_q (1 + V_r).
double lyapunov_v(const SpherePoint& x);
/// mu = x1 V_q / sqrt(x1^2 + x3^2). Throws DomainError at +-r.
double mu(const SpherePoint& x);

/// Distance to the attractor {+-q}; the geodesic V_q.
inline double dist_attractor(const SpherePoint& x) { return v_q(x); }

using DirectionFn = std::function<AmbientVector(const SpherePoint& x, const SpherePoint& p)>;

struct GaussReport {
    double max_rel_error{0.0};
    std::size_t checked{0};
    std::size_t excluded{0};  // points within the margin of +-p or below min_speed
};

struct GaussOptions {
    double h{1e-5};
    std::size_t stride{1};
    double margin{1e-3};
    /// Points with |xdot| below this are excluded: the finite difference there
    /// is dominated by rounding of G.
    double min_speed{1e-6};
};

/// Compares the central difference of t -> G(x(t), p) at resolution h with
/// -xdot . Y^p_x at the midpoint of every `stride`-th integration substep.
/// The relative error is |num - ana| / max(|ana|, |xdot|). Windows reaching a
/// sampling instant are skipped, as are points closer than `margin` to +-p.
GaussReport check_gauss(const PiTrajectory& traj, const SpherePoint& p, const GaussOptions& opts = {},
                        const DirectionFn& direction = geodesic_direction);

enum class DecayRegion { m1_one, m1_below_one, x2_zero };

const char* region_name(DecayRegion r);

struct DecayRecord {
    double t;
    double v;
    double v_dot;   // central difference
    double bound;   // analytic bound or rate
    double margin;  // >= -tol means pass
    DecayRegion region;
};

struct DecayOptions {
    double h{0.0};  // 0 means the trajectory's largest node spacing
    double tol{1e-3};
    double attractor_radius{1e-3};
    double coord_tol{1e-9};  // |x2|, |x3| below this count as zero
    bool keep_records{true};
};

struct DecayReport {
    std::vector<DecayRecord> records;
    std::size_t checked_m1_one{0};
    std::size_t checked_m1_below_one{0};
    std::size_t checked_x2_zero{0};
    double worst_m1_one{0.0};  // most negative margin per region; 0 when vacuous
    double worst_m1_below_one{0.0};
    double worst_x2_zero{0.0};
    std::size_t m1_violations{0};  // samples with M1 < 1 after a sample with M1 = 1
    double tol{1e-3};

    bool decay1_ok() const { return worst_m1_one >= -tol; }
    bool decay2_ok() const { return worst_m1_below_one >= -tol; }
    bool x2_zero_ok() const { return worst_x2_zero >= -tol; }
    bool invariance_ok() const { return m1_violations == 0; }
    bool ok() const { return decay1_ok() && decay2_ok() && x2_zero_ok() && invariance_ok(); }

    std::string to_json() const;
    std::string to_csv() const;
};

/// Decay certificates along a closed-loop sphere trajectory.
///   M1 = 1, x2 != 0, x3 != 0, held = k(x):  Vdot <= -sqrt(1 - x3^2)
///   M1 < 1, held = <0,1>:                   Vdot = -mu(x)
///   x2 = 0, x3 != 0, held = k(x):           Vdot = -(1 + pi/2) sqrt(1 - x3^2)
/// Points are the integration nodes whose window [t - h, t + h] stays inside
/// one hold interval or crosses only instants where the held value is kept,
/// does not cross x2 = 0 or x3 = 0, and has V > attractor_radius.
DecayReport check_decay(const PiTrajectory& traj, const DecayOptions& opts = {});

struct IntegralDecayResult {
    bool ok{true};
    double worst_slack{0.0};  // min over samples of -(V(t) - V(0) + int alpha3)
};

/// V(x(t)) - V(x(0)) <= -int_0^t alpha3(dist_A(x(s))) ds + tol at every
/// sampling instant, with the integral by the trapezoid rule over the nodes.
IntegralDecayResult check_integral_decay(const PiTrajectory& traj, const std::function<double(double)>& alpha3,
                                         double tol = 1e-3);

/// Largest c for which alpha3(s) = c s passes check_integral_decay on every
/// trajectory, divided by `safety`.
double calibrate_alpha3(const std::vector<const PiTrajectory*>& trajs, double tol = 1e-3, double safety = 2.0);

}  // namespace shlab
