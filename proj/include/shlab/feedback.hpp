#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "shlab/dynamics.hpp"
#include "shlab/geometry.hpp"
#include "shlab/sampling.hpp"

namespace shlab {

/// Discontinuous sphere feedback: <1,0> if x3 >= 0 and M1(x) = 1,
/// <-1,0> if x3 < 0 and M1(x) = 1, <0,1> if M1(x) < 1.
SphereControl k_sphere(const SpherePoint& x);

/// k_sphere on an integrator state; the state is re-validated as a unit vector.
SphereControl k_sphere_state(const AmbientVector& x);

/// Constants of the extension argument along a reference trajectory.
///   p1: bound on the control norm
///   p2: 1 + max |grad omega| on the reference range
///   p3: strict bound on |f(x, u)| over the range and |u| <= p1
///   p4: min omega on the range
///   p5: distance from the start point to the manifold
struct ProofBounds {
    double p1{1.0};
    double p2{1.0};
    double p3{1.0};
    double p4{0.25};
    double p5{0.0};

    /// Contraction gain p2 p3 / (p4 / 4) of the normal component.
    double normal_gain() const { return p2 * p3 / (p4 / 4.0); }
};

/// p3 = 1 + sampled max of |f_sphere(x, u)| over the reference nodes and 64
/// control directions of norm u_bound; p2, p4 come from the tube data and p5
/// from z0 when given. Throws ParameterError for an empty reference or a held
/// control exceeding u_bound.
ProofBounds compute_bounds(const PiTrajectory& reference, double u_bound,
                           const TubeConfig& tube = TubeConfig::sphere(),
                           std::optional<AmbientVector> z0 = std::nullopt);

/// Piecewise-constant open-loop control.
class PiecewiseControl {
public:
    PiecewiseControl() = default;
    PiecewiseControl(std::vector<double> starts, std::vector<SphereControl> values);

    /// Held controls of a sampled run, as an open-loop signal.
    static PiecewiseControl from_trajectory(const PiTrajectory& traj);

    SphereControl at(double t) const;
    const std::vector<double>& starts() const { return starts_; }
    const std::vector<SphereControl>& values() const { return values_; }
    double sup_norm() const;

private:
    std::vector<double> starts_;
    std::vector<SphereControl> values_;
};

/// v = -gain on [0, T2], 0 afterwards; identically 0 when T2 = 0.
struct VSchedule {
    double T2{0.0};
    double gain{0.0};

    double operator()(double t) const { return T2 > 0.0 && t <= T2 ? -gain : 0.0; }
};

/// T2 = max{0, (|pi_N(eta)| - p4/4) / (p2 p3)}. Throws TubeMembershipError outside the tube.
VSchedule v_schedule(const AmbientVector& eta, const ProofBounds& b, const TubeConfig& tube = TubeConfig::sphere());

/// w(t) = f1(y(t), u(t), v(t)), which makes f2 coincide with f1 along y.
std::function<AmbientVector(double)> w_schedule(std::function<AmbientVector(double)> y_path,
                                                std::function<SphereControl(double)> u,
                                                std::function<double(double)> v,
                                                const TubeConfig& tube = TubeConfig::sphere());

struct ApproachControl {
    AmbientVector w_bar;     // unit drift toward the nearest sphere point
    double t_hat{0.0};       // first hit of bd C_omega along the segment
    AmbientVector eta1;      // nearest sphere point Pi_s(z0)
    AmbientVector z0;

    AmbientVector segment(double t) const { return z0 + t * w_bar; }
};

/// Straight-line approach from z0 in C_omega to bd C_omega.
/// Throws DegenerateNearestPointError for z0 = 0 and ParameterError if z0 is not in C_omega.
ApproachControl approach_control(const AmbientVector& z0, const TubeConfig& tube = TubeConfig::sphere());

/// The concatenated controls <u#, v#, w#>: zero u, v and drift w_bar on
/// [0, t_hat); afterwards u_inner, the contraction schedule v and the
/// cancelling drift w = f1(y, u, v), all shifted by t_hat.
///
/// y is the tube-extended solution from eta = z(t_hat) under (u_inner, v),
/// integrated once at construction time and kept for dense evaluation.
class ControlSchedule {
public:
    const AmbientVector& z0() const { return z0_; }
    const AmbientVector& eta() const { return eta_; }
    const AmbientVector& w_bar() const { return w_bar_; }
    double t_hat() const { return t_hat_; }
    double T2() const { return v_.T2; }
    const VSchedule& contraction() const { return v_; }
    const ProofBounds& bounds() const { return bounds_; }
    const PiecewiseControl& u_inner() const { return u_inner_; }
    /// y on [0, horizon - t_hat], in time relative to t_hat.
    const PiTrajectory& tube_path() const { return y_; }

    /// Control at time t. `piece` selects the branch of every piecewise
    /// component; integrators pass the midpoint of their current segment so
    /// stages landing on a breakpoint stay on the correct side.
    ExtendedControl at(double t, double piece) const;
    ExtendedControl at(double t) const { return at(t, t); }

    /// Open-loop prediction of z(t): the approach segment, then y.
    AmbientVector predicted(double t) const;

    /// All discontinuities of the schedule in (0, horizon), sorted.
    std::vector<double> breakpoints() const;

    double horizon() const { return horizon_; }

    /// Rows (t, u1, u2, v, w1, w2, w3) every dt on [0, horizon].
    std::string to_csv(double dt) const;

private:
    friend ControlSchedule build_extension_controls(const AmbientVector&, const PiecewiseControl&,
                                                    const ProofBounds&, double, double, const TubeConfig&);

    AmbientVector z0_;
    AmbientVector eta_;
    AmbientVector w_bar_;
    double t_hat_{0.0};
    double horizon_{0.0};
    VSchedule v_;
    ProofBounds bounds_;
    PiecewiseControl u_inner_;
    PiTrajectory y_;
    TubeConfig tube_;
};

/// Builds <u#, v#, w#> for a start z0 != 0 over [0, horizon]; the tube path
/// is integrated with RK4 substeps of at most `step`.
/// Throws DegenerateNearestPointError for z0 = 0.
ControlSchedule build_extension_controls(const AmbientVector& z0, const PiecewiseControl& u_inner,
                                         const ProofBounds& b, double horizon, double step,
                                         const TubeConfig& tube = TubeConfig::sphere());

/// Integrates dz/dt = f2(z, <u#, v#, w#>(t)) from the schedule's z0.
PiTrajectory integrate_extension(const ControlSchedule& schedule, double step,
                                 const TubeConfig& tube = TubeConfig::sphere());

using PiecewiseField = std::function<AmbientVector(double t, const AmbientVector& x, double piece)>;

/// RK4 integration of a time-varying field with known discontinuities; the
/// field receives the midpoint of the current segment as `piece`. `held`, if
/// given, labels each segment's sample record with its sphere control.
PiTrajectory integrate_with_breakpoints(const AmbientVector& x0, const std::vector<double>& breakpoints,
                                        double horizon, double step, PiecewiseField field,
                                        std::function<SphereControl(double piece)> held = {});

}  // namespace shlab
