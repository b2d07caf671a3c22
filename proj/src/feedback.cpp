#include "shlab/feedback.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <numbers>

#include <fmt/format.h>

#include "shlab/errors.hpp"

namespace shlab {

SphereControl k_sphere(const SpherePoint& x) {
    if (bump_m1(x) < 1.0) return {0.0, 1.0};
    return x.x3() >= 0.0 ? SphereControl{1.0, 0.0} : SphereControl{-1.0, 0.0};
}

SphereControl k_sphere_state(const AmbientVector& x) { return k_sphere(SpherePoint(x)); }

ProofBounds compute_bounds(const PiTrajectory& reference, double u_bound, const TubeConfig& tube,
                           std::optional<AmbientVector> z0) {
    if (reference.nodes().empty() || reference.samples().empty()) {
        throw ParameterError("compute_bounds: empty reference trajectory");
    }
    if (!(u_bound > 0.0)) throw ParameterError("compute_bounds: u_bound must be positive");
    for (const auto& s : reference.samples()) {
        if (s.held.norm() > u_bound * (1.0 + 1e-12)) {
            throw ParameterError("compute_bounds: reference control exceeds u_bound");
        }
    }
    constexpr int kDirections = 64;
    double max_field = 0.0;
    double max_grad = 0.0;
    double min_omega = tube.omega;
    for (const auto& n : reference.nodes()) {
        for (int j = 0; j < kDirections; ++j) {
            const double angle = 2.0 * std::numbers::pi * j / kDirections;
            const SphereControl u{u_bound * std::cos(angle), u_bound * std::sin(angle)};
            max_field = std::max(max_field, norm(sphere_field(n.x, u)));
        }
        max_grad = std::max(max_grad, tube.omega_gradient_norm(n.x));
    }
    ProofBounds b;
    b.p1 = u_bound;
    b.p2 = 1.0 + max_grad;
    b.p3 = 1.0 + max_field;
    b.p4 = min_omega;
    b.p5 = z0 ? std::abs(norm(*z0) - 1.0) : 0.0;
    return b;
}

PiecewiseControl::PiecewiseControl(std::vector<double> starts, std::vector<SphereControl> values)
    : starts_(std::move(starts)), values_(std::move(values)) {
    if (starts_.size() != values_.size()) throw ParameterError("PiecewiseControl: size mismatch");
    if (!starts_.empty() && starts_.front() != 0.0) throw ParameterError("PiecewiseControl: must start at t = 0");
    if (!std::is_sorted(starts_.begin(), starts_.end())) throw ParameterError("PiecewiseControl: unsorted starts");
}

PiecewiseControl PiecewiseControl::from_trajectory(const PiTrajectory& traj) {
    std::vector<double> starts;
    std::vector<SphereControl> values;
    for (const auto& s : traj.samples()) {
        starts.push_back(s.t);
        values.push_back(s.held);
    }
    return {std::move(starts), std::move(values)};
}

SphereControl PiecewiseControl::at(double t) const {
    if (starts_.empty()) return {};
    auto it = std::upper_bound(starts_.begin(), starts_.end(), t);
    if (it == starts_.begin()) return values_.front();
    return values_[static_cast<std::size_t>(std::distance(starts_.begin(), it)) - 1];
}

double PiecewiseControl::sup_norm() const {
    double m = 0.0;
    for (const auto& v : values_) m = std::max(m, v.norm());
    return m;
}

VSchedule v_schedule(const AmbientVector& eta, const ProofBounds& b, const TubeConfig& tube) {
    const auto [base, normal] = tube_decompose(eta, tube);
    (void)base;
    const double rate = b.p2 * b.p3;
    return {std::max(0.0, (norm(normal) - b.p4 / 4.0) / rate), b.normal_gain()};
}

std::function<AmbientVector(double)> w_schedule(std::function<AmbientVector(double)> y_path,
                                                std::function<SphereControl(double)> u,
                                                std::function<double(double)> v, const TubeConfig& tube) {
    return [y_path = std::move(y_path), u = std::move(u), v = std::move(v), tube](double t) {
        return f1(y_path(t), u(t), v(t), tube);
    };
}

ApproachControl approach_control(const AmbientVector& z0, const TubeConfig& tube) {
    const double radius = norm(z0);
    if (radius == 0.0) throw DegenerateNearestPointError("approach_control: z0 = 0 has no unique nearest point");
    if (!tube.in_comega(z0)) throw ParameterError("approach_control: z0 must lie in C_omega");
    ApproachControl a;
    a.z0 = z0;
    a.eta1 = z0 / radius;
    a.w_bar = (a.eta1 - z0) / norm(a.eta1 - z0);
    a.t_hat = radius > tube.comega_outer ? radius - tube.comega_outer : tube.comega_inner - radius;
    return a;
}

PiTrajectory integrate_with_breakpoints(const AmbientVector& x0, const std::vector<double>& breakpoints,
                                        double horizon, double step, PiecewiseField field,
                                        std::function<SphereControl(double)> held) {
    auto ends = std::make_shared<std::vector<double>>();
    for (double b : breakpoints) {
        if (b > 0.0 && b < horizon && (ends->empty() || b > ends->back())) ends->push_back(b);
    }
    ends->push_back(horizon);
    auto mids = std::make_shared<std::vector<double>>();
    double prev = 0.0;
    for (double e : *ends) {
        mids->push_back(0.5 * (prev + e));
        prev = e;
    }
    std::size_t next = 0;
    return integrate_piecewise(
        x0, horizon, step,
        [ends, next]() mutable {
            const double t = next < ends->size() ? (*ends)[next] : ends->back() + 1.0;
            ++next;
            return t;
        },
        [mids, held](std::size_t i, double, const AmbientVector& x) {
            SampleRecord r;
            r.observed = x;
            if (held) r.held = held((*mids)[i]);
            return r;
        },
        [mids, field = std::move(field)](double t, const AmbientVector& x, const SampleRecord& hold) {
            return field(t, x, (*mids)[hold.index]);
        });
}

ExtendedControl ControlSchedule::at(double t, double piece) const {
    ExtendedControl c;
    if (piece < t_hat_) {
        c.w = w_bar_;
        return c;
    }
    const double tau_piece = piece - t_hat_;
    c.u = u_inner_.at(tau_piece);
    c.v = v_(tau_piece);
    const double tau = std::clamp(t - t_hat_, 0.0, y_.t_end());
    c.w = f1(y_.state_at(tau), c.u, c.v, tube_);
    return c;
}

AmbientVector ControlSchedule::predicted(double t) const {
    if (t < t_hat_) return z0_ + t * w_bar_;
    return y_.state_at(std::min(t - t_hat_, y_.t_end()));
}

std::vector<double> ControlSchedule::breakpoints() const {
    std::vector<double> bps;
    if (t_hat_ > 0.0) bps.push_back(t_hat_);
    if (v_.T2 > 0.0) bps.push_back(t_hat_ + v_.T2);
    for (double s : u_inner_.starts()) {
        if (s > 0.0) bps.push_back(t_hat_ + s);
    }
    std::sort(bps.begin(), bps.end());
    std::vector<double> out;
    for (double b : bps) {
        if (b > 0.0 && b < horizon_ && (out.empty() || b - out.back() > 1e-12)) out.push_back(b);
    }
    return out;
}

std::string ControlSchedule::to_csv(double dt) const {
    if (!(dt > 0.0)) throw ParameterError("ControlSchedule::to_csv: dt must be positive");
    std::string out = "t,u1,u2,v,w1,w2,w3\n";
    const auto rows = static_cast<std::size_t>(std::floor(horizon_ / dt + 1e-9));
    for (std::size_t k = 0; k <= rows; ++k) {
        const double t = static_cast<double>(k) * dt;
        const ExtendedControl c = at(t);
        out += fmt::format("{:.10g},{:.10g},{:.10g},{:.10g},{:.17g},{:.17g},{:.17g}\n", t, c.u.u1, c.u.u2, c.v,
                           c.w.x1, c.w.x2, c.w.x3);
    }
    return out;
}

ControlSchedule build_extension_controls(const AmbientVector& z0, const PiecewiseControl& u_inner,
                                         const ProofBounds& b, double horizon, double step,
                                         const TubeConfig& tube) {
    if (norm(z0) == 0.0) {
        throw DegenerateNearestPointError("build_extension_controls: z0 = 0 has no unique nearest point");
    }
    if (!is_finite(z0)) throw ParameterError("build_extension_controls: non-finite z0");
    ControlSchedule s;
    s.z0_ = z0;
    s.tube_ = tube;
    s.bounds_ = b;
    s.u_inner_ = u_inner;
    s.horizon_ = horizon;
    if (tube.in_comega(z0)) {
        const ApproachControl a = approach_control(z0, tube);
        s.t_hat_ = a.t_hat;
        s.w_bar_ = a.w_bar;
        s.eta_ = a.segment(a.t_hat);
    } else {
        s.eta_ = z0;
    }
    if (!(horizon > s.t_hat_)) throw ParameterError("build_extension_controls: horizon ends before the approach");
    s.v_ = v_schedule(s.eta_, b, tube);

    std::vector<double> bps;
    if (s.v_.T2 > 0.0) bps.push_back(s.v_.T2);
    for (double t : u_inner.starts()) {
        if (t > 0.0) bps.push_back(t);
    }
    std::sort(bps.begin(), bps.end());
    const PiecewiseControl u = u_inner;
    const VSchedule v = s.v_;
    s.y_ = integrate_with_breakpoints(
        s.eta_, bps, horizon - s.t_hat_, step,
        [u, v, tube](double, const AmbientVector& y, double piece) { return f1(y, u.at(piece), v(piece), tube); },
        [u](double piece) { return u.at(piece); });
    return s;
}

PiTrajectory integrate_extension(const ControlSchedule& schedule, double step, const TubeConfig& tube) {
    auto shared = std::make_shared<const ControlSchedule>(schedule);
    return integrate_with_breakpoints(
        schedule.z0(), schedule.breakpoints(), schedule.horizon(), step,
        [shared, tube](double t, const AmbientVector& z, double piece) { return f2(z, shared->at(t, piece), tube); },
        [shared](double piece) { return shared->at(piece, piece).u; });
}

}  // namespace shlab
