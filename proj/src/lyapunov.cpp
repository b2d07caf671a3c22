#include "shlab/lyapunov.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include <fmt/format.h>
#include <json.hpp>

#include "shlab/errors.hpp"
#include "shlab/feedback.hpp"

namespace shlab {

namespace {

constexpr double kPi = std::numbers::pi;

SpherePoint on_sphere(const AmbientVector& x) { return SpherePoint(x); }

int sign_of(double v, double tol) {
    if (v > tol) return 1;
    if (v < -tol) return -1;
    return 0;
}

}  // namespace

double v_q(const SpherePoint& x) {
    return std::min(geodesic_distance(x, pole_q()), geodesic_distance(x, -pole_q()));
}

double v_r(const SpherePoint& x) {
    return std::max(geodesic_distance(x, aux_r()), geodesic_distance(x, -aux_r()));
}

double lyapunov_v(const SpherePoint& x) { return v_q(x) * (1.0 + v_r(x)); }

double mu(const SpherePoint& x) {
    const double den = std::hypot(x.x1(), x.x3());
    if (den == 0.0) throw DomainError("mu: undefined at +-r");
    return x.x1() * v_q(x) / den;
}

GaussReport check_gauss(const PiTrajectory& traj, const SpherePoint& p, const GaussOptions& opts,
                        const DirectionFn& direction) {
    const double h = opts.h;
    const std::size_t stride = opts.stride;
    if (!(h > 0.0)) throw ParameterError("check_gauss: h must be positive");
    if (stride == 0) throw ParameterError("check_gauss: stride must be positive");
    GaussReport rep;
    const auto& nodes = traj.nodes();
    for (std::size_t k = 0; k + 1 < nodes.size(); k += stride) {
        const double t = 0.5 * (nodes[k].t + nodes[k + 1].t);
        if (t - h < 0.0 || t + h > traj.t_end()) continue;
        const std::size_t seg = traj.segment_at(t);
        if (traj.segment_at(t - h) != seg || traj.segment_at(t + h) != seg) continue;

        const SpherePoint x = on_sphere(traj.state_at(t));
        const double g = geodesic_distance(x, p);
        const AmbientVector xdot = traj.velocity_at(t);
        if (g < opts.margin || g > kPi - opts.margin || norm(xdot) < opts.min_speed) {
            ++rep.excluded;
            continue;
        }
        const double numeric = (geodesic_distance(on_sphere(traj.state_at(t + h)), p) -
                                geodesic_distance(on_sphere(traj.state_at(t - h)), p)) /
                               (2.0 * h);
        const double analytic = -dot(xdot, direction(x, p));
        const double scale = std::max(std::abs(analytic), norm(xdot));
        ++rep.checked;
        if (scale == 0.0) {
            if (numeric != 0.0) rep.max_rel_error = std::numeric_limits<double>::infinity();
            continue;
        }
        rep.max_rel_error = std::max(rep.max_rel_error, std::abs(numeric - analytic) / scale);
    }
    return rep;
}

const char* region_name(DecayRegion r) {
    switch (r) {
        case DecayRegion::m1_one:
            return "m1_one";
        case DecayRegion::m1_below_one:
            return "m1_below_one";
        case DecayRegion::x2_zero:
            return "x2_zero";
    }
    return "unknown";
}

DecayReport check_decay(const PiTrajectory& traj, const DecayOptions& opts) {
    DecayReport rep;
    rep.tol = opts.tol;
    const auto& nodes = traj.nodes();
    const auto& samples = traj.samples();

    bool seen_one = false;
    for (const auto& s : samples) {
        const bool one = bump_m1(on_sphere(s.state)) == 1.0;
        if (seen_one && !one) ++rep.m1_violations;
        seen_one = seen_one || one;
    }
    if (nodes.size() < 3) return rep;

    const double h = opts.h > 0.0 ? opts.h : nodes[1].t - nodes[0].t;
    auto record = [&](double t, double v, double v_dot, double bound, double margin, DecayRegion region) {
        double* worst = nullptr;
        switch (region) {
            case DecayRegion::m1_one:
                ++rep.checked_m1_one;
                worst = &rep.worst_m1_one;
                break;
            case DecayRegion::m1_below_one:
                ++rep.checked_m1_below_one;
                worst = &rep.worst_m1_below_one;
                break;
            case DecayRegion::x2_zero:
                ++rep.checked_x2_zero;
                worst = &rep.worst_x2_zero;
                break;
        }
        *worst = std::min(*worst, margin);
        if (opts.keep_records) rep.records.push_back({t, v, v_dot, bound, margin, region});
    };

    for (std::size_t k = 1; k + 1 < nodes.size(); ++k) {
        const double t = nodes[k].t;
        if (t - h < 0.0 || t + h > traj.t_end()) continue;
        const std::size_t sa = traj.segment_at(t - h);
        const std::size_t sb = traj.segment_at(t + h);
        const SphereControl held = samples[sa].held;
        bool kept = true;
        for (std::size_t s = sa + 1; s <= sb; ++s) kept = kept && samples[s].held == held;
        if (!kept) continue;

        const AmbientVector xa = traj.state_at(t - h);
        const AmbientVector xm = nodes[k].x;
        const AmbientVector xb = traj.state_at(t + h);
        const SpherePoint x = on_sphere(xm);
        const double v = lyapunov_v(x);
        if (v <= opts.attractor_radius) continue;

        const int s3 = sign_of(xm.x3, opts.coord_tol);
        if (s3 == 0 || sign_of(xa.x3, opts.coord_tol) != s3 || sign_of(xb.x3, opts.coord_tol) != s3) continue;
        const int s2a = sign_of(xa.x2, opts.coord_tol);
        const int s2 = sign_of(xm.x2, opts.coord_tol);
        const int s2b = sign_of(xb.x2, opts.coord_tol);
        if (s2a != s2 || s2b != s2) continue;

        const double v_dot = (lyapunov_v(on_sphere(xb)) - lyapunov_v(on_sphere(xa))) / (2.0 * h);
        const double tangential = std::sqrt(std::max(0.0, 1.0 - xm.x3 * xm.x3));
        if (bump_m1(x) < 1.0) {
            if (!(held == SphereControl{0.0, 1.0})) continue;
            const double rate = -mu(x);
            record(t, v, v_dot, rate, -std::abs(v_dot - rate), DecayRegion::m1_below_one);
        } else {
            if (!(held == k_sphere(x))) continue;
            if (s2 == 0) {
                const double rate = -(1.0 + kPi / 2.0) * tangential;
                record(t, v, v_dot, rate, -std::abs(v_dot - rate), DecayRegion::x2_zero);
            } else {
                record(t, v, v_dot, -tangential, -tangential - v_dot, DecayRegion::m1_one);
            }
        }
    }
    return rep;
}

std::string DecayReport::to_json() const {
    nlohmann::ordered_json j;
    j["decay1"] = {{"ok", decay1_ok()}, {"checked", checked_m1_one}, {"worst_margin", worst_m1_one}};
    j["decay2"] = {{"ok", decay2_ok()}, {"checked", checked_m1_below_one}, {"worst_margin", worst_m1_below_one}};
    j["x2_zero"] = {{"ok", x2_zero_ok()}, {"checked", checked_x2_zero}, {"worst_margin", worst_x2_zero}};
    j["m1_invariance"] = {{"ok", invariance_ok()}, {"violations", m1_violations}};
    j["tolerance"] = tol;
    j["ok"] = ok();
    return j.dump(2);
}

std::string DecayReport::to_csv() const {
    std::string out = "t,V,Vdot,bound,margin,region\n";
    for (const auto& r : records) {
        out += fmt::format("{:.10g},{:.17g},{:.17g},{:.17g},{:.17g},{}\n", r.t, r.v, r.v_dot, r.bound, r.margin,
                           region_name(r.region));
    }
    return out;
}

namespace {

// Visits (V(t) - V(0), int_0^t alpha3) at every sampling instant and at t_end.
template <class Visit>
void integral_profile(const PiTrajectory& traj, const std::function<double(double)>& alpha3, Visit visit) {
    const auto& nodes = traj.nodes();
    const auto& samples = traj.samples();
    const double v0 = lyapunov_v(on_sphere(nodes.front().x));
    double integral = 0.0;
    double prev_a = alpha3(dist_attractor(on_sphere(nodes.front().x)));
    std::size_t next_sample = 1;
    for (std::size_t k = 1; k < nodes.size(); ++k) {
        const SpherePoint x = on_sphere(nodes[k].x);
        const double a = alpha3(dist_attractor(x));
        integral += 0.5 * (a + prev_a) * (nodes[k].t - nodes[k - 1].t);
        prev_a = a;
        bool at_sample = false;
        while (next_sample < samples.size() && samples[next_sample].t <= nodes[k].t) {
            at_sample = at_sample || samples[next_sample].t == nodes[k].t;
            ++next_sample;
        }
        if (at_sample || k + 1 == nodes.size()) visit(lyapunov_v(x) - v0, integral);
    }
}

}  // namespace

IntegralDecayResult check_integral_decay(const PiTrajectory& traj, const std::function<double(double)>& alpha3,
                                         double tol) {
    IntegralDecayResult res;
    integral_profile(traj, alpha3, [&](double dv, double integral) {
        res.worst_slack = std::min(res.worst_slack, -(dv + integral));
    });
    res.ok = res.worst_slack >= -tol;
    return res;
}

double calibrate_alpha3(const std::vector<const PiTrajectory*>& trajs, double tol, double safety) {
    if (!(safety > 0.0)) throw ParameterError("calibrate_alpha3: safety must be positive");
    double c = std::numeric_limits<double>::infinity();
    const auto identity = [](double s) { return s; };
    for (const PiTrajectory* traj : trajs) {
        integral_profile(*traj, identity, [&](double dv, double integral) {
            if (integral > 0.0) c = std::min(c, (tol - dv) / integral);
        });
    }
    return c / safety;
}

}  // namespace shlab
