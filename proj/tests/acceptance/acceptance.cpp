// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any fails.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numbers>
#include <string>
#include <vector>

#include "shlab/feedback.hpp"
#include "shlab/harness.hpp"
#include "shlab/lyapunov.hpp"

using namespace shlab;

namespace {

constexpr double kPi = std::numbers::pi;

struct Outcome {
    bool ok{true};
    std::string detail;
};

std::string fmt_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.3g", v);
    return buf;
}

ScenarioConfig grid_config() {
    ScenarioConfig c = default_config(ScenarioKind::stabilize);
    c.initial.kind = InitialKind::fibonacci;
    c.initial.n = 100;
    c.partition.deltas = {0.01};
    c.step = 1e-3;
    c.horizon = 30.0;
    c.seed = 1;
    return c;
}

// Shared between criteria 4, 5 and 7.
RunReport grid_report;

Outcome geometry_identities() {
    double e1 = 0.0, e2 = 0.0;
    const auto pts = fibonacci_sphere(10000);
    for (const auto& x : pts) {
        const SpherePoint p(x);
        const auto [b1, b2] = base_fields(p);
        const AmbientVector y = geodesic_direction(p, pole_q());
        e1 = std::max(e1, std::abs(dot(b1, y) - std::sqrt(1.0 - x.x3 * x.x3)));
        e2 = std::max(e2, std::abs(dot(b2, y)));
    }
    return {e1 <= 1e-12 && e2 <= 1e-12 && pts.size() == 10000,
            "points=" + std::to_string(pts.size()) + " b1_err=" + fmt_double(e1) + " b2_err=" + fmt_double(e2)};
}

Outcome gauss_lemma() {
    // Unit-speed great circle toward q, stopped short of it.
    const AmbientVector x0 = sphere_project({1.0, 0.2, 0.3}).coords();
    const double length = v_q(SpherePoint(x0)) - 0.2;
    const PiTrajectory arc = integrate_pi_trajectory(
        [](const AmbientVector& x, const SphereControl&) {
            const AmbientVector b1 = kPoleQ - dot(x, kPoleQ) * x;
            return b1 / norm(b1);
        },
        [](const AmbientVector&) { return SphereControl{}; }, Partition::uniform(0.01), x0, length, 1e-3);
    const double h = 1e-5;
    double arc_err = 0.0;
    for (std::size_t k = 0; k + 1 < arc.nodes().size(); ++k) {
        const double s = 0.5 * (arc.nodes()[k].t + arc.nodes()[k + 1].t);
        if (s - h < 0.0 || s + h > arc.t_end()) continue;
        const double rate = (geodesic_distance(sphere_project(arc.state_at(s + h)), pole_q()) -
                             geodesic_distance(sphere_project(arc.state_at(s - h)), pole_q())) /
                            (2.0 * h);
        arc_err = std::max(arc_err, std::abs(rate + 1.0));
    }

    const auto starts = fibonacci_sphere(100);
    double closed_err = 0.0;
    std::size_t checked = 0;
    for (std::size_t i = 0; i < 10; ++i) {
        const auto traj = closed_loop(starts[i], Partition::uniform(0.01), 30.0, 1e-3);
        for (const SpherePoint& p : {pole_q(), aux_r()}) {
            const GaussReport g = check_gauss(traj, p, {.h = h});
            closed_err = std::max(closed_err, g.max_rel_error);
            checked += g.checked;
        }
    }
    return {arc_err <= 1e-6 && closed_err <= 1e-4,
            "great_circle_err=" + fmt_double(arc_err) + " closed_loop_rel_err=" + fmt_double(closed_err) +
                " points=" + std::to_string(checked)};
}

Outcome strong_invariance() {
    ScenarioConfig c = default_config(ScenarioKind::extend);
    c.initial.kind = InitialKind::fibonacci;
    c.initial.n = 50;
    c.horizon = 30.0;
    c.step = 1e-3;
    const RunReport rep = run_extend(c);
    double worst = 0.0;
    std::size_t bad = 0;
    for (const auto& e : rep.extensions) {
        worst = std::max(worst, e.drift);
        bad += (e.drift <= 1e-6 && e.well_defined) ? 0 : 1;
    }
    return {bad == 0 && rep.extensions.size() == 50,
            "runs=" + std::to_string(rep.extensions.size()) + " max_drift=" + fmt_double(worst) +
                " failing=" + std::to_string(bad)};
}

Outcome stabilization() {
    grid_report = run_stabilize(grid_config());
    double ult = 0.0, rise = 0.0;
    std::size_t bad = 0;
    for (const auto& r : grid_report.runs) {
        ult = std::max(ult, r.ultimate_radius);
        rise = std::max(rise, r.v_rise);
        bad += (r.well_defined && r.ultimate_radius <= 0.05 && r.v_rise <= 0.01) ? 0 : 1;
    }
    return {bad == 0 && grid_report.runs.size() == 100,
            "runs=" + std::to_string(grid_report.runs.size()) + " max_dist_late=" + fmt_double(ult) +
                " max_V_rise=" + fmt_double(rise) + " failing=" + std::to_string(bad)};
}

Outcome decay_certificates() {
    double d1 = 0.0, d2 = 0.0;
    std::size_t violations = 0;
    for (const auto& r : grid_report.runs) {
        d1 = std::min(d1, r.decay1_margin);
        d2 = std::min(d2, r.decay2_margin);
        violations += r.m1_violations;
    }
    return {!grid_report.runs.empty() && d1 >= -1e-3 && d2 >= -1e-3 && violations == 0,
            "decay1_worst=" + fmt_double(d1) + " decay2_worst=" + fmt_double(d2) +
                " m1_violations=" + std::to_string(violations)};
}

Outcome extension_construction() {
    ScenarioConfig c = default_config(ScenarioKind::extend);
    c.initial.kind = InitialKind::shell;
    c.initial.n = 50;
    c.initial.shells = {{0.05, 0.5}, {1.3, 3.0}};
    c.initial.seed = 1;
    c.horizon = 30.0;
    c.step = 1e-3;
    const RunReport rep = run_extend(c);
    double t_hat_err = 0.0, at_T2 = 0.0, normal_max = 0.0;
    std::size_t mono = 0, verify = 0, reached = 0;
    for (const auto& e : rep.extensions) {
        t_hat_err = std::max(t_hat_err, std::abs(e.entry_time - e.t_hat_expected));
        at_T2 = std::max(at_T2, e.normal_at_T2);
        normal_max = std::max(normal_max, e.normal_max);
        mono += e.monotonicity_violations;
        verify += e.verify_violations;
        reached += e.reach_time >= 0.0 ? 1 : 0;
    }
    const bool ok = rep.extensions.size() == 50 && t_hat_err <= 2.0 * c.step && mono == 0 &&
                    at_T2 <= 1.0 / 16.0 && verify == 0 && reached == rep.extensions.size();
    return {ok, "runs=" + std::to_string(rep.extensions.size()) + " t_hat_err=" + fmt_double(t_hat_err) +
                    " monotone_violations=" + std::to_string(mono) + " max_normal_at_T2=" + fmt_double(at_T2) +
                    " max_normal=" + fmt_double(normal_max) + " reached=" + std::to_string(reached)};
}

Outcome noisy_sampling() {
    ScenarioConfig c = default_config(ScenarioKind::iss_sweep);
    c.initial.kind = InitialKind::fibonacci;
    c.initial.n = 100;
    c.initial.stride = 4;
    c.partition.deltas = {0.01, 0.005};
    c.noise.kappas = {0.0, 0.1};
    c.noise.bounds = {0.0, 0.1, 0.5};
    c.noise.seeds = 4;
    c.horizon = 30.0;
    c.step = 1e-3;
    c.seed = 1;
    const RunReport rep = run_iss_sweep(c);

    std::size_t unbounded = 0, compared = 0, mismatched = 0;
    for (const auto& r : rep.runs) {
        unbounded += r.well_defined ? 0 : 1;
        if (r.delta == 0.01 && r.kappa == 0.0 && r.n_bound == 0.0) {
            const std::size_t grid_index = r.start * c.initial.stride;
            ++compared;
            if (grid_index >= grid_report.runs.size() || grid_report.runs[grid_index].hash != r.hash) ++mismatched;
        }
    }
    std::size_t decreasing = 0;
    for (const auto& a : rep.aggregate) {
        for (const auto& b : rep.aggregate) {
            if (a.delta == b.delta && a.kappa == b.kappa && a.n_bound < b.n_bound &&
                b.median_ultimate < a.median_ultimate) {
                ++decreasing;
            }
        }
    }
    const bool ok = rep.runs.size() == 1200 && unbounded == 0 && compared == 100 && mismatched == 0 &&
                    decreasing == 0;
    return {ok, "runs=" + std::to_string(rep.runs.size()) + " unbounded=" + std::to_string(unbounded) +
                    " bitwise_compared=" + std::to_string(compared) + " mismatched=" + std::to_string(mismatched) +
                    " median_decreases_in_N=" + std::to_string(decreasing)};
}

Outcome integrator_order() {
    const double ratio = richardson_ratio(sphere_project({-1.0, 0.3, 0.2}).coords(), 0.04, 0.02, 2.0);
    return {ratio >= 12.0 && ratio <= 20.0, "ratio=" + fmt_double(ratio)};
}

Outcome finite_escape() {
    const double t_max = tan_escape_time(1e-3);
    const double err = std::abs(t_max - kPi / 2.0);
    return {err <= 1e-3, "t_max=" + fmt_double(t_max) + " err=" + fmt_double(err)};
}

struct Criterion {
    int id;
    const char* name;
    double limit_s;  // 0: no runtime limit
    std::function<Outcome()> run;
};

}  // namespace

int main() {
    const std::vector<Criterion> criteria{
        {1, "geometry_identities", 1.0, geometry_identities},
        {2, "gauss_lemma", 10.0, gauss_lemma},
        {3, "strong_invariance", 30.0, strong_invariance},
        {4, "stabilization", 120.0, stabilization},
        {5, "decay_certificates", 0.0, decay_certificates},
        {6, "extension_construction", 60.0, extension_construction},
        {7, "noisy_sampling", 300.0, noisy_sampling},
        {8, "integrator_order", 5.0, integrator_order},
        {9, "finite_escape", 0.0, finite_escape},
    };
    int failed = 0;
    for (const auto& c : criteria) {
        const auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = c.run();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        const bool in_time = c.limit_s == 0.0 || secs < c.limit_s;
        const bool pass = o.ok && in_time;
        failed += pass ? 0 : 1;
        std::string limit = c.limit_s > 0.0 ? " limit=" + fmt_double(c.limit_s) + "s" : "";
        std::printf("%s %d %s time=%.2fs%s %s%s\n", pass ? "PASS" : "FAIL", c.id, c.name, secs, limit.c_str(),
                    o.detail.c_str(), in_time ? "" : " (over time limit)");
        std::fflush(stdout);
    }
    std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
    return failed == 0 ? 0 : 1;
}
