#include "shlab/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstring>
#include <exception>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <mutex>
#include <numbers>
#include <thread>

#include <fmt/format.h>
#include <json.hpp>

#include "shlab/errors.hpp"
#include "shlab/feedback.hpp"
#include "shlab/rng.hpp"

namespace shlab {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kGridExclusion = 1e-6;
constexpr double kMonotoneSlack = 1e-12;

double dist_of(const AmbientVector& x) { return dist_attractor(sphere_project(x)); }
double v_of(const AmbientVector& x) { return lyapunov_v(sphere_project(x)); }

double median(std::vector<double> v) {
    if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
    std::sort(v.begin(), v.end());
    const std::size_t m = v.size() / 2;
    return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

std::string num(double v) { return fmt::format("{:.17g}", v); }

Check make_check(std::string name, bool ok, double value, double threshold, std::string detail = {},
                 bool hard = true) {
    return {std::move(name), ok, value, threshold, std::move(detail), hard};
}

// Unit-speed geodesic flow toward q; dG(x, q)/dt = -1 along it.
AmbientVector great_circle_field(const AmbientVector& x) {
    const AmbientVector b1 = kPoleQ - dot(x, kPoleQ) * x;
    return b1 / norm(b1);
}

}  // namespace

std::vector<AmbientVector> fibonacci_sphere(std::size_t n) {
    std::vector<AmbientVector> pts;
    const double golden = kPi * (3.0 - std::sqrt(5.0));
    const SpherePoint avoid[] = {pole_q(), -pole_q(), aux_r(), -aux_r()};
    for (std::size_t i = 0; i < n; ++i) {
        const double z = 1.0 - (2.0 * static_cast<double>(i) + 1.0) / static_cast<double>(n);
        const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
        const double th = golden * static_cast<double>(i);
        const AmbientVector x{r * std::cos(th), r * std::sin(th), z};
        const SpherePoint p = sphere_project(x);
        const bool near = std::any_of(std::begin(avoid), std::end(avoid),
                                      [&](const SpherePoint& a) { return geodesic_distance(p, a) < kGridExclusion; });
        if (!near) pts.push_back(p.coords());
    }
    return pts;
}

std::vector<AmbientVector> shell_sample(const std::vector<std::pair<double, double>>& shells, std::size_t n,
                                        std::uint64_t seed) {
    double total = 0.0;
    for (const auto& [lo, hi] : shells) total += hi - lo;
    std::vector<AmbientVector> pts;
    for (std::size_t i = 0; i < n; ++i) {
        const double a = counter_uniform(seed, streams::kShellSampler, 3 * i);
        const double b = counter_uniform(seed, streams::kShellSampler, 3 * i + 1);
        double s = counter_uniform(seed, streams::kShellSampler, 3 * i + 2) * total;
        double radius = shells.back().second;
        for (const auto& [lo, hi] : shells) {
            if (s <= hi - lo) {
                radius = lo + s;
                break;
            }
            s -= hi - lo;
        }
        const double z = 1.0 - 2.0 * a;
        const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
        const double th = 2.0 * kPi * b;
        pts.push_back({radius * r * std::cos(th), radius * r * std::sin(th), radius * z});
    }
    return pts;
}

std::vector<AmbientVector> initial_points(const InitialSpec& spec) {
    std::vector<AmbientVector> all;
    switch (spec.kind) {
        case InitialKind::list:
            all = spec.points;
            break;
        case InitialKind::fibonacci:
            all = fibonacci_sphere(spec.n);
            break;
        case InitialKind::shell:
            all = shell_sample(spec.shells, spec.n, spec.seed);
            break;
    }
    std::vector<AmbientVector> kept;
    for (std::size_t i = 0; i < all.size(); i += spec.stride) kept.push_back(all[i]);
    return kept;
}

void parallel_for(std::size_t count, std::size_t workers, const std::function<void(std::size_t)>& fn) {
    if (workers == 0) workers = std::max(1u, std::thread::hardware_concurrency());
    workers = std::min(workers, std::max<std::size_t>(count, 1));
    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    auto work = [&] {
        for (std::size_t i = next++; i < count; i = next++) {
            try {
                fn(i);
            } catch (...) {
                std::lock_guard lock(error_mutex);
                if (!error) error = std::current_exception();
                next = count;
            }
        }
    };
    std::vector<std::thread> pool;
    for (std::size_t w = 1; w < workers; ++w) pool.emplace_back(work);
    work();
    for (auto& t : pool) t.join();
    if (error) std::rethrow_exception(error);
}

std::uint64_t trajectory_hash(const PiTrajectory& traj) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    auto mix = [&h](double v) {
        unsigned char bytes[sizeof(double)];
        std::memcpy(bytes, &v, sizeof v);
        for (unsigned char b : bytes) {
            h ^= b;
            h *= 0x100000001b3ULL;
        }
    };
    for (const auto& n : traj.nodes()) {
        mix(n.t);
        mix(n.x.x1);
        mix(n.x.x2);
        mix(n.x.x3);
    }
    for (const auto& s : traj.samples()) {
        mix(s.held.u1);
        mix(s.held.u2);
    }
    return h;
}

std::string trajectory_csv(const PiTrajectory& traj) {
    std::string out = "t,x1,x2,x3,u1,u2,norm_dev,dist_A,V,M1,sample_index\n";
    for (const auto& n : traj.nodes()) {
        const SampleRecord& s = traj.samples()[n.segment];
        const SpherePoint p = sphere_project(n.x);
        out += fmt::format("{:.10g},{},{},{},{:.10g},{:.10g},{:.6e},{},{},{},{}\n", n.t, num(n.x.x1), num(n.x.x2),
                           num(n.x.x3), s.held.u1, s.held.u2, norm(n.x) - 1.0, num(dist_attractor(p)),
                           num(lyapunov_v(p)), num(bump_m1(p)), n.segment);
    }
    return out;
}

PiTrajectory closed_loop(const AmbientVector& x0, const Partition& pi, double horizon, double step) {
    return integrate_pi_trajectory(sphere_field, k_sphere_state, pi, x0, horizon, step);
}

ActuatorSignal actuator_signal(ActuatorMode mode, double bound, std::uint64_t seed) {
    switch (mode) {
        case ActuatorMode::opposing:
            return [bound](double, std::size_t, const SphereControl& held) { return held * (-bound); };
        case ActuatorMode::constant:
            return [bound](double, std::size_t, const SphereControl&) { return SphereControl{bound, 0.0}; };
        case ActuatorMode::random:
            return [bound, seed](double, std::size_t i, const SphereControl&) {
                const double a = 2.0 * kPi * counter_uniform(seed, streams::kActuatorNoise, i);
                return SphereControl{bound * std::cos(a), bound * std::sin(a)};
            };
    }
    return {};
}

StabilityRecord measure_run(const PiTrajectory& traj, const Tolerances& tol, double horizon) {
    StabilityRecord r;
    const auto& nodes = traj.nodes();
    r.x0 = nodes.front().x;
    r.well_defined = traj.well_defined();
    r.t_max = traj.t_max();
    const double v0 = v_of(nodes.front().x);
    const double tail = 0.8 * horizon;
    std::size_t last_out = nodes.size();
    for (std::size_t k = 0; k < nodes.size(); ++k) {
        const double d = dist_of(nodes[k].x);
        if (d > tol.target_radius) last_out = k;
        if (nodes[k].t >= tail) r.ultimate_radius = std::max(r.ultimate_radius, d);
        r.max_distance = std::max(r.max_distance, d);
        r.v_rise = std::max(r.v_rise, v_of(nodes[k].x) - v0);
    }
    if (last_out == nodes.size()) {
        r.settle_time = 0.0;
    } else if (last_out + 1 < nodes.size()) {
        r.settle_time = nodes[last_out + 1].t;
    }
    r.drift = traj.max_sphere_drift();

    DecayOptions opts;
    opts.tol = tol.decay;
    opts.keep_records = false;
    const DecayReport rep = check_decay(traj, opts);
    r.decay_ok = rep.ok();
    r.decay1_margin = rep.worst_m1_one;
    r.decay2_margin = rep.worst_m1_below_one;
    r.m1_violations = rep.m1_violations;
    const double c = tol.alpha3;
    const IntegralDecayResult integral = check_integral_decay(traj, [c](double s) { return c * s; }, tol.decay);
    r.integral_ok = integral.ok;
    r.integral_slack = integral.worst_slack;
    r.hash = trajectory_hash(traj);
    return r;
}

std::vector<AggregateRow> aggregate_runs(const std::vector<StabilityRecord>& runs) {
    std::vector<AggregateRow> rows;
    std::vector<std::vector<const StabilityRecord*>> members;
    for (const auto& r : runs) {
        auto it = std::find_if(rows.begin(), rows.end(), [&](const AggregateRow& a) {
            return a.delta == r.delta && a.kappa == r.kappa && a.n_bound == r.n_bound;
        });
        if (it == rows.end()) {
            rows.push_back({r.delta, r.kappa, r.n_bound});
            members.emplace_back();
            it = rows.end() - 1;
        }
        members[static_cast<std::size_t>(it - rows.begin())].push_back(&r);
    }
    for (std::size_t i = 0; i < rows.size(); ++i) {
        AggregateRow& a = rows[i];
        std::vector<double> ult, settle;
        for (const StabilityRecord* r : members[i]) {
            ++a.runs;
            if (r->well_defined) ++a.bounded;
            ult.push_back(r->ultimate_radius);
            a.max_ultimate = std::max(a.max_ultimate, r->ultimate_radius);
            a.max_distance = std::max(a.max_distance, r->max_distance);
            if (r->settle_time >= 0.0) {
                ++a.settled;
                settle.push_back(r->settle_time);
                a.max_settle = std::max(a.max_settle, r->settle_time);
            }
        }
        a.median_ultimate = median(ult);
        a.median_settle = median(settle);
    }
    return rows;
}

bool RunReport::ok() const {
    return std::all_of(checks.begin(), checks.end(), [](const Check& c) { return c.ok || !c.hard; });
}

std::string RunReport::runs_csv() const {
    std::string out;
    if (kind == ScenarioKind::extend) {
        out = "run,z1,z2,z3,t_hat,t_hat_expected,entry_time,T2,p3,normal_at_T2,normal_max,"
              "monotonicity_violations,verify_violations,reach_time,drift,well_defined\n";
        for (const auto& e : extensions) {
            out += fmt::format("{},{},{},{},{},{},{},{},{},{},{},{},{},{},{:.6e},{}\n", e.run, num(e.z0.x1),
                               num(e.z0.x2), num(e.z0.x3), num(e.t_hat), num(e.t_hat_expected), num(e.entry_time),
                               num(e.T2), num(e.p3), num(e.normal_at_T2), num(e.normal_max),
                               e.monotonicity_violations, e.verify_violations, num(e.reach_time), e.drift,
                               e.well_defined ? 1 : 0);
        }
        return out;
    }
    out = "run,start,x1,x2,x3,delta,kappa,N,seed,well_defined,t_max,settle_time,ultimate_radius,max_distance,"
          "v_rise,drift,decay_ok,decay1_margin,decay2_margin,m1_violations,integral_ok,integral_slack,hash\n";
    for (const auto& r : runs) {
        out += fmt::format("{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{:.6e},{},{},{},{},{},{},{:016x}\n", r.run,
                           r.start, num(r.x0.x1), num(r.x0.x2), num(r.x0.x3), r.delta, r.kappa, r.n_bound, r.seed,
                           r.well_defined ? 1 : 0, num(r.t_max), num(r.settle_time), num(r.ultimate_radius),
                           num(r.max_distance), num(r.v_rise), r.drift, r.decay_ok ? 1 : 0, num(r.decay1_margin),
                           num(r.decay2_margin), r.m1_violations, r.integral_ok ? 1 : 0, num(r.integral_slack),
                           r.hash);
    }
    return out;
}

std::string RunReport::aggregate_csv() const {
    std::string out = "delta,kappa,N,runs,bounded,settled,median_ultimate,max_ultimate,median_settle,max_settle,"
                      "max_distance\n";
    for (const auto& a : aggregate) {
        out += fmt::format("{},{},{},{},{},{},{},{},{},{},{}\n", a.delta, a.kappa, a.n_bound, a.runs, a.bounded,
                           a.settled, num(a.median_ultimate), num(a.max_ultimate), num(a.median_settle),
                           num(a.max_settle), num(a.max_distance));
    }
    return out;
}

std::string RunReport::summary_json() const {
    nlohmann::ordered_json j;
    j["scenario"] = scenario_name(kind);
    j["name"] = name;
    j["ok"] = ok();
    j["runs"] = kind == ScenarioKind::extend ? extensions.size() : runs.size();
    auto checks_json = nlohmann::ordered_json::array();
    for (const auto& c : checks) {
        nlohmann::ordered_json e;
        e["name"] = c.name;
        e["ok"] = c.ok;
        e["hard"] = c.hard;
        e["value"] = c.value;
        e["threshold"] = c.threshold;
        if (!c.detail.empty()) e["detail"] = c.detail;
        checks_json.push_back(e);
    }
    j["checks"] = checks_json;
    auto failing = nlohmann::ordered_json::array();
    for (const auto& c : checks) {
        if (!c.ok && c.hard) failing.push_back(c.name);
    }
    j["failing"] = failing;
    return j.dump(2);
}

namespace {

void stability_checks(RunReport& rep, const ScenarioConfig& cfg) {
    double ult = 0.0, rise = 0.0, drift = 0.0, slack = 0.0, d1 = 0.0, d2 = 0.0;
    std::size_t unbounded = 0, decay_fail = 0, m1 = 0, integral_fail = 0;
    for (const auto& r : rep.runs) {
        ult = std::max(ult, r.ultimate_radius);
        rise = std::max(rise, r.v_rise);
        drift = std::max(drift, r.drift);
        slack = std::min(slack, r.integral_slack);
        d1 = std::min(d1, r.decay1_margin);
        d2 = std::min(d2, r.decay2_margin);
        unbounded += r.well_defined ? 0 : 1;
        decay_fail += r.decay_ok ? 0 : 1;
        m1 += r.m1_violations;
        integral_fail += r.integral_ok ? 0 : 1;
    }
    const Tolerances& t = cfg.tol;
    rep.checks.push_back(make_check("bounded", unbounded == 0, static_cast<double>(unbounded), 0.0));
    rep.checks.push_back(make_check("ultimate_radius", ult <= t.ultimate_radius, ult, t.ultimate_radius));
    rep.checks.push_back(make_check("v_rise", rise <= t.v_rise, rise, t.v_rise));
    rep.checks.push_back(make_check("sphere_drift", drift <= t.drift, drift, t.drift));
    rep.checks.push_back(make_check("decay1", d1 >= -t.decay, d1, -t.decay));
    rep.checks.push_back(make_check("decay2", d2 >= -t.decay, d2, -t.decay));
    rep.checks.push_back(make_check("decay_runs", decay_fail == 0, static_cast<double>(decay_fail), 0.0));
    rep.checks.push_back(make_check("m1_invariance", m1 == 0, static_cast<double>(m1), 0.0));
    rep.checks.push_back(make_check("integral_decay", integral_fail == 0, slack, -t.decay,
                                    fmt::format("alpha3(s) = {} s", t.alpha3)));
}

// Median settle time should not grow as delta shrinks; the tolerance is the
// largest delta of the grid.
Check settle_monotonicity(const std::vector<AggregateRow>& rows) {
    std::map<std::pair<double, double>, std::vector<const AggregateRow*>> by_noise;
    double dmax = 0.0;
    for (const auto& a : rows) {
        by_noise[{a.kappa, a.n_bound}].push_back(&a);
        dmax = std::max(dmax, a.delta);
    }
    double worst = 0.0;
    for (auto& [key, cells] : by_noise) {
        std::sort(cells.begin(), cells.end(), [](auto* a, auto* b) { return a->delta > b->delta; });
        for (std::size_t i = 1; i < cells.size(); ++i) {
            worst = std::max(worst, cells[i]->median_settle - cells[i - 1]->median_settle);
        }
    }
    return make_check("settle_monotone_in_delta", worst <= dmax, worst, dmax, "median settle time growth", false);
}

Check n_monotonicity(const std::vector<AggregateRow>& rows) {
    std::map<std::pair<double, double>, std::vector<const AggregateRow*>> cells;
    for (const auto& a : rows) cells[{a.delta, a.kappa}].push_back(&a);
    double worst = 0.0;
    std::size_t violations = 0;
    for (auto& [key, group] : cells) {
        std::sort(group.begin(), group.end(), [](auto* a, auto* b) { return a->n_bound < b->n_bound; });
        for (std::size_t i = 1; i < group.size(); ++i) {
            const double drop = group[i - 1]->median_ultimate - group[i]->median_ultimate;
            worst = std::max(worst, drop);
            if (drop > 0.0) ++violations;
        }
    }
    return make_check("median_ultimate_monotone_in_N", violations == 0, worst, 0.0,
                      fmt::format("{} decreasing steps", violations), false);
}

}  // namespace

RunReport run_stabilize(const ScenarioConfig& cfg) {
    cfg.validate();
    const auto starts = initial_points(cfg.initial);
    RunReport rep;
    rep.kind = ScenarioKind::stabilize;
    rep.name = cfg.name;
    const std::size_t per_delta = starts.size();
    rep.runs.resize(per_delta * cfg.partition.deltas.size());
    parallel_for(rep.runs.size(), cfg.workers, [&](std::size_t i) {
        const double delta = cfg.partition.deltas[i / per_delta];
        const std::size_t s = i % per_delta;
        const AmbientVector x0 = sphere_project(starts[s]).coords();
        const PiTrajectory traj = closed_loop(x0, cfg.partition_for(delta), cfg.horizon, cfg.step);
        StabilityRecord r = measure_run(traj, cfg.tol, cfg.horizon);
        r.run = i;
        r.start = s;
        r.delta = delta;
        r.seed = cfg.seed;
        rep.runs[i] = r;
    });
    rep.aggregate = aggregate_runs(rep.runs);
    stability_checks(rep, cfg);
    rep.checks.push_back(settle_monotonicity(rep.aggregate));
    return rep;
}

RunReport run_iss_sweep(const ScenarioConfig& cfg) {
    cfg.validate();
    const auto starts = initial_points(cfg.initial);
    RunReport rep;
    rep.kind = ScenarioKind::iss_sweep;
    rep.name = cfg.name;
    const auto& deltas = cfg.partition.deltas;
    const auto& kappas = cfg.noise.kappas;
    const auto& bounds = cfg.noise.bounds;
    const std::size_t seeds = cfg.noise.seeds;
    const std::size_t n_starts = starts.size();
    rep.runs.resize(deltas.size() * kappas.size() * bounds.size() * seeds * n_starts);
    parallel_for(rep.runs.size(), cfg.workers, [&](std::size_t i) {
        std::size_t rest = i;
        const std::size_t s = rest % n_starts;
        rest /= n_starts;
        const std::size_t j = rest % seeds;
        rest /= seeds;
        const double n_bound = bounds[rest % bounds.size()];
        rest /= bounds.size();
        const double kappa = kappas[rest % kappas.size()];
        rest /= kappas.size();
        const double delta = deltas[rest];

        const Partition pi = cfg.partition_for(delta);
        const std::uint64_t run_seed = counter_hash(cfg.seed, streams::kRunSeed, j);
        NoiseModel noise;
        const double radius = kappa * pi.dlow();
        noise.obs_error = [radius](double) { return radius; };
        noise.obs_cap = radius;
        noise.seed = counter_hash(run_seed, streams::kRunSeed, s);
        noise.act_bound = n_bound;
        noise.act_error = actuator_signal(cfg.noise.actuator, n_bound, noise.seed);
        const AffineRhs rhs = [](const AmbientVector& x, const SphereControl& u_fb, const SphereControl& u_act) {
            return sphere_field(x, u_fb + u_act);
        };
        const AmbientVector x0 = sphere_project(starts[s]).coords();
        const PiTrajectory traj = integrate_pi_solution_noisy(rhs, k_sphere_state, pi, x0, noise, cfg.horizon, cfg.step);
        StabilityRecord r = measure_run(traj, cfg.tol, cfg.horizon);
        r.run = i;
        r.start = s;
        r.delta = delta;
        r.kappa = kappa;
        r.n_bound = n_bound;
        r.seed = run_seed;
        rep.runs[i] = r;
    });
    rep.aggregate = aggregate_runs(rep.runs);
    std::size_t unbounded = 0;
    double drift = 0.0;
    for (const auto& r : rep.runs) {
        unbounded += r.well_defined ? 0 : 1;
        drift = std::max(drift, r.drift);
    }
    rep.checks.push_back(make_check("bounded", unbounded == 0, static_cast<double>(unbounded), 0.0));
    rep.checks.push_back(make_check("sphere_drift", drift <= cfg.tol.drift, drift, cfg.tol.drift));
    rep.checks.push_back(n_monotonicity(rep.aggregate));
    return rep;
}

RunReport run_extend(const ScenarioConfig& cfg) {
    cfg.validate();
    const auto starts = initial_points(cfg.initial);
    const TubeConfig tube = TubeConfig::sphere();
    const Partition pi = cfg.partition_for(cfg.partition.deltas.front());
    RunReport rep;
    rep.kind = ScenarioKind::extend;
    rep.name = cfg.name;
    rep.extensions.resize(starts.size());
    parallel_for(starts.size(), cfg.workers, [&](std::size_t i) {
        const AmbientVector z0 = starts[i];
        const AmbientVector base = sphere_project(z0).coords();
        const PiTrajectory ref = closed_loop(base, pi, cfg.horizon, cfg.step);
        const ProofBounds b = compute_bounds(ref, 1.0, tube, z0);
        const ControlSchedule sched =
            build_extension_controls(z0, PiecewiseControl::from_trajectory(ref), b, cfg.horizon, cfg.step, tube);
        const PiTrajectory traj = integrate_extension(sched, cfg.step, tube);

        ExtensionRecord e;
        e.run = i;
        e.z0 = z0;
        e.t_hat = sched.t_hat();
        const double radius = norm(z0);
        if (radius > tube.comega_outer) {
            e.t_hat_expected = radius - tube.comega_outer;
        } else if (radius < tube.comega_inner) {
            e.t_hat_expected = tube.comega_inner - radius;
        }
        e.T2 = sched.T2();
        e.p3 = b.p3;
        e.well_defined = traj.well_defined();
        double prev = std::numeric_limits<double>::infinity();
        for (const auto& n : traj.nodes()) {
            const double r = norm(n.x);
            const double normal = std::abs(r - 1.0);
            e.drift = std::max(e.drift, normal);
            if (e.entry_time < 0.0 && r >= tube.comega_inner - kMonotoneSlack &&
                r <= tube.comega_outer + kMonotoneSlack) {
                e.entry_time = n.t;
            }
            if (normal > prev + kMonotoneSlack) ++e.monotonicity_violations;
            prev = normal;
            if (n.t >= e.t_hat) {
                e.normal_max = std::max(e.normal_max, normal);
                if (normal >= tube.omega) ++e.verify_violations;
                if (e.reach_time < 0.0 && normal < tube.eps && dist_of(n.x) < cfg.tol.target_radius) {
                    e.reach_time = n.t;
                }
            }
        }
        e.normal_at_T2 = std::abs(norm(traj.state_at(std::min(e.t_hat + e.T2, traj.t_end()))) - 1.0);
        rep.extensions[i] = e;
    });

    double t_hat_err = 0.0, at_T2 = 0.0, sphere_drift = 0.0;
    std::size_t mono = 0, verify = 0, unreached = 0;
    for (const auto& e : rep.extensions) {
        t_hat_err = std::max(t_hat_err, std::abs(e.entry_time - e.t_hat_expected));
        at_T2 = std::max(at_T2, e.normal_at_T2);
        mono += e.monotonicity_violations;
        verify += e.verify_violations;
        unreached += e.reach_time < 0.0 ? 1 : 0;
        if (std::abs(norm(e.z0) - 1.0) <= 1e-12) sphere_drift = std::max(sphere_drift, e.drift);
    }
    rep.checks.push_back(make_check("t_hat", t_hat_err <= 2.0 * cfg.step, t_hat_err, 2.0 * cfg.step));
    rep.checks.push_back(make_check("normal_monotone", mono == 0, static_cast<double>(mono), 0.0));
    rep.checks.push_back(make_check("normal_at_T2", at_T2 <= tube.omega / 4.0 + kMonotoneSlack, at_T2,
                                    tube.omega / 4.0));
    rep.checks.push_back(make_check("normal_below_omega", verify == 0, static_cast<double>(verify), 0.0));
    rep.checks.push_back(make_check("reach_eps_tube", unreached == 0, static_cast<double>(unreached), 0.0));
    rep.checks.push_back(make_check("sphere_invariance", sphere_drift <= cfg.tol.drift, sphere_drift, cfg.tol.drift));
    return rep;
}

double richardson_ratio(const AmbientVector& x0, double delta, double h, double horizon) {
    // Coarse steps leave the sphere by more than the SpherePoint tolerance, so
    // the feedback reads the radial projection, as sphere_field does for M1.
    const Partition pi = Partition::uniform(delta);
    const Feedback projected = [](const AmbientVector& x) { return k_sphere(sphere_project(x)); };
    auto endpoint = [&](double step) {
        return integrate_pi_trajectory(sphere_field, projected, pi, x0, horizon, step).nodes().back().x;
    };
    const AmbientVector coarse = endpoint(2.0 * h);
    const AmbientVector mid = endpoint(h);
    const AmbientVector fine = endpoint(0.5 * h);
    return norm(coarse - mid) / norm(mid - fine);
}

double tan_escape_time(double step) {
    const Rhs rhs = [](const AmbientVector& x, const SphereControl&) { return AmbientVector{1.0 + x.x1 * x.x1, 0, 0}; };
    const Feedback constant = [](const AmbientVector&) { return SphereControl{}; };
    return integrate_pi_trajectory(rhs, constant, Partition::uniform(0.01), {}, 3.0, step).t_max();
}

RunReport run_verify(const ScenarioConfig& cfg, const VerifyOptions& opts) {
    cfg.validate();
    const Tolerances& t = cfg.tol;
    RunReport rep;
    rep.kind = ScenarioKind::verify;
    rep.name = cfg.name;

    {
        double e1 = 0.0, e2 = 0.0;
        for (const auto& x : fibonacci_sphere(10000)) {
            const SpherePoint p(x);
            const auto [b1, b2] = base_fields(p);
            const AmbientVector y = geodesic_direction(p, pole_q());
            e1 = std::max(e1, std::abs(dot(b1, y) - std::sqrt(1.0 - x.x3 * x.x3)));
            e2 = std::max(e2, std::abs(dot(b2, y)));
        }
        rep.checks.push_back(make_check("geometry_b1", e1 <= t.identity, e1, t.identity));
        rep.checks.push_back(make_check("geometry_b2", e2 <= t.identity, e2, t.identity));
    }

    {
        // Unit-speed arc toward q, stopped well before reaching it.
        const AmbientVector x0 = sphere_project({1.0, 0.2, 0.3}).coords();
        const double length = v_q(SpherePoint(x0)) - 0.2;
        const PiTrajectory arc = integrate_pi_trajectory(
            [](const AmbientVector& x, const SphereControl&) { return great_circle_field(x); },
            [](const AmbientVector&) { return SphereControl{}; }, Partition::uniform(0.01), x0, length, 1e-3);
        const double h = 1e-5;
        double worst = 0.0;
        for (std::size_t k = 1; k + 1 < arc.nodes().size(); k += 7) {
            const double s = arc.nodes()[k].t + 0.5e-3;
            const double rate = (geodesic_distance(sphere_project(arc.state_at(s + h)), pole_q()) -
                                 geodesic_distance(sphere_project(arc.state_at(s - h)), pole_q())) /
                                (2.0 * h);
            worst = std::max(worst, std::abs(rate + 1.0));
        }
        rep.checks.push_back(make_check("gauss_great_circle", worst <= 1e-6, worst, 1e-6));
    }

    const auto starts = initial_points(cfg.initial);
    const Partition pi = cfg.partition_for(cfg.partition.deltas.front());
    std::vector<PiTrajectory> runs(starts.size());
    parallel_for(starts.size(), cfg.workers, [&](std::size_t i) {
        runs[i] = closed_loop(sphere_project(starts[i]).coords(), pi, cfg.horizon, cfg.step);
    });

    {
        const std::size_t count = std::min<std::size_t>(10, runs.size());
        std::vector<double> errors(count);
        parallel_for(count, cfg.workers, [&](std::size_t i) {
            GaussOptions g;
            g.stride = 3;
            errors[i] = std::max(check_gauss(runs[i], pole_q(), g, opts.direction).max_rel_error,
                                 check_gauss(runs[i], aux_r(), g, opts.direction).max_rel_error);
        });
        const double worst = errors.empty() ? 0.0 : *std::max_element(errors.begin(), errors.end());
        rep.checks.push_back(make_check("gauss_closed_loop", worst <= t.gauss, worst, t.gauss,
                                        fmt::format("{} runs, p in {{q, r}}", count)));
    }

    rep.runs.resize(runs.size());
    parallel_for(runs.size(), cfg.workers, [&](std::size_t i) {
        StabilityRecord r = measure_run(runs[i], t, cfg.horizon);
        r.run = i;
        r.start = i;
        r.delta = pi.delta();
        r.seed = cfg.seed;
        rep.runs[i] = r;
    });
    stability_checks(rep, cfg);

    {
        const std::size_t count = std::min<std::size_t>(5, starts.size());
        std::vector<double> drift(count);
        parallel_for(count, cfg.workers, [&](std::size_t i) {
            const AmbientVector z0 = runs[i].nodes().front().x;
            const ProofBounds b = compute_bounds(runs[i], 1.0, TubeConfig::sphere(), z0);
            const ControlSchedule sched = build_extension_controls(z0, PiecewiseControl::from_trajectory(runs[i]), b,
                                                                   cfg.horizon, cfg.step);
            drift[i] = integrate_extension(sched, cfg.step).max_sphere_drift();
        });
        const double worst = drift.empty() ? 0.0 : *std::max_element(drift.begin(), drift.end());
        rep.checks.push_back(make_check("extension_invariance", worst <= t.drift, worst, t.drift));
    }

    const double ratio = richardson_ratio(sphere_project({-1.0, 0.3, 0.2}).coords(), 0.04, 0.02, 2.0);
    rep.checks.push_back(make_check("integrator_order", ratio >= t.order_low && ratio <= t.order_high, ratio,
                                    t.order_high, fmt::format("expected in [{}, {}]", t.order_low, t.order_high)));

    const double escape = tan_escape_time(1e-3);
    rep.checks.push_back(make_check("finite_escape", std::abs(escape - kPi / 2.0) <= t.escape,
                                    std::abs(escape - kPi / 2.0), t.escape));
    return rep;
}

RunReport run_scenario(const ScenarioConfig& cfg) {
    switch (cfg.kind) {
        case ScenarioKind::stabilize:
            return run_stabilize(cfg);
        case ScenarioKind::extend:
            return run_extend(cfg);
        case ScenarioKind::iss_sweep:
            return run_iss_sweep(cfg);
        case ScenarioKind::verify:
            return run_verify(cfg);
    }
    throw ParameterError("run_scenario: unknown scenario kind");
}

void write_report(const RunReport& report, const std::string& dir) {
    namespace fs = std::filesystem;
    fs::create_directories(dir);
    auto write = [&](const std::string& name, const std::string& text) {
        std::ofstream out(fs::path(dir) / name, std::ios::binary);
        if (!out) throw ConfigError(dir + ": cannot write " + name);
        out << text;
    };
    if (!report.runs.empty() || !report.extensions.empty()) write("runs.csv", report.runs_csv());
    if (!report.aggregate.empty()) write("aggregate.csv", report.aggregate_csv());
    write("summary.json", report.summary_json() + "\n");
}

}  // namespace shlab
