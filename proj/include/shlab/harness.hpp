#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "shlab/config.hpp"
#include "shlab/lyapunov.hpp"
#include "shlab/sampling.hpp"

namespace shlab {

/// Fibonacci-sphere points, dropping any within geodesic 1e-6 of +-q or +-r.
std::vector<AmbientVector> fibonacci_sphere(std::size_t n);

/// n ambient points with radius uniform in the union of shells (by length)
/// and direction uniform on the sphere, deterministic in seed.
std::vector<AmbientVector> shell_sample(const std::vector<std::pair<double, double>>& shells, std::size_t n,
                                        std::uint64_t seed);

/// Start points of a scenario; every stride-th generated point is kept.
std::vector<AmbientVector> initial_points(const InitialSpec& spec);

/// Calls fn(i) for i in [0, count) on `workers` threads (0: hardware
/// concurrency). The first exception is rethrown after all workers stop.
void parallel_for(std::size_t count, std::size_t workers, const std::function<void(std::size_t)>& fn);

/// 64-bit FNV-1a over the nodes' raw bytes; equal hashes for bitwise-equal runs.
std::uint64_t trajectory_hash(const PiTrajectory& traj);

/// Rows (t, x1, x2, x3, u1, u2, |x|-1, dist_A, V, M1, sample_index) per node.
std::string trajectory_csv(const PiTrajectory& traj);

/// Closed-loop sphere field with feedback k_sphere.
PiTrajectory closed_loop(const AmbientVector& x0, const Partition& pi, double horizon, double step);

/// Actuator error of the given mode and bound for one noisy run.
ActuatorSignal actuator_signal(ActuatorMode mode, double bound, std::uint64_t seed);

struct StabilityRecord {
    std::size_t run{0};
    std::size_t start{0};
    AmbientVector x0;
    double delta{0.0};
    double kappa{0.0};
    double n_bound{0.0};
    std::uint64_t seed{0};
    bool well_defined{true};
    double t_max{0.0};
    double settle_time{-1.0};  // -1: never settles
    double ultimate_radius{0.0};
    double max_distance{0.0};
    double v_rise{0.0};
    double drift{0.0};
    bool decay_ok{true};
    double decay1_margin{0.0};
    double decay2_margin{0.0};
    std::size_t m1_violations{0};
    bool integral_ok{true};
    double integral_slack{0.0};
    std::uint64_t hash{0};
};

struct ExtensionRecord {
    std::size_t run{0};
    AmbientVector z0;
    double t_hat{0.0};
    double t_hat_expected{0.0};
    double entry_time{-1.0};
    double T2{0.0};
    double p3{0.0};
    double normal_at_T2{0.0};
    double normal_max{0.0};  // sup of |pi_N| after entry
    std::size_t monotonicity_violations{0};
    std::size_t verify_violations{0};  // |pi_N| >= omega after entry
    double reach_time{-1.0};           // first time in the eps-tube of the target ball
    double drift{0.0};                 // sup | |z| - 1 |
    bool well_defined{true};
};

struct AggregateRow {
    double delta{0.0};
    double kappa{0.0};
    double n_bound{0.0};
    std::size_t runs{0};
    std::size_t bounded{0};
    std::size_t settled{0};
    double median_ultimate{0.0};
    double max_ultimate{0.0};
    double median_settle{0.0};
    double max_settle{0.0};
    double max_distance{0.0};
};

struct Check {
    std::string name;
    bool ok{true};
    double value{0.0};
    double threshold{0.0};
    std::string detail;
    bool hard{true};  // soft checks are reported but do not fail the report
};

struct RunReport {
    ScenarioKind kind{ScenarioKind::stabilize};
    std::string name;
    std::vector<StabilityRecord> runs;
    std::vector<ExtensionRecord> extensions;
    std::vector<AggregateRow> aggregate;
    std::vector<Check> checks;

    /// All hard checks pass.
    bool ok() const;
    std::string runs_csv() const;
    std::string aggregate_csv() const;
    std::string summary_json() const;
};

/// Aggregate rows keyed by (delta, kappa, N), in first-appearance order.
std::vector<AggregateRow> aggregate_runs(const std::vector<StabilityRecord>& runs);

/// Per-run metrics of one sphere trajectory.
StabilityRecord measure_run(const PiTrajectory& traj, const Tolerances& tol, double horizon);

RunReport run_stabilize(const ScenarioConfig& cfg);
RunReport run_extend(const ScenarioConfig& cfg);
RunReport run_iss_sweep(const ScenarioConfig& cfg);

struct VerifyOptions {
    /// Direction field handed to the Gauss check; replaced by mutation tests.
    DirectionFn direction = geodesic_direction;
};

RunReport run_verify(const ScenarioConfig& cfg, const VerifyOptions& opts = {});

/// Dispatches on cfg.kind.
RunReport run_scenario(const ScenarioConfig& cfg);

/// Endpoint Richardson ratio |x(2h) - x(h)| / |x(h) - x(h/2)| of a closed-loop arc.
double richardson_ratio(const AmbientVector& x0, double delta, double h, double horizon);

/// Escape time of xdot = 1 + x^2 from 0, through the sampling engine.
double tan_escape_time(double step);

/// Writes runs.csv, aggregate.csv (when nonempty) and summary.json into dir.
void write_report(const RunReport& report, const std::string& dir);

}  // namespace shlab
