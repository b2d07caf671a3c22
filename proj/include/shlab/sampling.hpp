#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <vector>

#include "shlab/dynamics.hpp"
#include "shlab/geometry.hpp"

namespace shlab {

enum class PartitionKind { uniform, jittered };

/// Sampling schedule 0 = t0 < t1 < ... generated lazily and without end.
///
/// Uniform partitions use t_i = i * delta. Jittered steps are drawn from
/// [delta (1 - jitter_ratio), delta] with a counter-based generator keyed by
/// the seed, so t_i is a pure function of (seed, i).
class Partition {
public:
    static Partition make(PartitionKind kind, double delta, double jitter_ratio, std::uint64_t seed);
    static Partition uniform(double delta) { return make(PartitionKind::uniform, delta, 0.0, 0); }

    PartitionKind kind() const { return kind_; }
    double delta() const { return delta_; }
    double jitter_ratio() const { return jitter_; }
    std::uint64_t seed() const { return seed_; }

    /// Declared upper and lower diameters.
    double dbar() const { return delta_; }
    double dlow() const { return kind_ == PartitionKind::uniform ? delta_ : delta_ * (1.0 - jitter_); }

    /// Length of step i, i.e. t_{i+1} - t_i.
    double step_length(std::size_t i) const;

    class Generator;
    Generator generator() const;

    /// t_0, t_1, ..., t_n with t_n the first time >= horizon.
    std::vector<double> times_until(double horizon) const;

private:
    Partition(PartitionKind kind, double delta, double jitter, std::uint64_t seed)
        : kind_(kind), delta_(delta), jitter_(jitter), seed_(seed) {}

    PartitionKind kind_;
    double delta_;
    double jitter_;
    std::uint64_t seed_;
};

class Partition::Generator {
public:
    double current() const { return t_; }
    std::size_t index() const { return i_; }
    /// Moves to the next sampling time and returns it.
    double advance();

private:
    friend class Partition;
    explicit Generator(const Partition& p) : p_(p) {}
    Partition p_;
    std::size_t i_{0};
    double t_{0.0};
};

inline Partition::Generator Partition::generator() const { return Generator(*this); }

struct Diameters {
    double dbar;
    double dlow;
};

/// sup and inf of consecutive differences over a generated prefix.
Diameters observed_diameters(const std::vector<double>& times);

/// Start of one hold interval: the true state, the (possibly perturbed)
/// observation the feedback saw, and the value held until the next sample.
struct SampleRecord {
    std::size_t index{0};
    double t{0.0};
    AmbientVector state;
    AmbientVector observed;
    SphereControl held;
};

struct TrajectoryNode {
    double t{0.0};
    AmbientVector x;
    std::size_t segment{0};  // index of the hold interval that starts at or contains t
};

/// Sample-and-hold trajectory on [0, t_end] with dense output.
///
/// A node sitting on a sampling instant is labelled with the interval it
/// starts, so dense output and velocities are right-continuous.
class PiTrajectory {
public:
    using SegmentRhs = std::function<AmbientVector(double t, const AmbientVector& x, const SampleRecord& hold)>;

    static constexpr double kWellDefined = std::numeric_limits<double>::infinity();

    const std::vector<SampleRecord>& samples() const { return samples_; }
    const std::vector<TrajectoryNode>& nodes() const { return nodes_; }

    /// Maximal time; +infinity when no escape occurred before the horizon.
    double t_max() const { return t_max_; }
    bool well_defined() const { return t_max_ == kWellDefined; }
    double t_end() const { return nodes_.back().t; }
    double horizon() const { return horizon_; }

    /// State at any t in [0, t_end], reconstructed by one RK4 step from the
    /// preceding node with the hold value of that interval.
    AmbientVector state_at(double t) const;
    AmbientVector velocity_at(double t) const;
    std::size_t segment_at(double t) const;
    const SampleRecord& sample_at(double t) const { return samples_[segment_at(t)]; }

    /// sup over nodes of | |x| - 1 |.
    double max_sphere_drift() const;

private:
    friend PiTrajectory integrate_piecewise(const AmbientVector&, double, double, std::function<double()>,
                                            std::function<SampleRecord(std::size_t, double, const AmbientVector&)>,
                                            SegmentRhs);

    std::size_t node_index_at(double t) const;

    std::vector<SampleRecord> samples_;
    std::vector<TrajectoryNode> nodes_;
    SegmentRhs rhs_;
    double t_max_{kWellDefined};
    double horizon_{0.0};
};

/// States beyond this norm (or non-finite) count as a finite escape.
inline constexpr double kEscapeNorm = 1e6;
/// Time resolution of the escape-time bisection.
inline constexpr double kEscapeResolution = 1e-9;

/// Core engine shared by every run type.
///
/// next_break() yields the successive interval ends t_1 < t_2 < ...;
/// on_start(i, t_i, x(t_i)) is called once per interval and fixes the held
/// record; rhs is integrated with classical RK4 using equal substeps of at
/// most `step`. On escape the failing substep is halved repeatedly down to
/// kEscapeResolution and t_max is set to the escape time.
PiTrajectory integrate_piecewise(const AmbientVector& x0, double horizon, double step,
                                 std::function<double()> next_break,
                                 std::function<SampleRecord(std::size_t, double, const AmbientVector&)> on_start,
                                 PiTrajectory::SegmentRhs rhs);

using Rhs = std::function<AmbientVector(const AmbientVector& x, const SphereControl& u)>;
using Feedback = std::function<SphereControl(const AmbientVector& x)>;
/// h(x) + G(x)[u_feedback + u_actuator].
using AffineRhs = std::function<AmbientVector(const AmbientVector& x, const SphereControl& u_feedback,
                                              const SphereControl& u_actuator)>;

/// pi-trajectory: feedback evaluated once at each t_i and held on [t_i, t_{i+1}).
PiTrajectory integrate_pi_trajectory(const Rhs& rhs, const Feedback& feedback, const Partition& pi,
                                     const AmbientVector& x0, double horizon, double step);

/// Actuator error u(t); `held` is the feedback value of the current interval.
using ActuatorSignal = std::function<SphereControl(double t, std::size_t sample_index, const SphereControl& held)>;

struct NoiseModel {
    /// Observation-error radius e(t) >= 0 (geodesic).
    std::function<double(double)> obs_error = [](double) { return 0.0; };
    double obs_cap{0.0};
    ActuatorSignal act_error;  // empty means u = 0
    double act_bound{0.0};
    std::uint64_t seed{0};

    static NoiseModel none() { return {}; }
};

/// Point at geodesic distance `radius` from x in the tangent direction of
/// angle `angle` (measured in a fixed orthonormal frame of T_x).
AmbientVector perturb_on_sphere(const AmbientVector& x, double radius, double angle);

/// Noisy pi-solution: eta(t_i) is drawn uniformly on the geodesic circle of
/// radius e(t_i) about x(t_i), k(eta(t_i)) is held, and the actuator error
/// enters additively through the control channels.
PiTrajectory integrate_pi_solution_noisy(const AffineRhs& rhs, const Feedback& feedback, const Partition& pi,
                                         const AmbientVector& x0, const NoiseModel& noise, double horizon,
                                         double step);

}  // namespace shlab
