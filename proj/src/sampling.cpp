#include "shlab/sampling.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>
#include <utility>

#include "shlab/errors.hpp"
#include "shlab/rng.hpp"

namespace shlab {

namespace {

AmbientVector rk4_step(const PiTrajectory::SegmentRhs& rhs, const SampleRecord& hold, double t,
                       const AmbientVector& x, double h) {
    const AmbientVector k1 = rhs(t, x, hold);
    const AmbientVector k2 = rhs(t + 0.5 * h, x + (0.5 * h) * k1, hold);
    const AmbientVector k3 = rhs(t + 0.5 * h, x + (0.5 * h) * k2, hold);
    const AmbientVector k4 = rhs(t + h, x + h * k3, hold);
    return x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

bool escaped(const AmbientVector& x) { return !is_finite(x) || norm(x) > kEscapeNorm; }

}  // namespace

Partition Partition::make(PartitionKind kind, double delta, double jitter_ratio, std::uint64_t seed) {
    if (!(delta > 0.0) || !std::isfinite(delta)) {
        throw ParameterError("Partition: delta must be positive and finite");
    }
    if (!(jitter_ratio >= 0.0 && jitter_ratio < 1.0)) {
        throw ParameterError("Partition: jitter_ratio must lie in [0, 1)");
    }
    if (kind == PartitionKind::uniform) jitter_ratio = 0.0;
    return Partition(kind, delta, jitter_ratio, seed);
}

double Partition::step_length(std::size_t i) const {
    if (kind_ == PartitionKind::uniform) return delta_;
    return delta_ * (1.0 - jitter_ * counter_uniform(seed_, streams::kPartitionJitter, i));
}

double Partition::Generator::advance() {
    if (p_.kind_ == PartitionKind::uniform) {
        ++i_;
        t_ = static_cast<double>(i_) * p_.delta_;
    } else {
        t_ += p_.step_length(i_);
        ++i_;
    }
    return t_;
}

std::vector<double> Partition::times_until(double horizon) const {
    std::vector<double> times{0.0};
    auto gen = generator();
    while (times.back() < horizon) times.push_back(gen.advance());
    return times;
}

Diameters observed_diameters(const std::vector<double>& times) {
    if (times.size() < 2) throw ParameterError("observed_diameters: need at least two times");
    Diameters d{0.0, std::numeric_limits<double>::infinity()};
    for (std::size_t i = 0; i + 1 < times.size(); ++i) {
        const double gap = times[i + 1] - times[i];
        d.dbar = std::max(d.dbar, gap);
        d.dlow = std::min(d.dlow, gap);
    }
    return d;
}

std::size_t PiTrajectory::node_index_at(double t) const {
    if (!(t >= nodes_.front().t && t <= nodes_.back().t)) {
        throw ParameterError("PiTrajectory: time " + std::to_string(t) + " outside [0, t_end]");
    }
    auto it = std::upper_bound(nodes_.begin(), nodes_.end(), t,
                               [](double value, const TrajectoryNode& n) { return value < n.t; });
    return static_cast<std::size_t>(std::distance(nodes_.begin(), it)) - 1;
}

AmbientVector PiTrajectory::state_at(double t) const {
    const TrajectoryNode& n = nodes_[node_index_at(t)];
    if (t == n.t) return n.x;
    return rk4_step(rhs_, samples_[n.segment], n.t, n.x, t - n.t);
}

std::size_t PiTrajectory::segment_at(double t) const { return nodes_[node_index_at(t)].segment; }

AmbientVector PiTrajectory::velocity_at(double t) const {
    const TrajectoryNode& n = nodes_[node_index_at(t)];
    return rhs_(t, state_at(t), samples_[n.segment]);
}

double PiTrajectory::max_sphere_drift() const {
    double worst = 0.0;
    for (const auto& n : nodes_) worst = std::max(worst, std::abs(norm(n.x) - 1.0));
    return worst;
}

PiTrajectory integrate_piecewise(const AmbientVector& x0, double horizon, double step,
                                 std::function<double()> next_break,
                                 std::function<SampleRecord(std::size_t, double, const AmbientVector&)> on_start,
                                 PiTrajectory::SegmentRhs rhs) {
    if (!is_finite(x0)) throw ParameterError("integrate: non-finite initial state");
    if (!(horizon > 0.0) || !std::isfinite(horizon)) throw ParameterError("integrate: horizon must be positive");
    if (!(step > 0.0)) throw ParameterError("integrate: step must be positive");

    PiTrajectory traj;
    traj.rhs_ = std::move(rhs);
    traj.horizon_ = horizon;
    const auto& f = traj.rhs_;

    double t = 0.0;
    AmbientVector x = x0;
    traj.nodes_.push_back({0.0, x0, 0});

    for (std::size_t i = 0; t < horizon; ++i) {
        double t_next = next_break();
        if (!(t_next > t)) throw ParameterError("integrate: breakpoints must increase strictly");
        t_next = std::min(t_next, horizon);

        SampleRecord hold = on_start(i, t, x);
        hold.index = i;
        hold.t = t;
        hold.state = x;
        traj.samples_.push_back(hold);
        traj.nodes_.back().segment = i;

        const double length = t_next - t;
        const auto substeps = static_cast<std::size_t>(std::max(1.0, std::ceil(length / step - 1e-9)));
        const double h = length / static_cast<double>(substeps);

        for (std::size_t k = 1; k <= substeps; ++k) {
            const double t_target = (k == substeps) ? t_next : traj.samples_.back().t + static_cast<double>(k) * h;
            AmbientVector trial = rk4_step(f, hold, t, x, t_target - t);
            if (!escaped(trial)) {
                t = t_target;
                x = trial;
                traj.nodes_.push_back({t, x, i});
                continue;
            }
            // Halve the substep toward the blow-up; either the segment end is
            // reached after all, or the escape time is pinned to kEscapeResolution.
            double hh = t_target - t;
            while (t < t_next) {
                hh = std::min(hh, t_next - t);
                trial = rk4_step(f, hold, t, x, hh);
                if (!escaped(trial)) {
                    t = (hh == t_next - t) ? t_next : t + hh;
                    x = trial;
                    traj.nodes_.push_back({t, x, i});
                    continue;
                }
                if (hh < kEscapeResolution) {
                    traj.t_max_ = t + hh;
                    return traj;
                }
                hh *= 0.5;
            }
            break;
        }
    }
    return traj;
}

PiTrajectory integrate_pi_trajectory(const Rhs& rhs, const Feedback& feedback, const Partition& pi,
                                     const AmbientVector& x0, double horizon, double step) {
    if (step > pi.dlow()) throw ParameterError("integrate_pi_trajectory: step must not exceed the lower diameter");
    auto gen = pi.generator();
    return integrate_piecewise(
        x0, horizon, step, [gen]() mutable { return gen.advance(); },
        [&feedback](std::size_t, double, const AmbientVector& x) {
            SampleRecord r;
            r.observed = x;
            r.held = feedback(x);
            return r;
        },
        [rhs](double, const AmbientVector& x, const SampleRecord& hold) { return rhs(x, hold.held); });
}

AmbientVector perturb_on_sphere(const AmbientVector& x, double radius, double angle) {
    if (radius == 0.0) return x;
    const AmbientVector center = x / norm(x);
    // Frame of T_x built from the coordinate axis least aligned with x.
    AmbientVector axis{1.0, 0.0, 0.0};
    const double a1 = std::abs(center.x1), a2 = std::abs(center.x2), a3 = std::abs(center.x3);
    if (a2 <= a1 && a2 <= a3) {
        axis = {0.0, 1.0, 0.0};
    } else if (a3 <= a1 && a3 <= a2) {
        axis = {0.0, 0.0, 1.0};
    }
    AmbientVector e1 = cross(center, axis);
    e1 = e1 / norm(e1);
    const AmbientVector e2 = cross(center, e1);
    const AmbientVector dir = std::cos(angle) * e1 + std::sin(angle) * e2;
    return std::cos(radius) * center + std::sin(radius) * dir;
}

PiTrajectory integrate_pi_solution_noisy(const AffineRhs& rhs, const Feedback& feedback, const Partition& pi,
                                         const AmbientVector& x0, const NoiseModel& noise, double horizon,
                                         double step) {
    if (step > pi.dlow()) {
        throw ParameterError("integrate_pi_solution_noisy: step must not exceed the lower diameter");
    }
    auto gen = pi.generator();
    const std::uint64_t seed = noise.seed;
    auto on_start = [&feedback, &noise, seed](std::size_t i, double t, const AmbientVector& x) {
        const double radius = noise.obs_error ? noise.obs_error(t) : 0.0;
        if (!(radius >= 0.0) || radius > noise.obs_cap) {
            throw ParameterError("noise: observation error " + std::to_string(radius) + " outside [0, cap]");
        }
        SampleRecord r;
        const double angle = 2.0 * std::numbers::pi * counter_uniform(seed, streams::kObservationNoise, i);
        r.observed = perturb_on_sphere(x, radius, angle);
        r.held = feedback(r.observed);
        return r;
    };
    auto act = noise.act_error;
    const double bound = noise.act_bound;
    auto segment_rhs = [rhs, act, bound](double t, const AmbientVector& x, const SampleRecord& hold) {
        SphereControl error{};
        if (act) {
            error = act(t, hold.index, hold.held);
            if (error.norm() > bound * (1.0 + 1e-12)) {
                throw ParameterError("noise: actuator error exceeds its declared bound");
            }
        }
        return rhs(x, hold.held, error);
    };
    return integrate_piecewise(x0, horizon, step, [gen]() mutable { return gen.advance(); }, on_start, segment_rhs);
}

}  // namespace shlab
