#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "shlab/config.hpp"
#include "shlab/errors.hpp"
#include "shlab/harness.hpp"

namespace {

constexpr int kPass = 0;
constexpr int kCheckFailure = 1;
constexpr int kConfigError = 2;

struct Overrides {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> out;
    std::optional<std::size_t> workers;
    std::optional<double> delta;
    std::optional<double> horizon;
    std::optional<double> step;
    std::vector<double> x0;
};

void add_common(CLI::App* cmd, Overrides& o) {
    cmd->add_option("--config", o.config, "scenario TOML file")->check(CLI::ExistingFile);
    cmd->add_option("--seed", o.seed, "master seed");
    cmd->add_option("--out", o.out, "output directory");
    cmd->add_option("--workers", o.workers, "worker threads (0: all cores)");
    cmd->add_option("--delta", o.delta, "single sampling diameter, replaces the delta grid");
    cmd->add_option("--horizon", o.horizon, "integration horizon");
    cmd->add_option("--step", o.step, "RK4 substep bound");
}

shlab::ScenarioConfig resolve(const Overrides& o, shlab::ScenarioKind fallback) {
    shlab::ScenarioConfig cfg = o.config.empty() ? shlab::default_config(fallback) : shlab::load_config(o.config);
    if (o.seed) cfg.seed = *o.seed;
    if (o.out) cfg.out_dir = *o.out;
    if (o.workers) cfg.workers = *o.workers;
    if (o.delta) cfg.partition.deltas = {*o.delta};
    if (o.horizon) cfg.horizon = *o.horizon;
    if (o.step) cfg.step = *o.step;
    if (!o.x0.empty()) {
        cfg.initial.kind = shlab::InitialKind::list;
        cfg.initial.points = {{o.x0[0], o.x0[1], o.x0[2]}};
        cfg.initial.stride = 1;
    }
    cfg.validate();
    return cfg;
}

void require_kind(const shlab::ScenarioConfig& cfg, std::initializer_list<shlab::ScenarioKind> kinds,
                  const std::string& command) {
    for (auto k : kinds) {
        if (cfg.kind == k) return;
    }
    throw shlab::ConfigError(std::string("scenario.kind: '") + shlab::scenario_name(cfg.kind) +
                             "' cannot be run by '" + command + "'");
}

int emit(const shlab::RunReport& rep, const shlab::ScenarioConfig& cfg) {
    if (cfg.out_dir.empty()) {
        std::cout << rep.summary_json() << "\n";
    } else {
        shlab::write_report(rep, cfg.out_dir);
        std::cerr << "wrote " << cfg.out_dir << "\n";
    }
    for (const auto& c : rep.checks) {
        if (!c.ok) std::cerr << (c.hard ? "FAIL " : "warn ") << c.name << " value=" << c.value << "\n";
    }
    return rep.ok() ? kPass : kCheckFailure;
}

int simulate(const shlab::ScenarioConfig& cfg) {
    const auto starts = shlab::initial_points(cfg.initial);
    const shlab::AmbientVector x0 = shlab::sphere_project(starts.front()).coords();
    const auto traj = shlab::closed_loop(x0, cfg.partition_for(cfg.partition.deltas.front()), cfg.horizon, cfg.step);
    const std::string csv = shlab::trajectory_csv(traj);
    if (cfg.out_dir.empty()) {
        std::cout << csv;
    } else {
        std::filesystem::create_directories(cfg.out_dir);
        std::ofstream(std::filesystem::path(cfg.out_dir) / "trajectory.csv", std::ios::binary) << csv;
        const auto rep = shlab::check_decay(traj);
        std::ofstream(std::filesystem::path(cfg.out_dir) / "decay.json", std::ios::binary) << rep.to_json() << "\n";
    }
    return traj.well_defined() ? kPass : kCheckFailure;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Sample-and-hold stabilization lab on the unit sphere"};
    app.require_subcommand(1);

    Overrides sim_o, ext_o, sweep_o, verify_o;
    auto* sim = app.add_subcommand("simulate", "single closed-loop run, trajectory CSV");
    add_common(sim, sim_o);
    sim->add_option("--x0", sim_o.x0, "start point x1 x2 x3 (projected onto the sphere)")->expected(3);
    auto* ext = app.add_subcommand("extend", "ambient extension construction from off-sphere starts");
    add_common(ext, ext_o);
    auto* sweep = app.add_subcommand("sweep", "stabilization or noisy-sampling sweep");
    add_common(sweep, sweep_o);
    auto* verify = app.add_subcommand("verify", "property suite; exit 0 iff all checks pass");
    add_common(verify, verify_o);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kPass : kConfigError;
    }

    using shlab::ScenarioKind;
    shlab::ScenarioConfig cfg;
    try {
        if (*sim) {
            cfg = resolve(sim_o, ScenarioKind::stabilize);
        } else if (*ext) {
            cfg = resolve(ext_o, ScenarioKind::extend);
            require_kind(cfg, {ScenarioKind::extend}, "extend");
        } else if (*sweep) {
            cfg = resolve(sweep_o, ScenarioKind::iss_sweep);
            require_kind(cfg, {ScenarioKind::stabilize, ScenarioKind::iss_sweep}, "sweep");
        } else {
            cfg = resolve(verify_o, ScenarioKind::verify);
            require_kind(cfg, {ScenarioKind::verify}, "verify");
        }
    } catch (const shlab::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kConfigError;
    } catch (const shlab::ParameterError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kConfigError;
    }

    try {
        if (*sim) return simulate(cfg);
        return emit(shlab::run_scenario(cfg), cfg);
    } catch (const shlab::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kConfigError;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kCheckFailure;
    }
}
