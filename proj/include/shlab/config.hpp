#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "shlab/geometry.hpp"
#include "shlab/sampling.hpp"

namespace shlab {

enum class ScenarioKind { stabilize, extend, iss_sweep, verify };

const char* scenario_name(ScenarioKind k);

enum class InitialKind { list, fibonacci, shell };

struct InitialSpec {
    InitialKind kind{InitialKind::fibonacci};
    std::vector<AmbientVector> points;  // list
    std::size_t n{100};                 // fibonacci / shell
    std::size_t stride{1};              // keep every stride-th generated point
    std::vector<std::pair<double, double>> shells{{0.05, 0.5}, {1.3, 3.0}};
    std::uint64_t seed{0};              // shell sampler
};

struct PartitionSpec {
    PartitionKind kind{PartitionKind::uniform};
    std::vector<double> deltas{0.01};
    double jitter{0.0};
    std::uint64_t seed{0};
};

enum class ActuatorMode { opposing, constant, random };

const char* actuator_name(ActuatorMode m);

struct NoiseSpec {
    std::vector<double> kappas{0.0};
    std::vector<double> bounds{0.0};  // actuator bounds N
    ActuatorMode actuator{ActuatorMode::opposing};
    std::size_t seeds{1};
};

struct Tolerances {
    double target_radius{0.05};    // settle / target ball about {+-q}
    double ultimate_radius{0.05};  // pass threshold for the final 20% of the horizon
    double v_rise{0.01};
    double decay{1e-3};
    double alpha3{0.05};
    double drift{1e-6};
    double gauss{1e-4};
    double order_low{12.0};
    double order_high{20.0};
    double escape{1e-3};
    double identity{1e-12};
};

struct ScenarioConfig {
    ScenarioKind kind{ScenarioKind::stabilize};
    std::string name{"default"};
    InitialSpec initial;
    PartitionSpec partition;
    NoiseSpec noise;
    Tolerances tol;
    double step{1e-3};
    double horizon{30.0};
    std::uint64_t seed{0};
    std::size_t workers{0};  // 0: hardware concurrency
    std::string out_dir;

    /// Field-level ConfigError on the first violated invariant.
    void validate() const;
    Partition partition_for(double delta) const;
};

/// Defaults for each scenario kind, matching the shipped config files.
ScenarioConfig default_config(ScenarioKind kind);

/// Parses TOML text; unknown keys and type mismatches raise ConfigError naming the field.
ScenarioConfig parse_config(const std::string& text, const std::string& source = "<string>");
ScenarioConfig load_config(const std::string& path);

}  // namespace shlab
