#include <doctest.h>

#include <filesystem>
#include <string>

#include "shlab/config.hpp"
#include "shlab/errors.hpp"

using namespace shlab;

namespace {

std::string error_of(const std::string& text) {
    try {
        parse_config(text);
    } catch (const ConfigError& e) {
        return e.what();
    }
    return "";
}

bool contains(const std::string& s, const std::string& part) { return s.find(part) != std::string::npos; }

}  // namespace

TEST_CASE("defaults") {
    const ScenarioConfig s = default_config(ScenarioKind::stabilize);
    CHECK(s.horizon == 30.0);
    CHECK(s.step == 1e-3);
    CHECK(s.partition.deltas == std::vector<double>{0.01});
    CHECK(s.initial.n == 100);
    CHECK(s.tol.target_radius == 0.05);
    CHECK_NOTHROW(s.validate());
    const ScenarioConfig iss = default_config(ScenarioKind::iss_sweep);
    CHECK(iss.noise.bounds == std::vector<double>{0.0, 0.1, 0.5});
    CHECK(iss.noise.actuator == ActuatorMode::opposing);
    CHECK(default_config(ScenarioKind::extend).initial.kind == InitialKind::shell);
}

TEST_CASE("valid scenario") {
    const ScenarioConfig c = parse_config(R"(
[scenario]
kind = "iss_sweep"
name = "small"
seed = 7
horizon = 5.0
step = 0.0005
workers = 2

[initial]
kind = "list"
points = [[1, 0, 0], [0.0, 0.6, 0.8]]

[partition]
kind = "jittered"
deltas = [0.01]
jitter = 0.5
seed = 3

[noise]
kappas = [0.1]
actuator_bounds = [0.5]
actuator = "constant"
seeds = 2

[tolerances]
order = [10, 22]
)");
    CHECK(c.kind == ScenarioKind::iss_sweep);
    CHECK(c.name == "small");
    CHECK(c.seed == 7);
    CHECK(c.horizon == 5.0);
    CHECK(c.workers == 2);
    REQUIRE(c.initial.points.size() == 2);
    CHECK(c.initial.points[1] == AmbientVector{0.0, 0.6, 0.8});
    CHECK(c.partition.kind == PartitionKind::jittered);
    CHECK(c.partition_for(0.01).dlow() == doctest::Approx(0.005));
    CHECK(c.noise.actuator == ActuatorMode::constant);
    CHECK(c.noise.seeds == 2);
    CHECK(c.tol.order_low == 10.0);
    CHECK(c.tol.order_high == 22.0);
}

TEST_CASE("field-level errors") {
    CHECK(contains(error_of("[scenario]\nkind = \"stabilize\"\nhorizn = 3.0\n"), "scenario.horizn"));
    CHECK(contains(error_of("[scenario]\nkind = \"stabilize\"\nhorizon = \"long\"\n"), "scenario.horizon"));
    CHECK(contains(error_of("[scenario]\nkind = \"stabilize\"\nstep = 0.1\n"), "step"));
    CHECK(contains(error_of("[scenario]\nkind = \"bogus\"\n"), "scenario.kind"));
    CHECK(contains(error_of("[scenario]\nname = \"x\"\n"), "scenario.kind"));
    CHECK(contains(error_of("[scenario]\nkind = \"stabilize\"\n[extra]\n"), "extra"));
    CHECK(contains(error_of("[scenario]\nkind = \"stabilize\"\n[partition]\ndeltas = [0.01, -1]\n"),
                   "partition.deltas"));
    CHECK(contains(error_of("[scenario]\nkind = \"stabilize\"\n[noise]\nactuator = \"loud\"\n"), "noise.actuator"));
    CHECK(contains(error_of("[scenario]\nkind = \"stabilize\"\n[initial]\npoints = [[1, 0]]\n"), "initial.points"));
    CHECK(contains(error_of("[initial]\nn = 3\n"), "scenario"));
}

TEST_CASE("TOML syntax errors carry a position") {
    const std::string msg = error_of("[scenario]\nkind = \"stabilize\"\nhorizon = = 3\n");
    CHECK(contains(msg, ":3:"));
}

TEST_CASE("missing file") {
    CHECK_THROWS_AS(load_config("/nonexistent/shlab.toml"), ConfigError);
}

TEST_CASE("shipped configs parse") {
    const std::filesystem::path dir = std::filesystem::path(SHLAB_SOURCE_DIR) / "configs";
    std::size_t count = 0;
    for (const auto& entry : std::filesystem::directory_iterator(dir)) {
        if (entry.path().extension() != ".toml") continue;
        CAPTURE(entry.path().string());
        CHECK_NOTHROW(load_config(entry.path().string()));
        ++count;
    }
    CHECK(count >= 6);
    CHECK(load_config((dir / "iss_sweep.toml").string()).kind == ScenarioKind::iss_sweep);
}
