#include "shlab/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <initializer_list>
#include <sstream>

#include <toml.hpp>

#include "shlab/errors.hpp"

namespace shlab {

namespace {

[[noreturn]] void fail(const std::string& field, const std::string& what) {
    throw ConfigError(field + ": " + what);
}

// One TOML table with field-qualified error messages.
class Section {
public:
    Section(const toml::table* tbl, std::string name) : tbl_(tbl), name_(std::move(name)) {}

    bool present() const { return tbl_ != nullptr; }

    void check_keys(std::initializer_list<const char*> allowed) const {
        if (!tbl_) return;
        for (const auto& [key, node] : *tbl_) {
            (void)node;
            const bool known = std::any_of(allowed.begin(), allowed.end(),
                                           [&](const char* a) { return key.str() == a; });
            if (!known) fail(field(std::string(key.str())), "unknown key");
        }
    }

    const toml::node* get(const char* key) const { return tbl_ ? tbl_->get(key) : nullptr; }

    std::string field(const std::string& key) const { return name_ + "." + key; }

    void read(const char* key, double& out) const {
        if (const auto* n = get(key)) out = as_double(*n, field(key));
    }

    void read(const char* key, std::string& out) const {
        if (const auto* n = get(key)) {
            const auto v = n->value<std::string>();
            if (!n->is_string() || !v) fail(field(key), "expected a string");
            out = *v;
        }
    }

    void read(const char* key, std::uint64_t& out) const {
        if (const auto* n = get(key)) {
            if (!n->is_integer()) fail(field(key), "expected an integer");
            const auto v = *n->value<std::int64_t>();
            if (v < 0) fail(field(key), "must be nonnegative");
            out = static_cast<std::uint64_t>(v);
        }
    }

    void read(const char* key, std::vector<double>& out) const {
        const auto* n = get(key);
        if (!n) return;
        const auto* arr = n->as_array();
        if (!arr) fail(field(key), "expected an array of numbers");
        out.clear();
        for (std::size_t i = 0; i < arr->size(); ++i) {
            out.push_back(as_double(*arr->get(i), field(key) + "[" + std::to_string(i) + "]"));
        }
    }

    // Array of fixed-size numeric arrays, e.g. points = [[1, 0, 0], ...].
    std::vector<std::vector<double>> read_rows(const char* key, std::size_t width) const {
        std::vector<std::vector<double>> rows;
        const auto* n = get(key);
        if (!n) return rows;
        const auto* arr = n->as_array();
        if (!arr) fail(field(key), "expected an array of arrays");
        for (std::size_t i = 0; i < arr->size(); ++i) {
            const std::string f = field(key) + "[" + std::to_string(i) + "]";
            const auto* row = arr->get(i)->as_array();
            if (!row || row->size() != width) fail(f, "expected " + std::to_string(width) + " numbers");
            std::vector<double> values;
            for (std::size_t j = 0; j < width; ++j) values.push_back(as_double(*row->get(j), f));
            rows.push_back(std::move(values));
        }
        return rows;
    }

private:
    static double as_double(const toml::node& n, const std::string& field) {
        if (n.is_floating_point()) return *n.value<double>();
        if (n.is_integer()) return static_cast<double>(*n.value<std::int64_t>());
        fail(field, "expected a number");
    }

    const toml::table* tbl_;
    std::string name_;
};

ScenarioKind parse_kind(const std::string& s) {
    if (s == "stabilize") return ScenarioKind::stabilize;
    if (s == "extend") return ScenarioKind::extend;
    if (s == "iss_sweep") return ScenarioKind::iss_sweep;
    if (s == "verify") return ScenarioKind::verify;
    fail("scenario.kind", "unknown scenario '" + s + "' (stabilize, extend, iss_sweep, verify)");
}

}  // namespace

const char* scenario_name(ScenarioKind k) {
    switch (k) {
        case ScenarioKind::stabilize:
            return "stabilize";
        case ScenarioKind::extend:
            return "extend";
        case ScenarioKind::iss_sweep:
            return "iss_sweep";
        case ScenarioKind::verify:
            return "verify";
    }
    return "unknown";
}

const char* actuator_name(ActuatorMode m) {
    switch (m) {
        case ActuatorMode::opposing:
            return "opposing";
        case ActuatorMode::constant:
            return "constant";
        case ActuatorMode::random:
            return "random";
    }
    return "unknown";
}

void ScenarioConfig::validate() const {
    if (!(step > 0.0) || !std::isfinite(step)) fail("scenario.step", "must be positive");
    if (!(horizon > 0.0) || !std::isfinite(horizon)) fail("scenario.horizon", "must be positive");
    if (partition.deltas.empty()) fail("partition.deltas", "must be nonempty");
    if (!(partition.jitter >= 0.0 && partition.jitter < 1.0)) fail("partition.jitter", "must lie in [0, 1)");
    for (double d : partition.deltas) {
        if (!(d > 0.0) || !std::isfinite(d)) fail("partition.deltas", "entries must be positive");
        if (step > partition_for(d).dlow() * (1.0 + 1e-12)) {
            fail("scenario.step", "must not exceed the smallest lower diameter");
        }
    }
    if (noise.kappas.empty()) fail("noise.kappas", "must be nonempty");
    if (noise.bounds.empty()) fail("noise.actuator_bounds", "must be nonempty");
    for (double k : noise.kappas) {
        if (!(k >= 0.0)) fail("noise.kappas", "entries must be nonnegative");
    }
    for (double n : noise.bounds) {
        if (!(n >= 0.0)) fail("noise.actuator_bounds", "entries must be nonnegative");
    }
    if (noise.seeds == 0) fail("noise.seeds", "must be at least 1");
    if (initial.stride == 0) fail("initial.stride", "must be at least 1");
    switch (initial.kind) {
        case InitialKind::list:
            if (initial.points.empty()) fail("initial.points", "must be nonempty");
            for (const auto& p : initial.points) {
                if (!is_finite(p) || norm(p) == 0.0) fail("initial.points", "entries must be finite and nonzero");
            }
            break;
        case InitialKind::fibonacci:
        case InitialKind::shell:
            if (initial.n == 0) fail("initial.n", "must be at least 1");
            if (initial.n < initial.stride) fail("initial.stride", "must not exceed initial.n");
            break;
    }
    if (initial.kind == InitialKind::shell) {
        if (initial.shells.empty()) fail("initial.shells", "must be nonempty");
        for (const auto& [lo, hi] : initial.shells) {
            if (!(lo > 0.0 && hi >= lo)) fail("initial.shells", "need 0 < low <= high");
        }
    }
    if (!(tol.order_low < tol.order_high)) fail("tolerances.order", "need low < high");
}

Partition ScenarioConfig::partition_for(double delta) const {
    return Partition::make(partition.kind, delta, partition.jitter, partition.seed);
}

ScenarioConfig default_config(ScenarioKind kind) {
    ScenarioConfig c;
    c.kind = kind;
    c.name = scenario_name(kind);
    switch (kind) {
        case ScenarioKind::stabilize:
        case ScenarioKind::verify:
            break;
        case ScenarioKind::extend:
            c.initial.kind = InitialKind::shell;
            c.initial.n = 50;
            c.initial.seed = 1;
            break;
        case ScenarioKind::iss_sweep:
            c.initial.stride = 4;
            c.partition.deltas = {0.01, 0.005};
            c.noise.kappas = {0.0, 0.1};
            c.noise.bounds = {0.0, 0.1, 0.5};
            c.noise.seeds = 4;
            c.step = 1e-3;
            break;
    }
    return c;
}

ScenarioConfig parse_config(const std::string& text, const std::string& source) {
    toml::table root;
    try {
        root = toml::parse(text, source);
    } catch (const toml::parse_error& e) {
        std::ostringstream msg;
        msg << source << ":" << e.source().begin.line << ":" << e.source().begin.column << ": " << e.description();
        throw ConfigError(msg.str());
    }
    for (const auto& [key, node] : root) {
        const std::string k(key.str());
        if (k != "scenario" && k != "initial" && k != "partition" && k != "noise" && k != "tolerances") {
            fail(k, "unknown table");
        }
        if (!node.is_table()) fail(k, "expected a table");
    }

    const Section scenario(root["scenario"].as_table(), "scenario");
    if (!scenario.present()) fail("scenario", "missing table");
    scenario.check_keys({"kind", "name", "seed", "horizon", "step", "workers", "out"});
    std::string kind_text;
    scenario.read("kind", kind_text);
    if (kind_text.empty()) fail("scenario.kind", "missing");

    ScenarioConfig c = default_config(parse_kind(kind_text));
    scenario.read("name", c.name);
    scenario.read("seed", c.seed);
    scenario.read("horizon", c.horizon);
    scenario.read("step", c.step);
    scenario.read("workers", c.workers);
    scenario.read("out", c.out_dir);

    const Section initial(root["initial"].as_table(), "initial");
    initial.check_keys({"kind", "n", "stride", "points", "shells", "seed"});
    std::string ikind;
    initial.read("kind", ikind);
    if (!ikind.empty()) {
        if (ikind == "list") {
            c.initial.kind = InitialKind::list;
        } else if (ikind == "fibonacci") {
            c.initial.kind = InitialKind::fibonacci;
        } else if (ikind == "shell") {
            c.initial.kind = InitialKind::shell;
        } else {
            fail("initial.kind", "unknown kind '" + ikind + "' (list, fibonacci, shell)");
        }
    }
    initial.read("n", c.initial.n);
    initial.read("stride", c.initial.stride);
    initial.read("seed", c.initial.seed);
    if (initial.get("points")) {
        c.initial.points.clear();
        for (const auto& row : initial.read_rows("points", 3)) c.initial.points.push_back({row[0], row[1], row[2]});
    }
    if (initial.get("shells")) {
        c.initial.shells.clear();
        for (const auto& row : initial.read_rows("shells", 2)) c.initial.shells.emplace_back(row[0], row[1]);
    }

    const Section partition(root["partition"].as_table(), "partition");
    partition.check_keys({"kind", "deltas", "jitter", "seed"});
    std::string pkind;
    partition.read("kind", pkind);
    if (!pkind.empty()) {
        if (pkind == "uniform") {
            c.partition.kind = PartitionKind::uniform;
        } else if (pkind == "jittered") {
            c.partition.kind = PartitionKind::jittered;
        } else {
            fail("partition.kind", "unknown kind '" + pkind + "' (uniform, jittered)");
        }
    }
    partition.read("deltas", c.partition.deltas);
    partition.read("jitter", c.partition.jitter);
    partition.read("seed", c.partition.seed);

    const Section noise(root["noise"].as_table(), "noise");
    noise.check_keys({"kappas", "actuator_bounds", "actuator", "seeds"});
    noise.read("kappas", c.noise.kappas);
    noise.read("actuator_bounds", c.noise.bounds);
    noise.read("seeds", c.noise.seeds);
    std::string act;
    noise.read("actuator", act);
    if (!act.empty()) {
        if (act == "opposing") {
            c.noise.actuator = ActuatorMode::opposing;
        } else if (act == "constant") {
            c.noise.actuator = ActuatorMode::constant;
        } else if (act == "random") {
            c.noise.actuator = ActuatorMode::random;
        } else {
            fail("noise.actuator", "unknown mode '" + act + "' (opposing, constant, random)");
        }
    }

    const Section tol(root["tolerances"].as_table(), "tolerances");
    tol.check_keys({"target_radius", "ultimate_radius", "v_rise", "decay", "alpha3", "drift", "gauss", "order",
                    "escape", "identity"});
    tol.read("target_radius", c.tol.target_radius);
    tol.read("ultimate_radius", c.tol.ultimate_radius);
    tol.read("v_rise", c.tol.v_rise);
    tol.read("decay", c.tol.decay);
    tol.read("alpha3", c.tol.alpha3);
    tol.read("drift", c.tol.drift);
    tol.read("gauss", c.tol.gauss);
    tol.read("escape", c.tol.escape);
    tol.read("identity", c.tol.identity);
    if (tol.get("order")) {
        std::vector<double> order;
        tol.read("order", order);
        if (order.size() != 2) fail("tolerances.order", "expected [low, high]");
        c.tol.order_low = order[0];
        c.tol.order_high = order[1];
    }

    c.validate();
    return c;
}

ScenarioConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError(path + ": cannot open config file");
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_config(buf.str(), path);
}

}  // namespace shlab
