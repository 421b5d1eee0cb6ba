#include "tpc/config.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>

#include "tpc/errors.hpp"

namespace tpc {

namespace {

std::string trim(const std::string& s) {
    auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

}  // namespace

ConfigMap ConfigMap::parse_text(const std::string& text) {
    ConfigMap map;
    std::istringstream in(text);
    std::string line;
    std::string section;
    long lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']')
                throw ConfigError("line " + std::to_string(lineno) +
                                  ": unterminated section header");
            section = trim(line.substr(1, line.size() - 2));
            if (section.empty())
                throw ConfigError("line " + std::to_string(lineno) +
                                  ": empty section name");
            map.sections_[section];  // allow empty sections
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("line " + std::to_string(lineno) +
                              ": expected 'key = value'");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty())
            throw ConfigError("line " + std::to_string(lineno) + ": empty key");
        if (section.empty())
            throw ConfigError("line " + std::to_string(lineno) +
                              ": key outside any [section]");
        map.sections_[section][key] = value;
    }
    return map;
}

ConfigMap ConfigMap::parse_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_text(buf.str());
}

bool ConfigMap::has(const std::string& section, const std::string& key) const {
    auto s = sections_.find(section);
    return s != sections_.end() && s->second.count(key) > 0;
}

std::string ConfigMap::get_string(const std::string& section,
                                  const std::string& key,
                                  const std::string& fallback) const {
    auto s = sections_.find(section);
    if (s == sections_.end()) return fallback;
    auto k = s->second.find(key);
    return k == s->second.end() ? fallback : k->second;
}

double ConfigMap::get_double(const std::string& section, const std::string& key,
                             double fallback) const {
    if (!has(section, key)) return fallback;
    const std::string v = get_string(section, key, "");
    try {
        std::size_t pos = 0;
        const double d = std::stod(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return d;
    } catch (const std::exception&) {
        throw ConfigError("[" + section + "] " + key + ": not a number: " + v);
    }
}

long ConfigMap::get_long(const std::string& section, const std::string& key,
                         long fallback) const {
    if (!has(section, key)) return fallback;
    const std::string v = get_string(section, key, "");
    try {
        std::size_t pos = 0;
        const long l = std::stol(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return l;
    } catch (const std::exception&) {
        throw ConfigError("[" + section + "] " + key + ": not an integer: " + v);
    }
}

bool ConfigMap::get_bool(const std::string& section, const std::string& key,
                         bool fallback) const {
    if (!has(section, key)) return fallback;
    std::string v = get_string(section, key, "");
    std::transform(v.begin(), v.end(), v.begin(),
                   [](unsigned char c) { return std::tolower(c); });
    if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
    if (v == "false" || v == "0" || v == "no" || v == "off") return false;
    throw ConfigError("[" + section + "] " + key + ": not a boolean: " + v);
}

std::vector<double> ConfigMap::get_list(const std::string& section,
                                        const std::string& key) const {
    std::vector<double> out;
    if (!has(section, key)) return out;
    std::istringstream in(get_string(section, key, ""));
    std::string item;
    while (std::getline(in, item, ',')) {
        item = trim(item);
        if (item.empty()) continue;
        try {
            out.push_back(std::stod(item));
        } catch (const std::exception&) {
            throw ConfigError("[" + section + "] " + key +
                              ": bad list element: " + item);
        }
    }
    return out;
}

std::string ConfigMap::canonical_text() const {
    std::ostringstream out;
    for (const auto& [sec, kv] : sections_) {
        out << '[' << sec << "]\n";
        for (const auto& [k, v] : kv) out << k << " = " << v << '\n';
    }
    return out.str();
}

std::string fingerprint(const std::string& text) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : text) {
        h ^= c;
        h *= 1099511628211ull;
    }
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx",
                  static_cast<unsigned long long>(h));
    return buf;
}

void ExperimentConfig::validate() const {
    controller.tpc.validate(SignalLayout::inverter());
    scenario.schedule.validate();
    if (scenario.duration < 0) throw ConfigError("scenario duration must be >= 0");
    if (training.excitation.length < controller.tpc.rho + controller.tpc.tau + 1)
        throw ConfigError("training length too short for the horizons");
    if (training.excitation.amplitude <= 0)
        throw ConfigError("excitation amplitude must be positive");
    if (rates.substeps_per_tick < 1)
        throw ConfigError("substeps_per_tick must be >= 1");
    if (controller.kind == ControllerKind::deepc && controller.deepc_gamma < 0)
        throw ConfigError("deepc gamma must be >= 0");
}

ExperimentConfig ExperimentConfig::from_map(const ConfigMap& map) {
    ExperimentConfig cfg;
    cfg.source_text = map.canonical_text();

    // [plant]
    cfg.plant.dt = map.get_double("plant", "dt", cfg.plant.dt);
    cfg.plant.current_lag_tau =
        map.get_double("plant", "current_lag_tau", cfg.plant.current_lag_tau);
    const std::string grid = map.get_string("plant", "grid", "infinite_bus");
    if (grid == "infinite_bus") cfg.plant.grid.mode = GridSpec::Mode::infinite_bus;
    else if (grid == "thevenin") cfg.plant.grid.mode = GridSpec::Mode::thevenin;
    else throw ConfigError("[plant] grid: unknown mode: " + grid);
    cfg.plant.grid.v_d = map.get_double("plant", "v_d", cfg.plant.grid.v_d);
    cfg.plant.grid.v_q = map.get_double("plant", "v_q", cfg.plant.grid.v_q);
    cfg.plant.grid.R = map.get_double("plant", "R", cfg.plant.grid.R);
    cfg.plant.grid.X = map.get_double("plant", "X", cfg.plant.grid.X);
    cfg.plant.grid.drift_amplitude =
        map.get_double("plant", "drift_amplitude", 0.0);
    cfg.plant.grid.drift_period =
        map.get_double("plant", "drift_period", cfg.plant.grid.drift_period);
    if (map.has("plant", "current_saturation"))
        cfg.plant.nonlin.current_saturation =
            map.get_double("plant", "current_saturation", 0.0);
    if (map.has("plant", "deadzone"))
        cfg.plant.nonlin.deadzone = map.get_double("plant", "deadzone", 0.0);
    if (map.has("plant", "noise_std")) {
        const auto ns = map.get_list("plant", "noise_std");
        if (ns.size() != 4)
            throw ConfigError("[plant] noise_std needs 4 comma-separated values");
        for (int i = 0; i < 4; ++i) cfg.plant.noise_std(i) = ns[i];
    }
    cfg.plant.noise_seed = static_cast<std::uint64_t>(
        map.get_long("plant", "noise_seed", 0));

    // [controller]
    const std::string kind = map.get_string("controller", "kind", "tpc");
    if (kind == "tpc") cfg.controller.kind = ControllerKind::tpc;
    else if (kind == "deepc") cfg.controller.kind = ControllerKind::deepc;
    else throw ConfigError("[controller] kind: unknown: " + kind);
    TpcConfig& t = cfg.controller.tpc;
    t.rho = static_cast<int>(map.get_long("controller", "rho", t.rho));
    t.tau = static_cast<int>(map.get_long("controller", "tau", t.tau));
    if (map.has("controller", "ly_weights")) {
        const auto w = map.get_list("controller", "ly_weights");
        t.Ly_weights = Eigen::Map<const Eigen::VectorXd>(
            w.data(), static_cast<long>(w.size()));
    }
    if (map.has("controller", "lu_weights")) {
        const auto w = map.get_list("controller", "lu_weights");
        t.Lu_weights = Eigen::Map<const Eigen::VectorXd>(
            w.data(), static_cast<long>(w.size()));
    }
    if (map.has("controller", "current_limit"))
        t.current_limit = map.get_double("controller", "current_limit", 0.0);
    if (map.has("controller", "input_box")) {
        const double b = map.get_double("controller", "input_box", 0.0);
        if (b <= 0) throw ConfigError("[controller] input_box must be positive");
        BoxBounds box;
        box.lower = Eigen::VectorXd::Constant(t.Lu_weights.size(), -b);
        box.upper = Eigen::VectorXd::Constant(t.Lu_weights.size(), b);
        t.input_box = box;
    }
    const std::string reg =
        map.get_string("controller", "regularization", "none");
    if (reg == "none") t.reg.kind = RegularizationConfig::Kind::none;
    else if (reg == "input_quadratic")
        t.reg.kind = RegularizationConfig::Kind::input_quadratic;
    else throw ConfigError("[controller] regularization: unknown: " + reg);
    t.reg.weight = map.get_double("controller", "regularization_weight", 0.0);
    t.solver_tol = map.get_double("controller", "solver_tol", t.solver_tol);
    t.solver_max_iter = static_cast<int>(
        map.get_long("controller", "solver_max_iter", t.solver_max_iter));
    cfg.controller.deepc_gamma =
        map.get_double("controller", "deepc_gamma", cfg.controller.deepc_gamma);

    // [training]
    cfg.training.excitation.length = map.get_long(
        "training", "length", cfg.training.excitation.length);
    cfg.training.excitation.amplitude = map.get_double(
        "training", "amplitude", cfg.training.excitation.amplitude);
    cfg.training.seed =
        static_cast<std::uint64_t>(map.get_long("training", "seed", 1));
    cfg.training.closed_loop = map.get_bool("training", "closed_loop", false);
    cfg.rates.substeps_per_tick = static_cast<int>(map.get_long(
        "training", "substeps_per_tick", cfg.rates.substeps_per_tick));

    // [scenario]
    cfg.scenario.duration =
        map.get_double("scenario", "duration", cfg.scenario.duration);
    if (map.has("scenario", "references")) {
        cfg.scenario.schedule.points.clear();
        std::istringstream in(map.get_string("scenario", "references", ""));
        std::string triple;
        while (std::getline(in, triple, ',')) {
            triple = trim(triple);
            if (triple.empty()) continue;
            std::istringstream ts(triple);
            ReferencePoint p;
            char c1 = 0, c2 = 0;
            if (!(ts >> p.time >> c1 >> p.P_r >> c2 >> p.Q_r) || c1 != ':' ||
                c2 != ':')
                throw ConfigError(
                    "[scenario] references: expected time:P:Q, got " + triple);
            cfg.scenario.schedule.points.push_back(p);
        }
    }

    // [output]
    cfg.output.directory =
        map.get_string("output", "directory", cfg.output.directory);
    cfg.output.plots = map.get_bool("output", "plots", cfg.output.plots);

    cfg.validate();
    return cfg;
}

ExperimentConfig ExperimentConfig::from_file(const std::string& path) {
    return from_map(ConfigMap::parse_file(path));
}

namespace {

const char* kFig3 = R"(# Active-power step on a stiff grid, no constraints.
[plant]
grid = infinite_bus
dt = 0.0002
current_lag_tau = 0.002

[controller]
kind = tpc
rho = 6
tau = 6
ly_weights = 450000, 450000, 0, 0
lu_weights = 0.001, 0.001

[training]
length = 500
amplitude = 0.2
seed = 1
substeps_per_tick = 50

[scenario]
duration = 1.5
references = 0:0:0, 0.5:0.3:0

[output]
directory = out/fig3
)";

const char* kFig3Constrained = R"(# Same step with a 0.2 p.u. current limit engaged.
[plant]
grid = infinite_bus
dt = 0.0002
current_lag_tau = 0.002

[controller]
kind = tpc
rho = 6
tau = 6
ly_weights = 450000, 450000, 0, 0
lu_weights = 0.001, 0.001
current_limit = 0.2

[training]
length = 500
amplitude = 0.2
seed = 1
substeps_per_tick = 50

[scenario]
duration = 1.5
references = 0:0:0, 0.5:0.3:0

[output]
directory = out/fig3_constrained
)";

const char* kFig5 = R"(# Large P step against a non-stiff (thevenin) grid.
[plant]
grid = thevenin
R = 0.02
X = 0.06
dt = 0.0002
current_lag_tau = 0.002

[controller]
kind = tpc
rho = 6
tau = 6
ly_weights = 450000, 450000, 0, 0
lu_weights = 0.001, 0.001

[training]
length = 500
amplitude = 0.2
seed = 1
substeps_per_tick = 50

[scenario]
duration = 2.0
references = 0:0:0.1, 0.5:0.8:0.1

[output]
directory = out/fig5
)";

const char* kFig6 = R"(# Simultaneous P and Q steps with slow bus-voltage drift.
[plant]
grid = thevenin
R = 0.02
X = 0.06
drift_amplitude = 0.02
drift_period = 10
dt = 0.0002
current_lag_tau = 0.002

[controller]
kind = tpc
rho = 6
tau = 6
ly_weights = 450000, 450000, 0, 0
lu_weights = 0.001, 0.001

[training]
length = 500
amplitude = 0.2
seed = 1
substeps_per_tick = 50

[scenario]
duration = 2.0
references = 0:0:0.1, 0.5:0.8:0.4

[output]
directory = out/fig6
)";

const char* kTable1 = R"(# Solve-time and memory scaling sweep over training-set sizes.
[plant]
grid = infinite_bus
dt = 0.0002
current_lag_tau = 0.002

[controller]
kind = tpc
rho = 6
tau = 6
ly_weights = 450000, 450000, 0, 0
lu_weights = 0.001, 0.001
current_limit = 0.5

[training]
length = 500
amplitude = 0.2
seed = 1
substeps_per_tick = 50

[scenario]
duration = 1.0
references = 0:0:0, 0.3:0.3:0.1

[bench]
n_list = 100, 500, 1000, 5000
ticks = 40

[output]
directory = out/table1
)";

}  // namespace

std::string preset_text(const std::string& name) {
    if (name == "fig3") return kFig3;
    if (name == "fig3_constrained") return kFig3Constrained;
    if (name == "fig5") return kFig5;
    if (name == "fig6") return kFig6;
    if (name == "table1") return kTable1;
    throw ConfigError("unknown preset: " + name);
}

std::vector<std::string> preset_names() {
    return {"fig3", "fig3_constrained", "fig5", "fig6", "table1"};
}

ExperimentConfig make_preset(const std::string& name) {
    return ExperimentConfig::from_map(ConfigMap::parse_text(preset_text(name)));
}

}  // namespace tpc
