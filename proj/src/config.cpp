#include "dce/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include <yaml-cpp/yaml.h>

namespace dce::cfg {

std::string to_string(CurveKind k) {
    switch (k) {
        case CurveKind::mc_dpm: return "mc_dpm";
        case CurveKind::analytical_dpm: return "analytical_dpm";
        case CurveKind::mc_desprit: return "mc_desprit";
        case CurveKind::analytical_desprit: return "analytical_desprit";
        case CurveKind::mc_centralized_esprit: return "mc_centralized_esprit";
        case CurveKind::analytical_centralized_esprit: return "analytical_centralized_esprit";
    }
    return "?";
}

namespace {

CurveKind curve_kind_from(const std::string& s, const std::string& where) {
    static const std::map<std::string, CurveKind> table = {
        {"mc_dpm", CurveKind::mc_dpm},
        {"analytical_dpm", CurveKind::analytical_dpm},
        {"mc_desprit", CurveKind::mc_desprit},
        {"analytical_desprit", CurveKind::analytical_desprit},
        {"mc_centralized_esprit", CurveKind::mc_centralized_esprit},
        {"analytical_centralized_esprit", CurveKind::analytical_centralized_esprit},
    };
    const auto it = table.find(s);
    if (it == table.end()) throw ConfigError(where + ": unknown curve kind '" + s + "'");
    return it->second;
}

const YAML::Node require(const YAML::Node& n, const std::string& key, const std::string& path) {
    const YAML::Node c = n[key];
    if (!c) throw ConfigError(path + "." + key + ": missing");
    return c;
}

template <typename T>
T as(const YAML::Node& n, const std::string& path) {
    try {
        return n.as<T>();
    } catch (const YAML::Exception&) {
        throw ConfigError(path + ": cannot parse value");
    }
}

} // namespace

array::ArrayGeometry ExperimentConfig::make_geometry() const {
    return array::ArrayGeometry(subarrays, spacing);
}

net::Topology ExperimentConfig::make_topology() const { return net::Topology(neighbors); }

double ExperimentConfig::source_power(double snr_db) const {
    const double e = (source_level == SourceLevel::power_db) ? 10.0 : 20.0;
    return noise_var * std::pow(10.0, snr_db / e);
}

void ExperimentConfig::validate() const {
    const auto geom = make_geometry();
    const auto topo = make_topology();
    if (topo.node_count() != geom.subarray_count())
        throw ConfigError("topology.neighbors: node count differs from geometry.subarrays");
    if (doas_deg.size() < 1) throw ConfigError("scenario.doas_deg: at least one source required");
    if (doas_deg.size() >= geom.total_sensors())
        throw ConfigError("scenario.doas_deg: needs fewer sources than sensors");
    array::SourceScenario::equal_power(doas_deg, 1.0, noise_var);  // field validation
    if (sweep_values.empty()) throw ConfigError("sweep.values: empty");
    if (sweep == SweepAxis::samples)
        for (double v : sweep_values)
            if (v < 1.0 || v != std::floor(v))
                throw ConfigError("sweep.values: sample counts must be positive integers");
    if (fixed_samples < 1) throw ConfigError("fixed.samples: must be >= 1");
    if (trials < 1) throw ConfigError("trials: must be >= 1");
    if (curves.empty()) throw ConfigError("curves: empty");
    const bool needs_p =
        std::any_of(curves.begin(), curves.end(), [](CurveKind k) {
            return k != CurveKind::mc_centralized_esprit &&
                   k != CurveKind::analytical_centralized_esprit;
        });
    if (needs_p && p_values.empty()) throw ConfigError("p_values: required by the selected curves");
    for (int p : p_values)
        if (p < 0) throw ConfigError("p_values: must be non-negative");
    dpm.validate();
    if (threads < 0) throw ConfigError("threads: must be >= 0");
}

ExperimentConfig parse_config(const std::string& yaml_text, const std::string& origin) {
    YAML::Node root;
    try {
        root = YAML::Load(yaml_text);
    } catch (const YAML::Exception& e) {
        throw ConfigError(origin + ": YAML parse error: " + e.what());
    }
    ExperimentConfig c;

    const YAML::Node geom = require(root, "geometry", origin);
    c.spacing = as<double>(require(geom, "spacing", origin + ".geometry"), origin + ".geometry.spacing");
    const YAML::Node subs = require(geom, "subarrays", origin + ".geometry");
    if (!subs.IsSequence()) throw ConfigError(origin + ".geometry.subarrays: expected a list");
    for (size_t i = 0; i < subs.size(); ++i) {
        const std::string p = origin + ".geometry.subarrays[" + std::to_string(i) + "]";
        array::Subarray s;
        const YAML::Node xi = require(subs[i], "xi", p);
        if (!xi.IsSequence() || xi.size() != 2) throw ConfigError(p + ".xi: expected [x, y]");
        s.xi << as<double>(xi[0], p + ".xi[0]"), as<double>(xi[1], p + ".xi[1]");
        s.sensors = as<int>(require(subs[i], "sensors", p), p + ".sensors");
        c.subarrays.push_back(s);
    }

    const YAML::Node topo = require(root, "topology", origin);
    const YAML::Node nb = require(topo, "neighbors", origin + ".topology");
    if (!nb.IsSequence()) throw ConfigError(origin + ".topology.neighbors: expected a list of lists");
    for (size_t i = 0; i < nb.size(); ++i) {
        const std::string p = origin + ".topology.neighbors[" + std::to_string(i) + "]";
        std::vector<int> row;
        for (size_t j = 0; j < nb[i].size(); ++j) {
            const int v = as<int>(nb[i][j], p);
            if (v < 1) throw ConfigError(p + ": node indices are 1-based");
            row.push_back(v - 1);
        }
        c.neighbors.push_back(std::move(row));
    }

    const YAML::Node scen = require(root, "scenario", origin);
    const YAML::Node doas = require(scen, "doas_deg", origin + ".scenario");
    c.doas_deg.resize(static_cast<int>(doas.size()));
    for (size_t i = 0; i < doas.size(); ++i)
        c.doas_deg(static_cast<int>(i)) = as<double>(doas[i], origin + ".scenario.doas_deg");
    c.noise_var = as<double>(require(scen, "noise_var", origin + ".scenario"),
                             origin + ".scenario.noise_var");
    if (scen["source_level"]) {
        const std::string s = as<std::string>(scen["source_level"], origin + ".scenario.source_level");
        if (s == "power_db")
            c.source_level = SourceLevel::power_db;
        else if (s == "amplitude_db")
            c.source_level = SourceLevel::amplitude_db;
        else
            throw ConfigError(origin + ".scenario.source_level: expected power_db or amplitude_db");
    }

    const YAML::Node sweep = require(root, "sweep", origin);
    const std::string axis = as<std::string>(require(sweep, "type", origin + ".sweep"),
                                             origin + ".sweep.type");
    if (axis == "snr_db")
        c.sweep = SweepAxis::snr_db;
    else if (axis == "samples")
        c.sweep = SweepAxis::samples;
    else
        throw ConfigError(origin + ".sweep.type: expected snr_db or samples");
    for (const auto& v : require(sweep, "values", origin + ".sweep"))
        c.sweep_values.push_back(as<double>(v, origin + ".sweep.values"));

    if (root["fixed"]) {
        if (root["fixed"]["samples"])
            c.fixed_samples = as<int>(root["fixed"]["samples"], origin + ".fixed.samples");
        if (root["fixed"]["snr_db"])
            c.fixed_snr_db = as<double>(root["fixed"]["snr_db"], origin + ".fixed.snr_db");
    }

    if (root["p_values"])
        for (const auto& v : root["p_values"]) c.p_values.push_back(as<int>(v, origin + ".p_values"));

    if (root["dpm"]) {
        const YAML::Node d = root["dpm"];
        if (d["p1"]) c.dpm.P1 = as<int>(d["p1"], origin + ".dpm.p1");
        if (d["p2"]) c.dpm.P2 = as<int>(d["p2"], origin + ".dpm.p2");
        if (d["p3"]) c.dpm.P3 = as<int>(d["p3"], origin + ".dpm.p3");
        if (d["q"]) c.dpm.Q = as<int>(d["q"], origin + ".dpm.q");
    }

    for (const auto& v : require(root, "curves", origin))
        c.curves.push_back(curve_kind_from(as<std::string>(v, origin + ".curves"), origin + ".curves"));

    if (root["trials"]) c.trials = as<int>(root["trials"], origin + ".trials");
    if (root["base_seed"]) c.base_seed = as<std::uint64_t>(root["base_seed"], origin + ".base_seed");
    if (root["mode"]) {
        const std::string m = as<std::string>(root["mode"], origin + ".mode");
        if (m == "emulated")
            c.mode = RunMode::emulated;
        else if (m == "full")
            c.mode = RunMode::full;
        else
            throw ConfigError(origin + ".mode: expected emulated or full");
    }
    if (root["threads"]) c.threads = as<int>(root["threads"], origin + ".threads");
    if (root["output"]) {
        const YAML::Node o = root["output"];
        if (o["path"]) c.output.path = as<std::string>(o["path"], origin + ".output.path");
        if (o["formats"]) {
            c.output.csv = false;
            c.output.json = false;
            for (const auto& fmt : o["formats"]) {
                const std::string f = as<std::string>(fmt, origin + ".output.formats");
                if (f == "csv")
                    c.output.csv = true;
                else if (f == "json")
                    c.output.json = true;
                else
                    throw ConfigError(origin + ".output.formats: expected csv or json");
            }
        }
    }

    c.validate();
    return c;
}

ExperimentConfig load_config(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw ConfigError("cannot open config file " + path);
    std::stringstream ss;
    ss << f.rdbuf();
    return parse_config(ss.str(), path);
}

namespace {

const char* kSharedScene = R"yaml(geometry:
  spacing: 1.0
  subarrays:
    - { xi: [0.00, 0.00], sensors: 2 }
    - { xi: [0.45, 0.99], sensors: 2 }
    - { xi: [3.02, 0.45], sensors: 2 }
    - { xi: [5.61, 0.90], sensors: 2 }
    - { xi: [8.03, 1.46], sensors: 2 }
    - { xi: [8.70, 0.50], sensors: 2 }
topology:
  neighbors: [[2, 3], [1, 3], [1, 2, 4], [3, 5, 6], [4, 6], [4, 5]]
scenario:
  doas_deg: [-14, -10, 5]
  noise_var: 1.0
)yaml";

std::string build_preset(const std::string& name) {
    std::ostringstream s;
    s << kSharedScene;
    if (name == "fig2" || name == "fig3") {
        s << "  source_level: amplitude_db\n";
    } else {
        s << "  source_level: power_db\n";
    }
    if (name == "fig2" || name == "fig4") {
        s << "sweep:\n  type: snr_db\n  values: [";
        const int step = (name == "fig2") ? 2 : 5;
        bool first = true;
        for (int v = -30; v <= 70; v += step) {
            if (!first) s << ", ";
            s << v;
            first = false;
        }
        s << "]\nfixed:\n  samples: 100\n";
    } else {
        s << "sweep:\n  type: samples\n  values: [30, 50, 100, 200, 300, 400, 500, 600, 700, "
             "800, 900, 1000]\nfixed:\n  snr_db: 10\n";
    }
    s << "p_values: [10, 20, 30]\n";
    if (name == "fig2" || name == "fig3") {
        s << "dpm: { p1: 500, p2: 500, p3: 500, q: 10 }\n";
        s << "curves: [mc_dpm, analytical_dpm]\n";
    } else {
        s << "dpm: { p1: 500, p2: 500, p3: 500, q: 2 }\n";
        s << "curves: [mc_desprit, analytical_desprit, mc_centralized_esprit, "
             "analytical_centralized_esprit]\n";
    }
    s << "trials: 200\n";
    s << "base_seed: 20260809\n";
    s << "mode: emulated\n";
    s << "output:\n  path: out/" << name << "\n  formats: [csv, json]\n";
    return s.str();
}

} // namespace

const std::string& preset_text(const std::string& name) {
    static const std::map<std::string, std::string> presets = [] {
        std::map<std::string, std::string> m;
        for (const char* n : {"fig2", "fig3", "fig4", "fig5"}) m[n] = build_preset(n);
        return m;
    }();
    const auto it = presets.find(name);
    if (it == presets.end()) throw ConfigError("unknown preset '" + name + "'");
    return it->second;
}

std::vector<std::string> preset_names() { return {"fig2", "fig3", "fig4", "fig5"}; }

} // namespace dce::cfg
