#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "dce/array_model.hpp"
#include "dce/dpm.hpp"
#include "dce/network.hpp"

namespace dce::cfg {

enum class SweepAxis { snr_db, samples };

// How a dB level on the sweep axis maps to per-source power:
//   power_db:     power = noise_var * 10^(snr/10)
//   amplitude_db: power = noise_var * 10^(snr/20)
enum class SourceLevel { power_db, amplitude_db };

enum class CurveKind {
    mc_dpm,
    analytical_dpm,
    mc_desprit,
    analytical_desprit,
    mc_centralized_esprit,
    analytical_centralized_esprit,
};

enum class RunMode { emulated, full };

std::string to_string(CurveKind k);

struct OutputSpec {
    std::string path = "results";
    bool csv = true;
    bool json = false;
};

struct ExperimentConfig {
    // geometry
    std::vector<array::Subarray> subarrays;
    double spacing = 1.0;
    // topology (0-based internally; 1-based in the YAML file)
    std::vector<std::vector<int>> neighbors;
    // scenario
    Eigen::VectorXd doas_deg;
    double noise_var = 1.0;
    SourceLevel source_level = SourceLevel::power_db;
    // sweep
    SweepAxis sweep = SweepAxis::snr_db;
    std::vector<double> sweep_values;
    int fixed_samples = 100;
    double fixed_snr_db = 10.0;
    // algorithm settings
    std::vector<int> p_values;
    dpm::DpmConfig dpm;
    std::vector<CurveKind> curves;
    int trials = 200;
    std::uint64_t base_seed = 1;
    RunMode mode = RunMode::emulated;
    int threads = 0;  // 0 = library default
    OutputSpec output;

    array::ArrayGeometry make_geometry() const;
    net::Topology make_topology() const;
    double source_power(double snr_db) const;
    void validate() const;
};

ExperimentConfig load_config(const std::string& path);
ExperimentConfig parse_config(const std::string& yaml_text, const std::string& origin = "<inline>");

// Built-in experiment presets; names: fig2, fig3, fig4, fig5.
const std::string& preset_text(const std::string& name);
std::vector<std::string> preset_names();

} // namespace dce::cfg
