#pragma once

#include <string>
#include <vector>

#include "dce/config.hpp"
#include "dce/network.hpp"

namespace dce::harness {

// Multiplies `est` by the unit-modulus scalar minimizing ||est c - ref||.
Eigen::VectorXcd align_eigenvector(const Eigen::VectorXcd& est, const Eigen::VectorXcd& ref);

struct CurvePoint {
    std::string sweep_name;
    double sweep_value = 0.0;
    int P = -1;  // -1 for centralized curves
    cfg::CurveKind kind = cfg::CurveKind::mc_dpm;
    double value = 0.0;
    int trials_used = 0;
    net::AcAccounting ac;
};

enum class Execution { serial, parallel };

// Runs every configured curve over the sweep grid. Deterministic for a
// fixed config: per-trial seeds are split from (base_seed, trial_index) and
// aggregation sums in fixed index order, so the execution policy and thread
// count never change the output.
std::vector<CurvePoint> run_experiment(const cfg::ExperimentConfig& config,
                                       Execution exec = Execution::parallel);

std::string to_csv(const std::vector<CurvePoint>& points);
std::string to_json_manifest(const cfg::ExperimentConfig& config,
                             const std::vector<CurvePoint>& points);

// Writes <path>.csv / <path>.json according to the output spec.
void write_outputs(const cfg::ExperimentConfig& config, const std::vector<CurvePoint>& points);

// Single-point Monte Carlo entry points used by the sweeps and the tests.
double rmse_dpm_mc(const cfg::ExperimentConfig& config, double snr_db, int N, int P,
                   Execution exec = Execution::parallel, net::AcAccounting* acc = nullptr);
double rmse_desprit_mc(const cfg::ExperimentConfig& config, double snr_db, int N, int P,
                       Execution exec = Execution::parallel, net::AcAccounting* acc = nullptr);
double rmse_centralized_esprit_mc(const cfg::ExperimentConfig& config, double snr_db, int N,
                                  Execution exec = Execution::parallel);

} // namespace dce::harness
