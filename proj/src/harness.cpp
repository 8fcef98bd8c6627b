#include "dce/harness.hpp"

#include <cmath>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>

#include <json.hpp>

#include "dce/esprit.hpp"
#include "dce/esprit_mse.hpp"
#include "dce/perf_analysis.hpp"
#include "dce/rng.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace dce::harness {

using cfg::CurveKind;
using cfg::ExperimentConfig;

Eigen::VectorXcd align_eigenvector(const Eigen::VectorXcd& est, const Eigen::VectorXcd& ref) {
    if (std::abs(est.norm() - 1.0) > 1e-6 || std::abs(ref.norm() - 1.0) > 1e-6)
        throw ConfigError("align_eigenvector: inputs must be unit norm");
    const std::complex<double> g = ref.dot(est);  // ref^H est
    if (std::abs(g) < 1e-12)
        throw NumericalError("align_eigenvector: estimate orthogonal to reference");
    return est * (std::conj(g) / std::abs(g));
}

namespace {

// Per-experiment objects that do not depend on the sweep value.
struct Engine {
    explicit Engine(const ExperimentConfig& c)
        : config(c),
          geom(c.make_geometry()),
          topo(c.make_topology()),
          W(net::build_metropolis_weights(topo)),
          T(topo, geom),
          sel(esprit::build_selection_pair(geom)) {
        L = static_cast<int>(c.doas_deg.size());
        doas_sorted = c.doas_deg;
        std::sort(doas_sorted.data(), doas_sorted.data() + doas_sorted.size());
    }

    const ExperimentConfig& config;
    array::ArrayGeometry geom;
    net::Topology topo;
    net::WeightMatrix W;
    dpm::SelectionMatrix T;
    esprit::SelectionPair sel;
    Eigen::VectorXd doas_sorted;
    int L = 0;

    void require_convergent_weights() const {
        if (!net::check_convergence(W).converges)
            throw NumericalError(
                "weight matrix does not satisfy the consensus convergence condition");
    }

    array::SourceScenario scenario(double snr_db) const {
        return array::SourceScenario::equal_power(config.doas_deg, config.source_power(snr_db),
                                                  config.noise_var);
    }

    // decentralized subspace of one trial
    Eigen::MatrixXcd trial_subspace(const array::SnapshotSet& snaps, int P,
                                    std::uint64_t trial_seed, const Eigen::MatrixXd& taper) const {
        if (config.mode == cfg::RunMode::full) {
            dpm::DpmConfig dc = config.dpm;
            dc.P = P;
            dc.seed = rng::derive_key(trial_seed, rng::kPowerIterationInit);
            return dpm_eigendecomposition(snaps, topo, W, L, dc).assembled;
        }
        const Eigen::MatrixXcd R_hat = array::sample_covariance(snaps);
        // fast path: deflation/normalization consensus and power iteration
        // truncation are taken error-free, matching the analysis assumptions
        return dpm::dpm_centralized_emulation(R_hat, taper, L, config.dpm.Q,
                                              rng::derive_key(trial_seed, rng::kPowerIterationInit),
                                              dpm::EmulationInit::converged);
    }

    double desprit_se_deg2(const Eigen::MatrixXcd& U) const {
        const esprit::DoaEstimate d = esprit::desprit_from_subspace(U, sel, geom.spacing());
        double se = 0.0;
        for (int l = 0; l < L; ++l) {
            const double e = d.doas_deg(l) - doas_sorted(l);
            se += e * e;
        }
        return se / L;
    }
};

using TrialFn = std::function<double(int)>;

double mc_value(const ExperimentConfig& config, int trials, Execution exec, const TrialFn& trial) {
    (void)config;
    std::vector<double> se(static_cast<size_t>(trials), 0.0);
    std::exception_ptr error;
#ifdef _OPENMP
    if (exec == Execution::parallel) {
        const int nt = config.threads > 0 ? config.threads : omp_get_max_threads();
#pragma omp parallel for schedule(dynamic) num_threads(nt)
        for (int t = 0; t < trials; ++t) {
            try {
                se[static_cast<size_t>(t)] = trial(t);
            } catch (...) {
#pragma omp critical
                if (!error) error = std::current_exception();
            }
        }
    } else
#endif
    {
        (void)exec;
        for (int t = 0; t < trials; ++t) se[static_cast<size_t>(t)] = trial(t);
    }
    if (error) std::rethrow_exception(error);
    double acc = 0.0;
    for (double v : se) acc += v;  // fixed index order
    return std::sqrt(acc / trials);
}

std::uint64_t trial_seed_of(const ExperimentConfig& config, int t) {
    return rng::derive_key(config.base_seed, rng::kTrialDerivation, static_cast<std::uint64_t>(t));
}

double dpm_point(const Engine& eng, double snr_db, int N, int P, Execution exec) {
    eng.require_convergent_weights();
    const array::SourceScenario scen = eng.scenario(snr_db);
    const Eigen::MatrixXcd R = array::true_covariance(eng.geom, scen);
    const array::EigenPairs eig = array::eig_hermitian(R);
    const Eigen::MatrixXcd Us = eig.vectors.leftCols(eng.L);
    const Eigen::MatrixXd taper = dpm::consensus_taper(eng.T, eng.W, P);
    return mc_value(eng.config, eng.config.trials, exec, [&](int t) {
        const std::uint64_t seed = trial_seed_of(eng.config, t);
        const array::SnapshotSet snaps = array::generate_snapshots(eng.geom, scen, N, seed);
        const Eigen::MatrixXcd U = eng.trial_subspace(snaps, P, seed, taper);
        double se = 0.0;
        for (int l = 0; l < eng.L; ++l)
            se += (align_eigenvector(U.col(l), Us.col(l)) - Us.col(l)).squaredNorm();
        return se / eng.L;
    });
}

double desprit_point(const Engine& eng, double snr_db, int N, int P, Execution exec) {
    eng.require_convergent_weights();
    const array::SourceScenario scen = eng.scenario(snr_db);
    const Eigen::MatrixXd taper = dpm::consensus_taper(eng.T, eng.W, P);
    return mc_value(eng.config, eng.config.trials, exec, [&](int t) {
        const std::uint64_t seed = trial_seed_of(eng.config, t);
        const array::SnapshotSet snaps = array::generate_snapshots(eng.geom, scen, N, seed);
        if (eng.config.mode == cfg::RunMode::full) {
            dpm::DpmConfig dc = eng.config.dpm;
            dc.P = P;
            dc.seed = rng::derive_key(seed, rng::kPowerIterationInit);
            const auto ests = esprit::desprit(snaps, eng.topo, eng.W, eng.geom, eng.L, dc,
                                              esprit::DespritMode::a3_shortcut);
            double se = 0.0;
            for (int l = 0; l < eng.L; ++l) {
                const double e = ests.front().doas_deg(l) - eng.doas_sorted(l);
                se += e * e;
            }
            return se / eng.L;
        }
        const Eigen::MatrixXcd U = eng.trial_subspace(snaps, P, seed, taper);
        return eng.desprit_se_deg2(U);
    });
}

double centralized_esprit_point(const Engine& eng, double snr_db, int N, Execution exec) {
    const array::SourceScenario scen = eng.scenario(snr_db);
    return mc_value(eng.config, eng.config.trials, exec, [&](int t) {
        const std::uint64_t seed = trial_seed_of(eng.config, t);
        const array::SnapshotSet snaps = array::generate_snapshots(eng.geom, scen, N, seed);
        const auto d =
            esprit::centralized_esprit(array::sample_covariance(snaps), eng.geom, eng.L);
        double se = 0.0;
        for (int l = 0; l < eng.L; ++l) {
            const double e = d.doas_deg(l) - eng.doas_sorted(l);
            se += e * e;
        }
        return se / eng.L;
    });
}

perf::AnalysisInputs analysis_inputs(const Engine& eng, double snr_db, int N, int P) {
    const array::SourceScenario scen = eng.scenario(snr_db);
    const Eigen::MatrixXcd R = array::true_covariance(eng.geom, scen);
    return perf::AnalysisInputs(array::eig_hermitian(R), R, eng.W.spectrum(), eng.T, N, P);
}

esprit_mse::EspritAnalysisContext esprit_context(const Engine& eng, double snr_db, int N, int P) {
    return esprit_mse::EspritAnalysisContext(eng.geom, eng.scenario(snr_db), eng.W, eng.T, N, P);
}

net::AcAccounting point_accounting(const Engine& eng, CurveKind kind, int N, int P, int trials) {
    net::AcAccounting a;
    if (kind != CurveKind::mc_dpm && kind != CurveKind::mc_desprit) return a;
    dpm::DpmConfig dc = eng.config.dpm;
    dc.P = P;
    net::AcAccounting one = dpm::dpm_accounting(eng.L, N, dc, eng.W.edge_count());
    if (kind == CurveKind::mc_desprit) {
        const std::uint64_t inst = 2ull * eng.L * eng.L;
        one.instances += inst;
        one.iterations += inst * static_cast<std::uint64_t>(dc.P3);
        one.messages += inst * static_cast<std::uint64_t>(dc.P3) * 2ull * eng.W.edge_count();
    }
    for (int t = 0; t < trials; ++t) a += one;
    return a;
}

} // namespace

std::vector<CurvePoint> run_experiment(const ExperimentConfig& config, Execution exec) {
    config.validate();
    const Engine eng(config);
    const bool snr_axis = config.sweep == cfg::SweepAxis::snr_db;
    const std::string sweep_name = snr_axis ? "snr_db" : "samples";

    std::vector<CurvePoint> out;
    for (CurveKind kind : config.curves) {
        const bool centralized = kind == CurveKind::mc_centralized_esprit ||
                                 kind == CurveKind::analytical_centralized_esprit;
        const std::vector<int> ps = centralized ? std::vector<int>{-1} : config.p_values;
        for (int P : ps) {
            for (double sv : config.sweep_values) {
                const double snr_db = snr_axis ? sv : config.fixed_snr_db;
                const int N = snr_axis ? config.fixed_samples : static_cast<int>(sv);
                CurvePoint pt;
                pt.sweep_name = sweep_name;
                pt.sweep_value = sv;
                pt.P = P;
                pt.kind = kind;
                switch (kind) {
                    case CurveKind::mc_dpm:
                        pt.value = dpm_point(eng, snr_db, N, P, exec);
                        pt.trials_used = config.trials;
                        break;
                    case CurveKind::analytical_dpm:
                        pt.value = perf::armse_dpm(analysis_inputs(eng, snr_db, N, P), eng.L);
                        break;
                    case CurveKind::mc_desprit:
                        pt.value = desprit_point(eng, snr_db, N, P, exec);
                        pt.trials_used = config.trials;
                        break;
                    case CurveKind::analytical_desprit:
                        pt.value = esprit_mse::armse_desprit(esprit_context(eng, snr_db, N, P));
                        break;
                    case CurveKind::mc_centralized_esprit:
                        pt.value = centralized_esprit_point(eng, snr_db, N, exec);
                        pt.trials_used = config.trials;
                        break;
                    case CurveKind::analytical_centralized_esprit:
                        pt.value = esprit_mse::armse_desprit(
                            esprit_context(eng, snr_db, N, 0).centralized_limit());
                        break;
                }
                pt.ac = point_accounting(eng, kind, N, P, config.trials);
                out.push_back(std::move(pt));
            }
        }
    }
    return out;
}

std::string to_csv(const std::vector<CurvePoint>& points) {
    std::ostringstream s;
    s << "sweep,sweep_value,P,curve,value,trials,ac_instances,ac_iterations_total,ac_messages\n";
    char buf[256];
    for (const auto& p : points) {
        std::snprintf(buf, sizeof buf, "%s,%.10g,%d,%s,%.10g,%d,%llu,%llu,%llu\n",
                      p.sweep_name.c_str(), p.sweep_value, p.P, cfg::to_string(p.kind).c_str(),
                      p.value, p.trials_used,
                      static_cast<unsigned long long>(p.ac.instances),
                      static_cast<unsigned long long>(p.ac.iterations),
                      static_cast<unsigned long long>(p.ac.messages));
        s << buf;
    }
    return s.str();
}

std::string to_json_manifest(const ExperimentConfig& config, const std::vector<CurvePoint>& points) {
    nlohmann::ordered_json j;
    j["config"]["sweep"] = config.sweep == cfg::SweepAxis::snr_db ? "snr_db" : "samples";
    j["config"]["sweep_values"] = config.sweep_values;
    j["config"]["fixed_samples"] = config.fixed_samples;
    j["config"]["fixed_snr_db"] = config.fixed_snr_db;
    j["config"]["p_values"] = config.p_values;
    j["config"]["trials"] = config.trials;
    j["config"]["base_seed"] = config.base_seed;
    j["config"]["mode"] = config.mode == cfg::RunMode::emulated ? "emulated" : "full";
    j["config"]["source_level"] =
        config.source_level == cfg::SourceLevel::power_db ? "power_db" : "amplitude_db";
    j["config"]["dpm"] = {{"p1", config.dpm.P1},
                          {"p2", config.dpm.P2},
                          {"p3", config.dpm.P3},
                          {"q", config.dpm.Q}};
    std::vector<std::string> kinds;
    for (auto k : config.curves) kinds.push_back(cfg::to_string(k));
    j["config"]["curves"] = kinds;
    j["config_hash"] = std::hash<std::string>{}(to_csv(points) + std::to_string(config.base_seed));
    nlohmann::ordered_json rows = nlohmann::ordered_json::array();
    for (const auto& p : points) {
        rows.push_back({{"sweep", p.sweep_name},
                        {"sweep_value", p.sweep_value},
                        {"P", p.P},
                        {"curve", cfg::to_string(p.kind)},
                        {"value", p.value},
                        {"trials", p.trials_used},
                        {"ac_instances", p.ac.instances},
                        {"ac_iterations_total", p.ac.iterations},
                        {"ac_messages", p.ac.messages}});
    }
    j["points"] = rows;
    return j.dump(2) + "\n";
}

void write_outputs(const ExperimentConfig& config, const std::vector<CurvePoint>& points) {
    const std::filesystem::path base(config.output.path);
    if (base.has_parent_path()) std::filesystem::create_directories(base.parent_path());
    if (config.output.csv) {
        std::ofstream f(base.string() + ".csv", std::ios::binary);
        if (!f) throw ConfigError("cannot write " + base.string() + ".csv");
        f << to_csv(points);
    }
    if (config.output.json) {
        std::ofstream f(base.string() + ".json", std::ios::binary);
        if (!f) throw ConfigError("cannot write " + base.string() + ".json");
        f << to_json_manifest(config, points);
    }
}

double rmse_dpm_mc(const ExperimentConfig& config, double snr_db, int N, int P, Execution exec,
                   net::AcAccounting* acc) {
    const Engine eng(config);
    if (acc) *acc += point_accounting(eng, CurveKind::mc_dpm, N, P, config.trials);
    return dpm_point(eng, snr_db, N, P, exec);
}

double rmse_desprit_mc(const ExperimentConfig& config, double snr_db, int N, int P, Execution exec,
                       net::AcAccounting* acc) {
    const Engine eng(config);
    if (acc) *acc += point_accounting(eng, CurveKind::mc_desprit, N, P, config.trials);
    return desprit_point(eng, snr_db, N, P, exec);
}

double rmse_centralized_esprit_mc(const ExperimentConfig& config, double snr_db, int N,
                                  Execution exec) {
    const Engine eng(config);
    return centralized_esprit_point(eng, snr_db, N, exec);
}

} // namespace dce::harness
