#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "dce/array_model.hpp"
#include "dce/network.hpp"

namespace dce::dpm {

// M x K zero/one sensor-to-node assignment matrix.
class SelectionMatrix {
  public:
    SelectionMatrix(const net::Topology& topology, const array::ArrayGeometry& geom);

    const Eigen::MatrixXd& entries() const { return entries_; }
    int sensor_count() const { return static_cast<int>(entries_.rows()); }
    int node_count() const { return static_cast<int>(entries_.cols()); }

  private:
    Eigen::MatrixXd entries_;
};

struct DpmConfig {
    int P = 10;    // consensus depth for the per-snapshot scalars
    int P1 = 500;  // consensus depth for projection scalars
    int P2 = 500;  // consensus depth for normalization
    int P3 = 500;  // consensus depth for the per-node Psi assembly
    int Q = 10;    // power iterations
    std::uint64_t seed = 0x5eedULL;

    void validate() const;
};

struct DistributedEigenbasis {
    std::vector<Eigen::MatrixXcd> per_node;  // node k's slice of every eigenvector
    Eigen::MatrixXcd assembled;              // stacked M x L view (simulator-side)
    int P = 0, P1 = 0, P2 = 0, Q = 0;
    net::AcAccounting ac;
};

// K (T W^P T^T), the consensus taper applied entrywise to a covariance.
// Computed from the weight spectrum, so any P >= 0 is cheap and stable.
Eigen::MatrixXd consensus_taper(const SelectionMatrix& T, const net::WeightMatrix& W, int P);

Eigen::MatrixXcd equivalent_covariance(const Eigen::MatrixXcd& R_hat, const SelectionMatrix& T,
                                       const net::WeightMatrix& W, int P);
Eigen::MatrixXcd equivalent_covariance(const Eigen::MatrixXcd& R_hat,
                                       const Eigen::MatrixXd& taper);

// Deterministic unit-norm complex Gaussian start vector for power iteration l.
Eigen::VectorXcd initial_vector(int M, std::uint64_t seed, int l);

// Message-level simulation: every consensus scalar is carried per node, so
// for finite depths different nodes hold different copies. Each power
// iteration spends N consensus instances of depth P on the matrix-vector
// scalars, l-1 of depth P1 on deflation and one of depth P2 on the final
// normalization.
DistributedEigenbasis dpm_eigendecomposition(const array::SnapshotSet& snaps,
                                             const net::Topology& topology,
                                             const net::WeightMatrix& W, int L_vec,
                                             const DpmConfig& cfg);

enum class EmulationInit {
    random,     // power method from the seeded start vectors, Q iterations
    converged,  // exact dominant eigenbasis of the equivalent covariance
};

// Centralized fast path: power iteration with deflation applied directly to
// equivalent_covariance(R_hat, T, W, P). With EmulationInit::converged the
// subspace is taken from a dense eigensolve, i.e. free of any power-iteration
// truncation error.
Eigen::MatrixXcd dpm_centralized_emulation(const Eigen::MatrixXcd& R_hat, const SelectionMatrix& T,
                                           const net::WeightMatrix& W, int L_vec, int P, int Q,
                                           std::uint64_t seed,
                                           EmulationInit init = EmulationInit::random);
Eigen::MatrixXcd dpm_centralized_emulation(const Eigen::MatrixXcd& R_hat,
                                           const Eigen::MatrixXd& taper, int L_vec, int Q,
                                           std::uint64_t seed,
                                           EmulationInit init = EmulationInit::random);

// Implied consensus accounting of one d-PM run (what the message-level
// protocol spends); the emulated path reports the same numbers.
net::AcAccounting dpm_accounting(int L_vec, int N, const DpmConfig& cfg, int edge_count);

// Rayleigh-quotient eigenvalue estimates per node (K x L), one extra
// consensus instance of depth P2 per eigenvector.
Eigen::MatrixXd dpm_eigenvalue_estimates(const array::SnapshotSet& snaps,
                                         const net::WeightMatrix& W,
                                         const DistributedEigenbasis& basis,
                                         net::AcAccounting* acc = nullptr);

} // namespace dce::dpm
