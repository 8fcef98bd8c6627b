#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "dce/errors.hpp"

namespace dce::net {

// Undirected connected communication graph over K nodes.
class Topology {
  public:
    // neighbors[k] lists the nodes adjacent to k (0-based). Must be
    // symmetric, self-loop free and connected.
    explicit Topology(std::vector<std::vector<int>> neighbors);

    int node_count() const { return static_cast<int>(neighbors_.size()); }
    const std::vector<int>& neighbors_of(int k) const { return neighbors_.at(k); }
    const std::vector<std::vector<int>>& neighbors() const { return neighbors_; }
    int edge_count() const { return edge_count_; }

  private:
    std::vector<std::vector<int>> neighbors_;
    int edge_count_ = 0;
};

struct Spectrum {
    Eigen::VectorXd alphas;  // descending
    Eigen::MatrixXd betas;   // orthonormal columns, matching order
};

// Symmetric consensus weighting matrix respecting a topology's sparsity.
class WeightMatrix {
  public:
    WeightMatrix(Eigen::MatrixXd entries, const Topology& topology);

    const Eigen::MatrixXd& entries() const { return entries_; }
    int node_count() const { return static_cast<int>(entries_.rows()); }
    int edge_count() const { return edge_count_; }

    // Dense symmetric eigendecomposition, cached after the first call.
    // The leading eigenvector's sign is fixed so its first entry is positive.
    const Spectrum& spectrum() const;

  private:
    Eigen::MatrixXd entries_;
    int edge_count_;
    mutable std::optional<Spectrum> spectrum_;
};

enum class FailureMode { none, bipartite_like, disconnected_like };

struct ConvergenceDiagnostic {
    bool converges = false;
    double spectral_gap = 0.0;     // 1 - max_{k>=2} |alpha_k|
    double alpha_1 = 0.0;
    double subdominant_magnitude = 0.0;
    FailureMode failure = FailureMode::none;
};

// Metropolis weights: off-diagonal 1/max(deg_i, deg_j) on edges, diagonal
// tops the row up to 1.
WeightMatrix build_metropolis_weights(const Topology& topology);

ConvergenceDiagnostic check_convergence(const WeightMatrix& W, double tol = 1e-9);

Spectrum spectral_decomposition(const WeightMatrix& W);

// Message-exchange accounting for consensus runs.
struct AcAccounting {
    std::uint64_t instances = 0;        // independent consensus instances
    std::uint64_t iterations = 0;       // instance-iterations, i.e. sum of depths
    std::uint64_t messages = 0;         // directed per-link sends
    AcAccounting& operator+=(const AcAccounting& o) {
        instances += o.instances;
        iterations += o.iterations;
        messages += o.messages;
        return *this;
    }
};

// p repeated consensus sweeps x <- W x, never a dense matrix power, so the
// call mirrors the per-iteration message exchange of the protocol.
Eigen::VectorXd ac_iterate(const WeightMatrix& W, const Eigen::VectorXd& x0, int p,
                           AcAccounting* acc = nullptr);
Eigen::VectorXcd ac_iterate(const WeightMatrix& W, const Eigen::VectorXcd& x0, int p,
                            AcAccounting* acc = nullptr);

} // namespace dce::net
