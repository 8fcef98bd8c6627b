#include "dce/network.hpp"

#include <algorithm>
#include <queue>
#include <set>
#include <string>

namespace dce::net {

Topology::Topology(std::vector<std::vector<int>> neighbors) : neighbors_(std::move(neighbors)) {
    const int K = static_cast<int>(neighbors_.size());
    if (K < 1) throw ConfigError("topology: at least one node required");
    std::vector<std::set<int>> sets(K);
    for (int i = 0; i < K; ++i) {
        for (int j : neighbors_[i]) {
            if (j < 0 || j >= K)
                throw ConfigError("topology: neighbor index " + std::to_string(j + 1) +
                                  " of node " + std::to_string(i + 1) + " out of range");
            if (j == i) throw ConfigError("topology: node " + std::to_string(i + 1) + " lists itself");
            sets[i].insert(j);
        }
        if (sets[i].size() != neighbors_[i].size())
            throw ConfigError("topology: duplicate neighbor for node " + std::to_string(i + 1));
        std::sort(neighbors_[i].begin(), neighbors_[i].end());
    }
    for (int i = 0; i < K; ++i)
        for (int j : sets[i]) {
            if (!sets[j].count(i))
                throw ConfigError("topology: asymmetric adjacency between nodes " +
                                  std::to_string(i + 1) + " and " + std::to_string(j + 1));
            if (i < j) ++edge_count_;
        }
    // connectivity (BFS from node 0)
    std::vector<bool> seen(K, false);
    std::queue<int> q;
    q.push(0);
    seen[0] = true;
    int reached = 1;
    while (!q.empty()) {
        const int u = q.front();
        q.pop();
        for (int v : neighbors_[u])
            if (!seen[v]) {
                seen[v] = true;
                ++reached;
                q.push(v);
            }
    }
    if (reached != K) throw ConfigError("topology: graph is not connected");
}

WeightMatrix::WeightMatrix(Eigen::MatrixXd entries, const Topology& topology)
    : entries_(std::move(entries)), edge_count_(topology.edge_count()) {
    const int K = topology.node_count();
    if (entries_.rows() != K || entries_.cols() != K)
        throw ConfigError("weight matrix: dimension mismatch with topology");
    if (!entries_.isApprox(entries_.transpose(), 1e-12))
        throw ConfigError("weight matrix: not symmetric");
    for (int i = 0; i < K; ++i) {
        double row = entries_.row(i).sum();
        if (std::abs(row - 1.0) > 1e-12)
            throw ConfigError("weight matrix: row " + std::to_string(i + 1) + " sums to " +
                              std::to_string(row));
        std::set<int> nb(topology.neighbors_of(i).begin(), topology.neighbors_of(i).end());
        for (int j = 0; j < K; ++j)
            if (i != j && !nb.count(j) && entries_(i, j) != 0.0)
                throw ConfigError("weight matrix: nonzero weight on non-edge (" +
                                  std::to_string(i + 1) + "," + std::to_string(j + 1) + ")");
    }
}

const Spectrum& WeightMatrix::spectrum() const {
    if (!spectrum_) {
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(entries_);
        if (es.info() != Eigen::Success)
            throw NumericalError("weight matrix eigendecomposition failed");
        const int K = node_count();
        Spectrum s;
        s.alphas = es.eigenvalues().reverse();
        s.betas = es.eigenvectors().rowwise().reverse();
        for (int k = 0; k < K; ++k) {
            int lead = 0;
            s.betas.col(k).cwiseAbs().maxCoeff(&lead);
            if (s.betas(lead, k) < 0) s.betas.col(k) = -s.betas.col(k);
        }
        if (s.betas(0, 0) < 0) s.betas.col(0) = -s.betas.col(0);
        // residual contract: W beta_k = alpha_k beta_k
        const double resid =
            (entries_ * s.betas - s.betas * s.alphas.asDiagonal()).cwiseAbs().maxCoeff();
        if (resid > 1e-10 * K)
            throw NumericalError("weight spectrum residual " + std::to_string(resid) +
                                 " exceeds bound");
        spectrum_ = std::move(s);
    }
    return *spectrum_;
}

WeightMatrix build_metropolis_weights(const Topology& topology) {
    const int K = topology.node_count();
    Eigen::MatrixXd W = Eigen::MatrixXd::Zero(K, K);
    for (int i = 0; i < K; ++i) {
        const auto deg = [&](int n) { return topology.neighbors_of(n).size(); };
        for (int j : topology.neighbors_of(i))
            W(i, j) = 1.0 / static_cast<double>(std::max(deg(i), deg(j)));
        W(i, i) = 1.0 - W.row(i).sum();
    }
    return WeightMatrix(std::move(W), topology);
}

ConvergenceDiagnostic check_convergence(const WeightMatrix& W, double tol) {
    const Spectrum& s = W.spectrum();
    const int K = W.node_count();
    ConvergenceDiagnostic d;
    d.alpha_1 = s.alphas(0);
    double sub = 0.0;
    for (int k = 1; k < K; ++k) sub = std::max(sub, std::abs(s.alphas(k)));
    d.subdominant_magnitude = (K > 1) ? sub : 0.0;
    d.spectral_gap = 1.0 - d.subdominant_magnitude;
    const bool unit_leading = std::abs(d.alpha_1 - 1.0) <= tol;
    const bool simple = (K == 1) || (s.alphas(1) < 1.0 - tol);
    const bool contracting = d.subdominant_magnitude < 1.0 - tol;
    d.converges = unit_leading && simple && contracting;
    if (!d.converges) {
        if (K > 1 && s.alphas(K - 1) <= -1.0 + tol)
            d.failure = FailureMode::bipartite_like;
        else if (K > 1 && s.alphas(1) >= 1.0 - tol)
            d.failure = FailureMode::disconnected_like;
    }
    return d;
}

Spectrum spectral_decomposition(const WeightMatrix& W) { return W.spectrum(); }

namespace {

template <typename Vec>
Vec ac_iterate_impl(const WeightMatrix& W, const Vec& x0, int p, AcAccounting* acc) {
    if (x0.size() != W.node_count())
        throw ConfigError("ac_iterate: vector length does not match node count");
    if (p < 0) throw ConfigError("ac_iterate: negative iteration count");
    Vec x = x0;
    for (int it = 0; it < p; ++it) x = W.entries() * x;
    if (acc) {
        acc->instances += 1;
        acc->iterations += static_cast<std::uint64_t>(p);
        acc->messages += static_cast<std::uint64_t>(p) * 2u * W.edge_count();
    }
    return x;
}

} // namespace

Eigen::VectorXd ac_iterate(const WeightMatrix& W, const Eigen::VectorXd& x0, int p,
                           AcAccounting* acc) {
    return ac_iterate_impl(W, x0, p, acc);
}

Eigen::VectorXcd ac_iterate(const WeightMatrix& W, const Eigen::VectorXcd& x0, int p,
                            AcAccounting* acc) {
    return ac_iterate_impl(W, x0, p, acc);
}

} // namespace dce::net
