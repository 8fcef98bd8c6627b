#include "dce/dpm.hpp"

#include <cmath>
#include <string>

#include "dce/rng.hpp"

namespace dce::dpm {

using cd = std::complex<double>;

SelectionMatrix::SelectionMatrix(const net::Topology& topology, const array::ArrayGeometry& geom) {
    const int K = topology.node_count();
    if (K != geom.subarray_count())
        throw ConfigError("selection matrix: node count differs from subarray count");
    const int M = geom.total_sensors();
    entries_ = Eigen::MatrixXd::Zero(M, K);
    for (int k = 0; k < K; ++k)
        for (int m = 0; m < geom.sensors_at(k); ++m) entries_(geom.sensor_offset(k) + m, k) = 1.0;
}

void DpmConfig::validate() const {
    if (P < 0 || P1 <= 0 || P2 <= 0 || P3 <= 0)
        throw ConfigError("dpm config: consensus depths must be positive (P may be zero)");
    if (Q <= 0) throw ConfigError("dpm config: Q must be positive");
}

Eigen::MatrixXd consensus_taper(const SelectionMatrix& T, const net::WeightMatrix& W, int P) {
    if (P < 0) throw ConfigError("consensus_taper: negative P");
    const net::Spectrum& s = W.spectrum();
    const int K = W.node_count();
    Eigen::MatrixXd Wp = Eigen::MatrixXd::Zero(K, K);
    for (int k = 0; k < K; ++k)
        Wp += std::pow(s.alphas(k), P) * (s.betas.col(k) * s.betas.col(k).transpose());
    return static_cast<double>(K) * (T.entries() * Wp * T.entries().transpose());
}

Eigen::MatrixXcd equivalent_covariance(const Eigen::MatrixXcd& R_hat, const Eigen::MatrixXd& taper) {
    if (taper.rows() != R_hat.rows() || taper.cols() != R_hat.cols())
        throw ConfigError("equivalent_covariance: taper dimension mismatch");
    Eigen::MatrixXcd R = R_hat.cwiseProduct(taper.cast<cd>());
    return ((R + R.adjoint()) * 0.5).eval();
}

Eigen::MatrixXcd equivalent_covariance(const Eigen::MatrixXcd& R_hat, const SelectionMatrix& T,
                                       const net::WeightMatrix& W, int P) {
    if (T.sensor_count() != R_hat.rows())
        throw ConfigError("equivalent_covariance: covariance dimension mismatch");
    return equivalent_covariance(R_hat, consensus_taper(T, W, P));
}

Eigen::VectorXcd initial_vector(int M, std::uint64_t seed, int l) {
    const rng::Stream s(seed, rng::kPowerIterationInit);
    Eigen::VectorXcd v(M);
    for (int m = 0; m < M; ++m)
        v(m) = s.cnormal(static_cast<std::uint64_t>(l) * 4096u + static_cast<std::uint64_t>(m));
    v /= v.norm();
    return v;
}

namespace {

// Power iteration needs a gap between the leading remaining eigenvalues.
void check_iteration_gaps(const Eigen::MatrixXcd& R_tilde, int L_vec) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(R_tilde, Eigen::EigenvaluesOnly);
    const Eigen::VectorXd lam = es.eigenvalues().reverse();
    const double scale = std::max(lam.cwiseAbs().maxCoeff(), 1e-300);
    for (int l = 0; l + 1 < static_cast<int>(lam.size()) && l < L_vec; ++l)
        if (std::abs(lam(l) - lam(l + 1)) < 1e-10 * scale)
            throw NumericalError("power iteration: eigenvalues " + std::to_string(l + 1) + " and " +
                                 std::to_string(l + 2) + " of the equivalent covariance coincide");
}

void require_convergent(const net::WeightMatrix& W) {
    const auto diag = net::check_convergence(W);
    if (!diag.converges)
        throw NumericalError("weight matrix does not satisfy the consensus convergence condition");
}

} // namespace

DistributedEigenbasis dpm_eigendecomposition(const array::SnapshotSet& snaps,
                                             const net::Topology& topology,
                                             const net::WeightMatrix& W, int L_vec,
                                             const DpmConfig& cfg) {
    cfg.validate();
    const int K = topology.node_count();
    if (static_cast<int>(snaps.per_node.size()) != K)
        throw ConfigError("dpm: snapshot blocks do not match node count");
    int M = 0;
    for (const auto& b : snaps.per_node) M += static_cast<int>(b.rows());
    if (L_vec < 1 || L_vec > M) throw ConfigError("dpm: L_vec must lie in [1, M]");
    require_convergent(W);
    const int N = snaps.sample_count;
    const Eigen::MatrixXd& Wm = W.entries();

    // offsets of each node's slice in the assembled vector
    std::vector<int> off(K + 1, 0);
    for (int k = 0; k < K; ++k) off[k + 1] = off[k] + static_cast<int>(snaps.per_node[k].rows());

    {
        // tie guard evaluated on the equivalent covariance the run targets
        Eigen::MatrixXcd R_hat = array::sample_covariance(snaps);
        const net::Spectrum& s = W.spectrum();
        Eigen::MatrixXd Wp = Eigen::MatrixXd::Zero(K, K);
        for (int k = 0; k < K; ++k)
            Wp += std::pow(s.alphas(k), cfg.P) * (s.betas.col(k) * s.betas.col(k).transpose());
        Eigen::MatrixXd Tm = Eigen::MatrixXd::Zero(M, K);
        for (int k = 0; k < K; ++k) Tm.block(off[k], k, off[k + 1] - off[k], 1).setOnes();
        Eigen::MatrixXd taper = K * (Tm * Wp * Tm.transpose());
        check_iteration_gaps(equivalent_covariance(R_hat, taper), L_vec);
    }

    DistributedEigenbasis out;
    out.P = cfg.P;
    out.P1 = cfg.P1;
    out.P2 = cfg.P2;
    out.Q = cfg.Q;
    out.assembled.resize(M, L_vec);
    out.per_node.resize(K);
    for (int k = 0; k < K; ++k) out.per_node[k].resize(off[k + 1] - off[k], L_vec);

    const std::uint64_t edges2 = 2ull * W.edge_count();
    Eigen::MatrixXcd phi(N, K);
    Eigen::VectorXcd assembled(M);

    for (int l = 0; l < L_vec; ++l) {
        Eigen::VectorXcd v = initial_vector(M, cfg.seed, l);
        // node slices of the running iterate
        std::vector<Eigen::VectorXcd> vk(K), vpk(K);
        for (int k = 0; k < K; ++k) vk[k] = v.segment(off[k], off[k + 1] - off[k]);

        for (int q = 0; q < cfg.Q; ++q) {
            // per-snapshot scalars: node k contributes x_k(t)^H v_k, then N
            // consensus instances of depth P run in parallel
            for (int k = 0; k < K; ++k) phi.col(k) = snaps.per_node[k].adjoint() * vk[k];
            for (int p = 0; p < cfg.P; ++p) phi *= Wm;  // row t is one instance; W symmetric
            out.ac.instances += static_cast<std::uint64_t>(N);
            out.ac.iterations += static_cast<std::uint64_t>(N) * cfg.P;
            out.ac.messages += static_cast<std::uint64_t>(N) * cfg.P * edges2;

            // each node assembles its slice from its own scalar copies
            for (int k = 0; k < K; ++k)
                vpk[k] = (static_cast<double>(K) / N) * (snaps.per_node[k] * phi.col(k));

            // deflation against previously extracted vectors
            for (int i = 0; i < l; ++i) {
                Eigen::VectorXcd locals(K);
                for (int k = 0; k < K; ++k)
                    locals(k) = out.per_node[k].col(i).dot(vpk[k]);
                for (int p = 0; p < cfg.P1; ++p) locals = Wm * locals;
                out.ac.instances += 1;
                out.ac.iterations += static_cast<std::uint64_t>(cfg.P1);
                out.ac.messages += static_cast<std::uint64_t>(cfg.P1) * edges2;
                for (int k = 0; k < K; ++k)
                    vpk[k] -= out.per_node[k].col(i) * (static_cast<double>(K) * locals(k));
            }

            // rescale the assembled iterate to unit norm so large Q cannot
            // overflow; a uniform scale leaves the protocol state equivalent
            double nrm2 = 0.0;
            for (int k = 0; k < K; ++k) nrm2 += vpk[k].squaredNorm();
            const double nrm = std::sqrt(nrm2);
            if (!(nrm > 0.0)) throw NumericalError("dpm: iterate collapsed to zero");
            for (int k = 0; k < K; ++k) vk[k] = vpk[k] / nrm;
        }

        // decentralized normalization: per-node norm estimates of depth P2
        Eigen::VectorXd locals(K);
        for (int k = 0; k < K; ++k) locals(k) = vk[k].squaredNorm();
        for (int p = 0; p < cfg.P2; ++p) locals = Wm * locals;
        out.ac.instances += 1;
        out.ac.iterations += static_cast<std::uint64_t>(cfg.P2);
        out.ac.messages += static_cast<std::uint64_t>(cfg.P2) * edges2;
        for (int k = 0; k < K; ++k) {
            const double est = static_cast<double>(K) * locals(k);
            if (!(est > 0.0)) throw NumericalError("dpm: nonpositive norm estimate at a node");
            vk[k] /= std::sqrt(est);
        }

        for (int k = 0; k < K; ++k) {
            out.per_node[k].col(l) = vk[k];
            assembled.segment(off[k], off[k + 1] - off[k]) = vk[k];
        }
        out.assembled.col(l) = assembled;
    }
    return out;
}

Eigen::MatrixXcd dpm_centralized_emulation(const Eigen::MatrixXcd& R_hat,
                                           const Eigen::MatrixXd& taper, int L_vec, int Q,
                                           std::uint64_t seed, EmulationInit init) {
    const int M = static_cast<int>(R_hat.rows());
    if (L_vec < 1 || L_vec > M) throw ConfigError("dpm emulation: L_vec must lie in [1, M]");
    const Eigen::MatrixXcd R_tilde = equivalent_covariance(R_hat, taper);
    check_iteration_gaps(R_tilde, L_vec);

    if (init == EmulationInit::converged)
        return array::eig_hermitian(R_tilde).vectors.leftCols(L_vec);

    if (Q <= 0) throw ConfigError("dpm emulation: Q must be positive");
    Eigen::MatrixXcd V(M, L_vec);
    for (int l = 0; l < L_vec; ++l) {
        Eigen::VectorXcd v = initial_vector(M, seed, l);
        for (int q = 0; q < Q; ++q) {
            v = R_tilde * v;
            for (int i = 0; i < l; ++i) v -= V.col(i) * V.col(i).dot(v);
            const double n = v.norm();
            if (!(n > 0.0)) throw NumericalError("dpm emulation: iterate collapsed to zero");
            v /= n;
        }
        V.col(l) = v;
    }
    return V;
}

Eigen::MatrixXcd dpm_centralized_emulation(const Eigen::MatrixXcd& R_hat, const SelectionMatrix& T,
                                           const net::WeightMatrix& W, int L_vec, int P, int Q,
                                           std::uint64_t seed, EmulationInit init) {
    require_convergent(W);
    return dpm_centralized_emulation(R_hat, consensus_taper(T, W, P), L_vec, Q, seed, init);
}

net::AcAccounting dpm_accounting(int L_vec, int N, const DpmConfig& cfg, int edge_count) {
    net::AcAccounting a;
    const std::uint64_t L = static_cast<std::uint64_t>(L_vec);
    const std::uint64_t pairs = L * (L - 1) / 2;
    a.instances = L * cfg.Q * static_cast<std::uint64_t>(N) + cfg.Q * pairs + L;
    a.iterations = L * cfg.Q * static_cast<std::uint64_t>(N) * cfg.P +
                   cfg.Q * pairs * static_cast<std::uint64_t>(cfg.P1) +
                   L * static_cast<std::uint64_t>(cfg.P2);
    a.messages = a.iterations * 2ull * static_cast<std::uint64_t>(edge_count);
    return a;
}

Eigen::MatrixXd dpm_eigenvalue_estimates(const array::SnapshotSet& snaps,
                                         const net::WeightMatrix& W,
                                         const DistributedEigenbasis& basis,
                                         net::AcAccounting* acc) {
    const int K = static_cast<int>(basis.per_node.size());
    const int L = static_cast<int>(basis.assembled.cols());
    const int N = snaps.sample_count;
    const Eigen::MatrixXd& Wm = W.entries();
    const std::uint64_t edges2 = 2ull * W.edge_count();
    Eigen::MatrixXd out(K, L);
    Eigen::MatrixXcd phi(N, K);
    for (int l = 0; l < L; ++l) {
        for (int k = 0; k < K; ++k) phi.col(k) = snaps.per_node[k].adjoint() * basis.per_node[k].col(l);
        for (int p = 0; p < basis.P; ++p) phi *= Wm;
        Eigen::VectorXcd locals(K);
        for (int k = 0; k < K; ++k)
            locals(k) = basis.per_node[k].col(l).dot(
                (static_cast<double>(K) / N) * (snaps.per_node[k] * phi.col(k)));
        for (int p = 0; p < basis.P2; ++p) locals = Wm * locals;
        for (int k = 0; k < K; ++k) out(k, l) = (static_cast<double>(K) * locals(k)).real();
        if (acc) {
            acc->instances += static_cast<std::uint64_t>(N) + 1;
            acc->iterations += static_cast<std::uint64_t>(N) * basis.P + basis.P2;
            acc->messages += (static_cast<std::uint64_t>(N) * basis.P + basis.P2) * edges2;
        }
    }
    return out;
}

} // namespace dce::dpm
