#include "dce/esprit.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace dce::esprit {

using cd = std::complex<double>;

SelectionPair build_selection_pair(const array::ArrayGeometry& geom) {
    const int K = geom.subarray_count();
    const int M = geom.total_sensors();
    int rows = 0;
    SelectionPair sel;
    sel.contributes.resize(K);
    sel.row_offset.resize(K);
    sel.row_count.resize(K);
    for (int k = 0; k < K; ++k) {
        sel.row_offset[k] = rows;
        sel.row_count[k] = std::max(0, geom.sensors_at(k) - 1);
        sel.contributes[k] = sel.row_count[k] > 0;
        rows += sel.row_count[k];
    }
    if (rows == 0)
        throw ConfigError("selection pair: no subarray has two sensors, no shift invariance");
    sel.upper = Eigen::MatrixXd::Zero(rows, M);
    sel.lower = Eigen::MatrixXd::Zero(rows, M);
    for (int k = 0; k < K; ++k)
        for (int r = 0; r < sel.row_count[k]; ++r) {
            sel.upper(sel.row_offset[k] + r, geom.sensor_offset(k) + r) = 1.0;
            sel.lower(sel.row_offset[k] + r, geom.sensor_offset(k) + r + 1) = 1.0;
        }
    return sel;
}

PsiEstimate psi_from_subspace(const Eigen::MatrixXcd& U_s, const SelectionPair& sel) {
    const int L = static_cast<int>(U_s.cols());
    const Eigen::MatrixXcd Uu = sel.upper.cast<cd>() * U_s;
    const Eigen::MatrixXcd Ul = sel.lower.cast<cd>() * U_s;
    if (Uu.rows() < L) throw NumericalError("psi: fewer selected rows than sources");

    Eigen::JacobiSVD<Eigen::MatrixXcd> svd(Uu);
    const double smin = svd.singularValues().minCoeff();
    const double smax = svd.singularValues().maxCoeff();
    if (!(smin > 0.0) || smax / smin > 1e12)
        throw NumericalError("psi: upper-group subspace is rank deficient (condition " +
                             std::to_string(smax / std::max(smin, 1e-300)) + ")");

    PsiEstimate out;
    out.matrix = (Uu.adjoint() * Uu).ldlt().solve(Uu.adjoint() * Ul);

    Eigen::ComplexEigenSolver<Eigen::MatrixXcd> es(out.matrix);
    if (es.info() != Eigen::Success) throw NumericalError("psi: eigen solver failed");
    Eigen::VectorXcd w = es.eigenvalues();
    Eigen::MatrixXcd R = es.eigenvectors();

    std::vector<int> order(L);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](int a, int b) { return std::arg(w(a)) < std::arg(w(b)); });
    out.eigenvalues.resize(L);
    out.right.resize(L, L);
    for (int l = 0; l < L; ++l) {
        out.eigenvalues(l) = w(order[l]);
        Eigen::VectorXcd r = R.col(order[l]).normalized();
        // unit norm with the largest component real positive
        int lead = 0;
        r.cwiseAbs().maxCoeff(&lead);
        if (std::abs(r(lead)) > 0) r *= std::conj(r(lead)) / std::abs(r(lead));
        out.right.col(l) = r;
    }
    // rows of right^{-1} are the left eigenvectors with q_l^T r_l = 1
    Eigen::MatrixXcd Rinv = out.right.inverse();
    out.left = Rinv.transpose();

    const double scale = std::max(out.matrix.norm(), 1e-300);
    for (int l = 0; l < L; ++l) {
        const double res_r =
            (out.matrix * out.right.col(l) - out.eigenvalues(l) * out.right.col(l)).norm();
        const double res_l = (out.left.col(l).transpose() * out.matrix -
                              out.eigenvalues(l) * out.left.col(l).transpose())
                                 .norm();
        if (res_r > 1e-9 * scale || res_l > 1e-9 * scale * out.left.col(l).norm())
            throw NumericalError("psi: eigenpair residual exceeds bound");
    }
    return out;
}

DoaEstimate extract_doas(const PsiEstimate& psi, double spacing) {
    if (!(spacing > 0.0)) throw ConfigError("extract_doas: spacing must be positive");
    const int L = static_cast<int>(psi.eigenvalues.size());
    DoaEstimate out;
    out.psi = psi;
    out.doas_deg.resize(L);
    out.valid.assign(L, true);
    for (int l = 0; l < L; ++l) {
        const double a = std::arg(psi.eigenvalues(l));
        const double s = a / (M_PI * spacing);
        if (std::abs(s) > 1.0) {
            out.valid[l] = false;
            out.doas_deg(l) = std::copysign(90.0, s);
        } else {
            out.doas_deg(l) = std::asin(s) * 180.0 / M_PI;
        }
    }
    // eigenvalues are arg-sorted; for d <= 1 the DOAs inherit the order
    for (int l = 0; l + 1 < L; ++l)
        if (out.doas_deg(l) > out.doas_deg(l + 1))
            std::swap(out.doas_deg(l), out.doas_deg(l + 1));
    return out;
}

DoaEstimate centralized_esprit(const Eigen::MatrixXcd& R_hat, const array::ArrayGeometry& geom,
                               int L) {
    if (L < 1 || L > geom.total_sensors())
        throw ConfigError("centralized_esprit: L must lie in [1, M]");
    const array::EigenPairs eig = array::eig_hermitian(R_hat);
    const SelectionPair sel = build_selection_pair(geom);
    DoaEstimate d = extract_doas(psi_from_subspace(eig.vectors.leftCols(L), sel), geom.spacing());
    d.node = -1;
    return d;
}

DoaEstimate desprit_from_subspace(const Eigen::MatrixXcd& U_s, const SelectionPair& sel,
                                  double spacing) {
    DoaEstimate d = extract_doas(psi_from_subspace(U_s, sel), spacing);
    d.node = -1;
    return d;
}

std::vector<DoaEstimate> desprit(const array::SnapshotSet& snaps, const net::Topology& topology,
                                 const net::WeightMatrix& W, const array::ArrayGeometry& geom,
                                 int L, const dpm::DpmConfig& cfg, DespritMode mode,
                                 net::AcAccounting* acc) {
    const int K = topology.node_count();
    dpm::DistributedEigenbasis basis = dpm_eigendecomposition(snaps, topology, W, L, cfg);
    const SelectionPair sel = build_selection_pair(geom);

    std::vector<DoaEstimate> out;
    out.reserve(K);

    if (mode == DespritMode::a3_shortcut) {
        DoaEstimate shared = desprit_from_subspace(basis.assembled, sel, geom.spacing());
        // the consensus cost of assembling C and F is spent either way
        basis.ac.instances += 2ull * L * L;
        basis.ac.iterations += 2ull * L * L * static_cast<std::uint64_t>(cfg.P3);
        basis.ac.messages +=
            2ull * L * L * static_cast<std::uint64_t>(cfg.P3) * 2ull * W.edge_count();
        for (int k = 0; k < K; ++k) {
            DoaEstimate d = shared;
            d.node = k;
            out.push_back(std::move(d));
        }
        if (acc) *acc += basis.ac;
        return out;
    }

    // mode full: entrywise consensus assembly of C and F, then per-node solves
    const Eigen::MatrixXd& Wm = W.entries();
    std::vector<Eigen::MatrixXcd> C(K, Eigen::MatrixXcd(L, L)), F(K, Eigen::MatrixXcd(L, L));
    for (int i = 0; i < L; ++i)
        for (int j = 0; j < L; ++j) {
            Eigen::VectorXcd lc(K), lf(K);
            for (int k = 0; k < K; ++k) {
                const auto vi = basis.per_node[k].col(i);
                const auto vj = basis.per_node[k].col(j);
                const int rc = sel.row_count[k];
                if (rc == 0) {
                    // single-sensor subarrays contribute zero local terms
                    lc(k) = lf(k) = cd(0.0, 0.0);
                    continue;
                }
                // per-subarray selectors act on the node's own slice
                Eigen::VectorXcd ui(rc), uj_up(rc), uj_lo(rc);
                for (int r = 0; r < rc; ++r) {
                    ui(r) = vi(r);
                    uj_up(r) = vj(r);
                    uj_lo(r) = vj(r + 1);
                }
                lc(k) = ui.dot(uj_up);
                lf(k) = ui.dot(uj_lo);
            }
            for (int p = 0; p < cfg.P3; ++p) {
                lc = Wm * lc;
                lf = Wm * lf;
            }
            basis.ac.instances += 2;
            basis.ac.iterations += 2ull * cfg.P3;
            basis.ac.messages += 2ull * cfg.P3 * 2ull * W.edge_count();
            for (int k = 0; k < K; ++k) {
                C[k](i, j) = static_cast<double>(K) * lc(k);
                F[k](i, j) = static_cast<double>(K) * lf(k);
            }
        }

    for (int k = 0; k < K; ++k) {
        DoaEstimate d;
        d.node = k;
        Eigen::FullPivLU<Eigen::MatrixXcd> lu(C[k]);
        if (!lu.isInvertible()) {
            d.solver_ok = false;
            d.doas_deg = Eigen::VectorXd::Zero(L);
            d.valid.assign(L, false);
            out.push_back(std::move(d));
            continue;
        }
        PsiEstimate psi;
        psi.matrix = lu.solve(F[k]);
        Eigen::ComplexEigenSolver<Eigen::MatrixXcd> es(psi.matrix);
        if (es.info() != Eigen::Success) {
            d.solver_ok = false;
            d.doas_deg = Eigen::VectorXd::Zero(L);
            d.valid.assign(L, false);
            out.push_back(std::move(d));
            continue;
        }
        Eigen::VectorXcd w = es.eigenvalues();
        std::vector<int> order(L);
        std::iota(order.begin(), order.end(), 0);
        std::sort(order.begin(), order.end(),
                  [&](int a, int b) { return std::arg(w(a)) < std::arg(w(b)); });
        psi.eigenvalues.resize(L);
        psi.right.resize(L, L);
        for (int l = 0; l < L; ++l) {
            psi.eigenvalues(l) = w(order[l]);
            psi.right.col(l) = es.eigenvectors().col(order[l]).normalized();
        }
        psi.left = psi.right.inverse().transpose();
        d = extract_doas(psi, geom.spacing());
        d.node = k;
        out.push_back(std::move(d));
    }
    if (acc) *acc += basis.ac;
    return out;
}

} // namespace dce::esprit
