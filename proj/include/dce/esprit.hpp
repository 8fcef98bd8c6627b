#pragma once

#include <vector>

#include <Eigen/Dense>

#include "dce/array_model.hpp"
#include "dce/dpm.hpp"
#include "dce/network.hpp"

namespace dce::esprit {

// Block-diagonal upper/lower sensor-group selectors. Subarray k contributes
// M_k - 1 rows ([I 0] above, [0 I] below); single-sensor subarrays
// contribute none and are flagged.
struct SelectionPair {
    Eigen::MatrixXd upper;  // (M - K') x M
    Eigen::MatrixXd lower;
    std::vector<bool> contributes;       // per subarray
    std::vector<int> row_offset;         // first row of subarray k's block
    std::vector<int> row_count;          // M_k - 1 (0 when flagged)
};

SelectionPair build_selection_pair(const array::ArrayGeometry& geom);

// L x L shift-invariance operator with its eigen-system. Right eigenvectors
// unit-norm; left eigenvectors scaled so q_l^T r_l = 1. Eigenvalues ordered
// by ascending argument, which matches ascending DOA for d > 0.
struct PsiEstimate {
    Eigen::MatrixXcd matrix;
    Eigen::VectorXcd eigenvalues;
    Eigen::MatrixXcd right;  // columns r_l
    Eigen::MatrixXcd left;   // columns q_l
};

PsiEstimate psi_from_subspace(const Eigen::MatrixXcd& U_s, const SelectionPair& sel);

struct DoaEstimate {
    Eigen::VectorXd doas_deg;  // ascending
    std::vector<bool> valid;   // per DOA: |arg(psi)| <= pi d
    PsiEstimate psi;
    int node = -1;             // -1 = centralized / shared
    bool solver_ok = true;
};

DoaEstimate extract_doas(const PsiEstimate& psi, double spacing);

DoaEstimate centralized_esprit(const Eigen::MatrixXcd& R_hat, const array::ArrayGeometry& geom,
                               int L);

enum class DespritMode {
    full,          // per-node Psi from consensus-assembled C and F
    a3_shortcut,   // one Psi from the assembled subspace, shared by all nodes
};

// Decentralized ESPRIT on top of the message-level d-PM subspace.
std::vector<DoaEstimate> desprit(const array::SnapshotSet& snaps, const net::Topology& topology,
                                 const net::WeightMatrix& W, const array::ArrayGeometry& geom,
                                 int L, const dpm::DpmConfig& cfg,
                                 DespritMode mode = DespritMode::a3_shortcut,
                                 net::AcAccounting* acc = nullptr);

// Psi estimation layer shared by the fast path: a3-shortcut applied to an
// already-computed subspace.
DoaEstimate desprit_from_subspace(const Eigen::MatrixXcd& U_s, const SelectionPair& sel,
                                  double spacing);

} // namespace dce::esprit
