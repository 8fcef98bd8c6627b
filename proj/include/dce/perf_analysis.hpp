#pragma once

#include <Eigen/Dense>

#include "dce/array_model.hpp"
#include "dce/dpm.hpp"
#include "dce/network.hpp"

namespace dce::perf {

// Everything the closed-form second-order expressions consume: the true
// covariance and its eigensystem, the weight-matrix spectrum mapped through
// the sensor selection, the sample count and the consensus depth.
class AnalysisInputs {
  public:
    // P = kInfiniteDepth drops the consensus bias entirely (the centralized
    // limit of all expressions).
    static constexpr int kInfiniteDepth = -1;

    AnalysisInputs(array::EigenPairs true_eig, Eigen::MatrixXcd R_true, const net::Spectrum& w_spec,
                   const dpm::SelectionMatrix& T, int N, int P);

    int sensor_count() const { return static_cast<int>(R_.rows()); }
    int node_count() const { return static_cast<int>(alphas_.size()); }
    int sample_count() const { return N_; }
    int consensus_depth() const { return P_; }
    const array::EigenPairs& true_eig() const { return eig_; }
    const Eigen::MatrixXcd& true_covariance() const { return R_; }

    AnalysisInputs with_depth(int P) const;
    AnalysisInputs centralized_limit() const { return with_depth(kInfiniteDepth); }

    // diag(T beta_k) as a vector, k >= 1 (0-based index into the spectrum)
    const Eigen::MatrixXd& mapped_modes() const { return t_modes_; }
    const Eigen::VectorXd& alphas() const { return alphas_; }

    // guards every denominator pair (l, i), i != l
    void require_gaps(int l) const;

  private:
    array::EigenPairs eig_;
    Eigen::MatrixXcd R_;
    Eigen::VectorXd alphas_;
    Eigen::MatrixXd t_modes_;  // column k holds T beta_k
    int N_;
    int P_;
};

struct EigvecCov {
    Eigen::MatrixXcd herm;   // E[dv_l dv_m^H]
    Eigen::MatrixXcd trans;  // E[dv_l dv_m^T]
    int l = 0, m = 0;
};

// B_l = U_{-l} Gamma_l^{-1} U_{-l}^H; maps v_i to v_i / (lambda_i - lambda_l).
Eigen::MatrixXcd deflation_matrix(const AnalysisInputs& in, int l);

// Consensus bias h_l^(P) = K sum_{k>=2} alpha_k^P diag(T b_k) R diag(T b_k) v_l.
Eigen::VectorXcd consensus_bias_vector(const AnalysisInputs& in, int l);

// First-order eigenvector error -B_l (dR v_l + h_l).
Eigen::VectorXcd first_order_error(const AnalysisInputs& in, int l, const Eigen::MatrixXcd& delta_R);

// Second-order statistics of the decentralized eigenvector estimates.
EigvecCov eigvec_second_order(const AnalysisInputs& in, int l, int m);

// sqrt( sum_{l<L_sig} tr E[dv_l dv_l^H] / L_sig ): subspace-normalized RMSE.
double armse_dpm(const AnalysisInputs& in, int L_sig);

} // namespace dce::perf
