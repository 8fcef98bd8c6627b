#pragma once

#include <vector>

#include <Eigen/Dense>

#include "dce/esprit.hpp"
#include "dce/perf_analysis.hpp"

namespace dce::esprit_mse {

// True-model quantities the DOA MSE expressions evaluate at: the exact
// signal subspace, the exact shift operator with its eigen-system, and the
// second-order eigenvector statistics machinery.
class EspritAnalysisContext {
  public:
    EspritAnalysisContext(const array::ArrayGeometry& geom, const array::SourceScenario& scen,
                          const net::WeightMatrix& W, const dpm::SelectionMatrix& T, int N, int P);

    const perf::AnalysisInputs& inputs() const { return inputs_; }
    const esprit::PsiEstimate& psi() const { return psi_; }
    const Eigen::MatrixXcd& signal_subspace() const { return U_s_; }
    const Eigen::VectorXd& doas_deg() const { return doas_sorted_; }  // ascending
    double spacing() const { return d_; }
    int source_count() const { return static_cast<int>(doas_sorted_.size()); }

    EspritAnalysisContext with_depth(int P) const;
    EspritAnalysisContext centralized_limit() const {
        return with_depth(perf::AnalysisInputs::kInfiniteDepth);
    }

    // gamma_l^H = q_l^T (Uu^H Uu)^{-1} Uu^H (Jup - conj(psi_l) Jlo), row form.
    Eigen::RowVectorXcd gamma_row(int l) const;
    // mu_l^H = q_l^T (Uu^H Uu)^{-1} Uu^H (Jlo - psi_l Jup), row form.
    Eigen::RowVectorXcd mu_row(int l) const;

  private:
    perf::AnalysisInputs inputs_;
    esprit::SelectionPair sel_;
    Eigen::MatrixXcd U_s_;
    Eigen::MatrixXcd Uu_, Ul_;
    Eigen::MatrixXcd gram_inv_;  // (Uu^H Uu)^{-1}
    esprit::PsiEstimate psi_;
    Eigen::VectorXd doas_sorted_;
    double d_;
};

struct GammaMu {
    Eigen::VectorXcd gamma;  // column, length M
    Eigen::VectorXcd mu;
};

GammaMu gamma_mu_vectors(const EspritAnalysisContext& ctx, int l);

// How the bias part of the eigenvector statistics is folded into the
// shift-eigenvalue moments. `eigvector_mixed` carries every cross term of
// the right-eigenvector expansion; `per_mode` couples eigenvector l's bias
// to psi_l alone, which is the convention the reference curve data follows.
enum class BiasCoupling { eigvector_mixed, per_mode };

struct DpsiMoments {
    double abs_sq = 0.0;                 // E|dpsi_l|^2
    std::complex<double> sq{0.0, 0.0};   // E[(dpsi_l)^2]
};

// Exact expansion of the moments through the second-order eigenvector
// statistics (BiasCoupling::eigvector_mixed form).
DpsiMoments expected_dpsi_moments(const EspritAnalysisContext& ctx, int l,
                                  BiasCoupling coupling = BiasCoupling::eigvector_mixed);

// Per-DOA variance and the aggregated analytical RMSE in degrees.
double doa_variance_rad2(const EspritAnalysisContext& ctx, int l,
                         BiasCoupling coupling = BiasCoupling::per_mode);
double armse_desprit(const EspritAnalysisContext& ctx, const std::vector<int>& l_set,
                     BiasCoupling coupling = BiasCoupling::per_mode);
double armse_desprit(const EspritAnalysisContext& ctx,
                     BiasCoupling coupling = BiasCoupling::per_mode);

} // namespace dce::esprit_mse
