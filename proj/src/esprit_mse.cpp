#include "dce/esprit_mse.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace dce::esprit_mse {

using cd = std::complex<double>;

EspritAnalysisContext::EspritAnalysisContext(const array::ArrayGeometry& geom,
                                             const array::SourceScenario& scen,
                                             const net::WeightMatrix& W,
                                             const dpm::SelectionMatrix& T, int N, int P)
    : inputs_(array::eig_hermitian(array::true_covariance(geom, scen)),
              array::true_covariance(geom, scen), W.spectrum(), T, N, P),
      sel_(esprit::build_selection_pair(geom)),
      d_(geom.spacing()) {
    const int L = scen.source_count();
    if (L < 1) throw ConfigError("esprit analysis: at least one source required");
    U_s_ = inputs_.true_eig().vectors.leftCols(L);
    Uu_ = sel_.upper.cast<cd>() * U_s_;
    Ul_ = sel_.lower.cast<cd>() * U_s_;
    gram_inv_ = (Uu_.adjoint() * Uu_).inverse();
    psi_ = esprit::psi_from_subspace(U_s_, sel_);

    doas_sorted_ = scen.doas_deg;
    std::sort(doas_sorted_.data(), doas_sorted_.data() + doas_sorted_.size());

    // the true shift eigenvalues must sit on the unit circle at the DOA phases
    for (int l = 0; l < L; ++l) {
        const double th = doas_sorted_(l) * M_PI / 180.0;
        const cd expected = std::exp(cd(0.0, M_PI * d_ * std::sin(th)));
        if (std::abs(std::abs(psi_.eigenvalues(l)) - 1.0) > 1e-9)
            throw NumericalError("esprit analysis: true shift eigenvalue off the unit circle");
        if (std::abs(psi_.eigenvalues(l) - expected) > 1e-9)
            throw NumericalError("esprit analysis: shift eigenvalue does not match DOA " +
                                 std::to_string(doas_sorted_(l)));
    }
}

EspritAnalysisContext EspritAnalysisContext::with_depth(int P) const {
    EspritAnalysisContext copy(*this);
    copy.inputs_ = inputs_.with_depth(P);
    return copy;
}

Eigen::RowVectorXcd EspritAnalysisContext::gamma_row(int l) const {
    const cd psi = psi_.eigenvalues(l);
    return psi_.left.col(l).transpose() * gram_inv_ * Uu_.adjoint() *
           (sel_.upper.cast<cd>() - std::conj(psi) * sel_.lower.cast<cd>());
}

Eigen::RowVectorXcd EspritAnalysisContext::mu_row(int l) const {
    const cd psi = psi_.eigenvalues(l);
    return psi_.left.col(l).transpose() * gram_inv_ * Uu_.adjoint() *
           (sel_.lower.cast<cd>() - psi * sel_.upper.cast<cd>());
}

GammaMu gamma_mu_vectors(const EspritAnalysisContext& ctx, int l) {
    GammaMu g;
    g.gamma = ctx.gamma_row(l).adjoint();
    g.mu = ctx.mu_row(l).adjoint();
    return g;
}

namespace {

struct MomentPieces {
    double abs_fs = 0.0;
    cd sq_fs{0.0, 0.0};
    double abs_bias = 0.0;
    cd sq_bias{0.0, 0.0};
};

MomentPieces moment_pieces(const EspritAnalysisContext& ctx, int l, BiasCoupling coupling) {
    const int L = ctx.source_count();
    const int M = ctx.inputs().sensor_count();
    const Eigen::RowVectorXcd gaH = ctx.gamma_row(l);
    const Eigen::RowVectorXcd muH = ctx.mu_row(l);
    const Eigen::VectorXcd r = ctx.psi().right.col(l);

    // finite-sample part through the bias-free eigenvector statistics
    const perf::AnalysisInputs fs = ctx.inputs().centralized_limit();
    Eigen::MatrixXcd SH = Eigen::MatrixXcd::Zero(M, M);
    Eigen::MatrixXcd ST = Eigen::MatrixXcd::Zero(M, M);
    for (int i = 0; i < L; ++i)
        for (int j = 0; j < L; ++j) {
            const perf::EigvecCov cov = perf::eigvec_second_order(fs, i, j);
            SH += r(i) * std::conj(r(j)) * cov.herm;
            ST += r(i) * r(j) * cov.trans;
        }
    MomentPieces out;
    out.abs_fs = (gaH * SH * gaH.adjoint())(0, 0).real();
    out.sq_fs = (muH * ST * muH.transpose())(0, 0);

    if (ctx.inputs().consensus_depth() == perf::AnalysisInputs::kInfiniteDepth) return out;

    std::vector<Eigen::VectorXcd> bh(L);
    for (int i = 0; i < L; ++i)
        bh[i] = perf::deflation_matrix(ctx.inputs(), i) *
                perf::consensus_bias_vector(ctx.inputs(), i);

    if (coupling == BiasCoupling::eigvector_mixed) {
        cd wg(0.0, 0.0), wm(0.0, 0.0);
        for (int i = 0; i < L; ++i) {
            wg += r(i) * (gaH * bh[i])(0, 0);
            wm += r(i) * (muH * bh[i])(0, 0);
        }
        out.abs_bias = std::norm(wg);
        out.sq_bias = wm * wm;
    } else {
        const cd zg = (gaH * bh[l])(0, 0);
        const cd zm = (muH * bh[l])(0, 0);
        out.abs_bias = std::norm(zg);
        out.sq_bias = zm * zm;
    }
    return out;
}

} // namespace

DpsiMoments expected_dpsi_moments(const EspritAnalysisContext& ctx, int l, BiasCoupling coupling) {
    const MomentPieces p = moment_pieces(ctx, l, coupling);
    DpsiMoments m;
    m.abs_sq = p.abs_fs + p.abs_bias;
    m.sq = p.sq_fs + p.sq_bias;
    return m;
}

double doa_variance_rad2(const EspritAnalysisContext& ctx, int l, BiasCoupling coupling) {
    const DpsiMoments m = expected_dpsi_moments(ctx, l, coupling);
    const cd psi = ctx.psi().eigenvalues(l);
    const double th = ctx.doas_deg()(l) * M_PI / 180.0;
    const double c = std::cos(th);
    if (std::abs(c) < 1e-8)
        throw NumericalError("doa variance: endfire DOA, cos(theta) vanishes");
    double num = m.abs_sq - (std::conj(psi) * std::conj(psi) * m.sq).real();
    if (num < 0.0) {
        if (num < -1e-10 * std::max(m.abs_sq, 1e-300))
            throw NumericalError("doa variance: negative value, outside the analysis regime");
        num = 0.0;
    }
    const double denom = 2.0 * (M_PI * ctx.spacing() * c) * (M_PI * ctx.spacing() * c);
    return num / denom;
}

double armse_desprit(const EspritAnalysisContext& ctx, const std::vector<int>& l_set,
                     BiasCoupling coupling) {
    if (l_set.empty()) throw ConfigError("armse_desprit: empty DOA index set");
    double acc = 0.0;
    for (int l : l_set) acc += doa_variance_rad2(ctx, l, coupling);
    return std::sqrt(acc / static_cast<double>(l_set.size())) * 180.0 / M_PI;
}

double armse_desprit(const EspritAnalysisContext& ctx, BiasCoupling coupling) {
    std::vector<int> all(ctx.source_count());
    for (int l = 0; l < ctx.source_count(); ++l) all[l] = l;
    return armse_desprit(ctx, all, coupling);
}

} // namespace dce::esprit_mse
