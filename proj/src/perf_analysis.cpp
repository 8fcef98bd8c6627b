#include "dce/perf_analysis.hpp"

#include <cmath>
#include <string>

namespace dce::perf {

using cd = std::complex<double>;

AnalysisInputs::AnalysisInputs(array::EigenPairs true_eig, Eigen::MatrixXcd R_true,
                               const net::Spectrum& w_spec, const dpm::SelectionMatrix& T, int N,
                               int P)
    : eig_(std::move(true_eig)), R_(std::move(R_true)), alphas_(w_spec.alphas), N_(N), P_(P) {
    if (N_ < 1) throw ConfigError("analysis inputs: N must be >= 1");
    if (P_ < 0 && P_ != kInfiniteDepth) throw ConfigError("analysis inputs: invalid P");
    if (R_.rows() != eig_.vectors.rows())
        throw ConfigError("analysis inputs: covariance and eigensystem sizes differ");
    if (T.sensor_count() != R_.rows())
        throw ConfigError("analysis inputs: selection matrix does not match covariance");
    t_modes_ = T.entries() * w_spec.betas;
}

AnalysisInputs AnalysisInputs::with_depth(int P) const {
    AnalysisInputs copy = *this;
    if (P < 0 && P != kInfiniteDepth) throw ConfigError("analysis inputs: invalid P");
    copy.P_ = P;
    return copy;
}

void AnalysisInputs::require_gaps(int l) const {
    const int M = sensor_count();
    if (l < 0 || l >= M) throw ConfigError("analysis: eigenvector index out of range");
    const double floor = 1e-10 * std::abs(eig_.values(0));
    for (int i = 0; i < M; ++i)
        if (i != l && std::abs(eig_.values(i) - eig_.values(l)) < floor)
            throw NumericalError("analysis: eigenvalue gap between indices " + std::to_string(l + 1) +
                                 " and " + std::to_string(i + 1) + " below 1e-10*lambda_1");
}

Eigen::MatrixXcd deflation_matrix(const AnalysisInputs& in, int l) {
    in.require_gaps(l);
    const int M = in.sensor_count();
    const auto& eig = in.true_eig();
    Eigen::MatrixXcd B = Eigen::MatrixXcd::Zero(M, M);
    for (int i = 0; i < M; ++i) {
        if (i == l) continue;
        B += (eig.vectors.col(i) * eig.vectors.col(i).adjoint()) /
             (eig.values(i) - eig.values(l));
    }
    return B;
}

Eigen::VectorXcd consensus_bias_vector(const AnalysisInputs& in, int l) {
    const int M = in.sensor_count();
    const int K = in.node_count();
    Eigen::VectorXcd h = Eigen::VectorXcd::Zero(M);
    if (in.consensus_depth() == AnalysisInputs::kInfiniteDepth) return h;
    for (int k = 1; k < K; ++k)
        if (std::abs(in.alphas()(k)) >= 1.0)
            throw NumericalError(
                "consensus bias: weighting matrix does not satisfy the convergence condition");
    const Eigen::VectorXcd v = in.true_eig().vectors.col(l);
    for (int k = 1; k < K; ++k) {
        const Eigen::VectorXd t = in.mapped_modes().col(k);
        const double w = std::pow(in.alphas()(k), in.consensus_depth());
        if (w == 0.0) continue;
        h += w * t.cast<cd>().asDiagonal() *
             (in.true_covariance() * (t.cast<cd>().asDiagonal() * v));
    }
    return static_cast<double>(K) * h;
}

Eigen::VectorXcd first_order_error(const AnalysisInputs& in, int l,
                                   const Eigen::MatrixXcd& delta_R) {
    const Eigen::MatrixXcd B = deflation_matrix(in, l);
    return -B * (delta_R * in.true_eig().vectors.col(l) + consensus_bias_vector(in, l));
}

EigvecCov eigvec_second_order(const AnalysisInputs& in, int l, int m) {
    in.require_gaps(l);
    in.require_gaps(m);
    const int M = in.sensor_count();
    const auto& eig = in.true_eig();
    const double N = static_cast<double>(in.sample_count());
    EigvecCov out;
    out.l = l;
    out.m = m;
    out.herm = Eigen::MatrixXcd::Zero(M, M);
    out.trans = Eigen::MatrixXcd::Zero(M, M);

    if (l == m) {
        for (int i = 0; i < M; ++i) {
            if (i == l) continue;
            const double c = eig.values(l) / N * eig.values(i) /
                             ((eig.values(l) - eig.values(i)) * (eig.values(l) - eig.values(i)));
            out.herm += c * (eig.vectors.col(i) * eig.vectors.col(i).adjoint());
        }
    } else {
        const double g = eig.values(l) - eig.values(m);
        out.trans -= eig.values(l) * eig.values(m) / (N * g * g) *
                     (eig.vectors.col(l) * eig.vectors.col(m).transpose());
    }

    const Eigen::VectorXcd bh_l = deflation_matrix(in, l) * consensus_bias_vector(in, l);
    const Eigen::VectorXcd bh_m =
        (m == l) ? bh_l : (deflation_matrix(in, m) * consensus_bias_vector(in, m)).eval();
    out.herm += bh_l * bh_m.adjoint();
    out.trans += bh_l * bh_m.transpose();
    return out;
}

double armse_dpm(const AnalysisInputs& in, int L_sig) {
    if (L_sig < 1 || L_sig > in.sensor_count())
        throw ConfigError("armse_dpm: L_sig must lie in [1, M]");
    double acc = 0.0;
    for (int l = 0; l < L_sig; ++l)
        acc += eigvec_second_order(in, l, l).herm.trace().real();
    return std::sqrt(acc / static_cast<double>(L_sig));
}

} // namespace dce::perf
