#include "dce/array_model.hpp"

#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>

#include "dce/rng.hpp"

namespace dce::array {

using cd = std::complex<double>;

ArrayGeometry::ArrayGeometry(std::vector<Subarray> subarrays, double spacing)
    : subarrays_(std::move(subarrays)), spacing_(spacing) {
    if (subarrays_.empty()) throw ConfigError("geometry: at least one subarray required");
    if (!(spacing_ > 0.0)) throw ConfigError("geometry: spacing must be positive");
    if (subarrays_[0].xi.norm() != 0.0)
        throw ConfigError("geometry: first subarray must sit at the origin");
    offsets_.reserve(subarrays_.size());
    for (const auto& s : subarrays_) {
        if (s.sensors < 1) throw ConfigError("geometry: every subarray needs at least one sensor");
        offsets_.push_back(total_);
        total_ += s.sensors;
    }
}

void SourceScenario::validate() const {
    const int L = source_count();
    for (int l = 0; l < L; ++l) {
        if (!(doas_deg(l) > -90.0 && doas_deg(l) < 90.0))
            throw ConfigError("scenario: DOA must lie in (-90, 90) degrees");
        for (int m = l + 1; m < L; ++m)
            if (doas_deg(l) == doas_deg(m)) throw ConfigError("scenario: DOAs must be distinct");
    }
    if (source_cov.rows() != L || source_cov.cols() != L)
        throw ConfigError("scenario: source covariance must be L x L");
    if (L > 0 && !source_cov.isApprox(source_cov.adjoint(), 1e-12))
        throw ConfigError("scenario: source covariance must be Hermitian");
    if (L > 0) {
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(source_cov);
        if (es.eigenvalues().minCoeff() < -1e-12 * std::max(1.0, es.eigenvalues().cwiseAbs().maxCoeff()))
            throw ConfigError("scenario: source covariance must be PSD");
    }
    if (!(noise_var > 0.0)) throw ConfigError("scenario: noise variance must be positive");
}

SourceScenario SourceScenario::equal_power(Eigen::VectorXd doas_deg, double per_source_power,
                                           double noise_var) {
    SourceScenario s;
    const int L = static_cast<int>(doas_deg.size());
    s.doas_deg = std::move(doas_deg);
    s.source_cov = per_source_power * Eigen::MatrixXcd::Identity(L, L);
    s.noise_var = noise_var;
    s.validate();
    return s;
}

Eigen::MatrixXcd SnapshotSet::assembled() const {
    int M = 0;
    for (const auto& b : per_node) M += static_cast<int>(b.rows());
    Eigen::MatrixXcd X(M, sample_count);
    int r = 0;
    for (const auto& b : per_node) {
        X.middleRows(r, b.rows()) = b;
        r += static_cast<int>(b.rows());
    }
    return X;
}

Eigen::VectorXcd steering_vector(const ArrayGeometry& geom, int k, double theta_deg) {
    if (!(theta_deg > -90.0 && theta_deg < 90.0))
        throw ConfigError("steering_vector: DOA must lie in (-90, 90) degrees");
    const double th = theta_deg * M_PI / 180.0;
    const Eigen::Vector2d kappa(std::sin(th), std::cos(th));
    const cd displacement = std::exp(cd(0.0, M_PI * geom.position_of(k).dot(kappa)));
    const int Mk = geom.sensors_at(k);
    Eigen::VectorXcd a(Mk);
    for (int m = 0; m < Mk; ++m)
        a(m) = displacement * std::exp(cd(0.0, M_PI * m * geom.spacing() * std::sin(th)));
    return a;
}

Eigen::MatrixXcd full_steering_matrix(const ArrayGeometry& geom, const Eigen::VectorXd& doas_deg) {
    const int L = static_cast<int>(doas_deg.size());
    Eigen::MatrixXcd A(geom.total_sensors(), L);
    for (int l = 0; l < L; ++l)
        for (int k = 0; k < geom.subarray_count(); ++k)
            A.col(l).segment(geom.sensor_offset(k), geom.sensors_at(k)) =
                steering_vector(geom, k, doas_deg(l));
    return A;
}

Eigen::MatrixXcd true_covariance(const ArrayGeometry& geom, const SourceScenario& scen) {
    scen.validate();
    const int M = geom.total_sensors();
    Eigen::MatrixXcd R = scen.noise_var * Eigen::MatrixXcd::Identity(M, M);
    if (scen.source_count() > 0) {
        const Eigen::MatrixXcd A = full_steering_matrix(geom, scen.doas_deg);
        R += A * scen.source_cov * A.adjoint();
    }
    return ((R + R.adjoint()) * 0.5).eval();
}

SnapshotSet generate_snapshots(const ArrayGeometry& geom, const SourceScenario& scen, int N,
                               std::uint64_t seed) {
    scen.validate();
    if (N < 1) throw ConfigError("generate_snapshots: N must be >= 1");
    const int M = geom.total_sensors();
    const int L = scen.source_count();

    Eigen::MatrixXcd C;  // Cholesky factor of the source covariance
    if (L > 0) {
        Eigen::LLT<Eigen::MatrixXcd> llt(scen.source_cov);
        if (llt.info() != Eigen::Success)
            throw NumericalError("generate_snapshots: source covariance is not positive definite");
        C = llt.matrixL();
    }

    const rng::Stream src(seed, rng::kSourceSignals);
    const rng::Stream noise(seed, rng::kSensorNoise);
    const double sigma = std::sqrt(scen.noise_var);

    Eigen::MatrixXcd X(M, N);
    Eigen::MatrixXcd A;
    if (L > 0) A = full_steering_matrix(geom, scen.doas_deg);
    Eigen::VectorXcd w(L);
    for (int t = 0; t < N; ++t) {
        if (L > 0) {
            for (int l = 0; l < L; ++l)
                w(l) = src.cnormal(static_cast<std::uint64_t>(t) * L + l);
            X.col(t) = A * (C * w);
        } else {
            X.col(t).setZero();
        }
        for (int m = 0; m < M; ++m)
            X.col(t)(m) += sigma * noise.cnormal(static_cast<std::uint64_t>(t) * M + m);
    }

    SnapshotSet snaps;
    snaps.sample_count = N;
    snaps.per_node.reserve(geom.subarray_count());
    for (int k = 0; k < geom.subarray_count(); ++k)
        snaps.per_node.push_back(X.middleRows(geom.sensor_offset(k), geom.sensors_at(k)));
    return snaps;
}

Eigen::MatrixXcd sample_covariance(const SnapshotSet& snaps) {
    if (snaps.sample_count < 1) throw ConfigError("sample_covariance: empty snapshot set");
    const Eigen::MatrixXcd X = snaps.assembled();
    Eigen::MatrixXcd R = (X * X.adjoint()) / static_cast<double>(snaps.sample_count);
    return ((R + R.adjoint()) * 0.5).eval();
}

EigenPairs eig_hermitian(const Eigen::MatrixXcd& R) {
    const double scale = R.norm();
    if ((R - R.adjoint()).norm() > 1e-10 * std::max(scale, 1e-300))
        throw ConfigError("eig_hermitian: input is not Hermitian");
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(((R + R.adjoint()) * 0.5).eval());
    if (es.info() != Eigen::Success) throw NumericalError("eig_hermitian: solver failed");
    const int M = static_cast<int>(R.rows());
    EigenPairs out;
    out.values = es.eigenvalues().reverse();
    out.vectors = es.eigenvectors().rowwise().reverse();
    for (int i = 0; i < M; ++i) {
        int lead = 0;
        out.vectors.col(i).cwiseAbs().maxCoeff(&lead);
        const cd pivot = out.vectors(lead, i);
        if (std::abs(pivot) > 0) out.vectors.col(i) *= std::conj(pivot) / std::abs(pivot);
    }
    const double resid = (R * out.vectors - out.vectors * out.values.asDiagonal()).norm();
    if (resid > 1e-9 * std::max(scale, 1e-300))
        throw NumericalError("eig_hermitian: residual " + std::to_string(resid) + " exceeds bound");
    if ((out.vectors.adjoint() * out.vectors - Eigen::MatrixXcd::Identity(M, M)).norm() > 1e-9)
        throw NumericalError("eig_hermitian: eigenvectors not orthonormal");
    const double lead = std::abs(out.values(0));
    for (int i = 0; i + 1 < M; ++i)
        if (out.values(i) - out.values(i + 1) < 1e-8 * lead) out.near_degenerate = true;
    return out;
}

void dump_snapshots_csv(const SnapshotSet& snaps, const std::string& path) {
    std::ofstream f(path);
    if (!f) throw ConfigError("cannot open " + path + " for writing");
    f << "node,sensor,t,re,im\n";
    char buf[96];
    for (size_t k = 0; k < snaps.per_node.size(); ++k) {
        const auto& b = snaps.per_node[k];
        for (int m = 0; m < b.rows(); ++m)
            for (int t = 0; t < b.cols(); ++t) {
                std::snprintf(buf, sizeof buf, "%zu,%d,%d,%.17g,%.17g\n", k, m, t,
                              b(m, t).real(), b(m, t).imag());
                f << buf;
            }
    }
}

void dump_snapshots_binary(const SnapshotSet& snaps, const std::string& path) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw ConfigError("cannot open " + path + " for writing");
    const char magic[8] = {'D', 'C', 'E', 'S', 'N', 'A', 'P', '1'};
    f.write(magic, 8);
    const std::uint32_t K = static_cast<std::uint32_t>(snaps.per_node.size());
    const std::uint32_t N = static_cast<std::uint32_t>(snaps.sample_count);
    f.write(reinterpret_cast<const char*>(&K), 4);
    f.write(reinterpret_cast<const char*>(&N), 4);
    for (const auto& b : snaps.per_node) {
        const std::uint32_t Mk = static_cast<std::uint32_t>(b.rows());
        f.write(reinterpret_cast<const char*>(&Mk), 4);
    }
    // column-major complex doubles (re, im interleaved) per node block
    for (const auto& b : snaps.per_node)
        f.write(reinterpret_cast<const char*>(b.data()), static_cast<std::streamsize>(
                    sizeof(cd) * static_cast<size_t>(b.size())));
}

SnapshotSet load_snapshots_binary(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw ConfigError("cannot open " + path);
    char magic[8];
    f.read(magic, 8);
    if (!f || std::memcmp(magic, "DCESNAP1", 8) != 0)
        throw ConfigError(path + ": not a snapshot dump");
    std::uint32_t K = 0, N = 0;
    f.read(reinterpret_cast<char*>(&K), 4);
    f.read(reinterpret_cast<char*>(&N), 4);
    std::vector<std::uint32_t> mk(K);
    for (auto& m : mk) f.read(reinterpret_cast<char*>(&m), 4);
    SnapshotSet snaps;
    snaps.sample_count = static_cast<int>(N);
    for (std::uint32_t k = 0; k < K; ++k) {
        Eigen::MatrixXcd b(mk[k], N);
        f.read(reinterpret_cast<char*>(b.data()),
               static_cast<std::streamsize>(sizeof(cd) * static_cast<size_t>(b.size())));
        snaps.per_node.push_back(std::move(b));
    }
    if (!f) throw ConfigError(path + ": truncated snapshot dump");
    return snaps;
}

} // namespace dce::array
