#pragma once

#include <complex>
#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "dce/errors.hpp"

namespace dce::array {

struct Subarray {
    Eigen::Vector2d xi;  // position of the first sensor, in half-wavelengths
    int sensors = 0;     // M_k
};

// Partly calibrated planar array: identically oriented uniform linear
// subarrays with shared inter-sensor spacing d (half-wavelengths). The
// first subarray is the reference and sits at the origin.
class ArrayGeometry {
  public:
    ArrayGeometry(std::vector<Subarray> subarrays, double spacing);

    int subarray_count() const { return static_cast<int>(subarrays_.size()); }
    int sensors_at(int k) const { return subarrays_.at(k).sensors; }
    const Eigen::Vector2d& position_of(int k) const { return subarrays_.at(k).xi; }
    int total_sensors() const { return total_; }
    double spacing() const { return spacing_; }
    // index of subarray k's first sensor in the stacked sensor ordering
    int sensor_offset(int k) const { return offsets_.at(k); }

  private:
    std::vector<Subarray> subarrays_;
    std::vector<int> offsets_;
    double spacing_;
    int total_ = 0;
};

struct SourceScenario {
    Eigen::VectorXd doas_deg;     // distinct, each in (-90, 90)
    Eigen::MatrixXcd source_cov;  // L x L Hermitian PSD
    double noise_var = 1.0;

    int source_count() const { return static_cast<int>(doas_deg.size()); }
    void validate() const;

    // Equal-powered uncorrelated sources at the given per-source power.
    static SourceScenario equal_power(Eigen::VectorXd doas_deg, double per_source_power,
                                      double noise_var);
};

// N snapshots partitioned per node: block k is sensors_at(k) x N.
struct SnapshotSet {
    std::vector<Eigen::MatrixXcd> per_node;
    int sample_count = 0;

    Eigen::MatrixXcd assembled() const;
};

struct EigenPairs {
    Eigen::VectorXd values;    // descending
    Eigen::MatrixXcd vectors;  // orthonormal columns, canonical gauge
    bool near_degenerate = false;  // some consecutive gap < 1e-8 * lambda_1
};

Eigen::VectorXcd steering_vector(const ArrayGeometry& geom, int k, double theta_deg);
Eigen::MatrixXcd full_steering_matrix(const ArrayGeometry& geom, const Eigen::VectorXd& doas_deg);
Eigen::MatrixXcd true_covariance(const ArrayGeometry& geom, const SourceScenario& scen);

SnapshotSet generate_snapshots(const ArrayGeometry& geom, const SourceScenario& scen, int N,
                               std::uint64_t seed);

Eigen::MatrixXcd sample_covariance(const SnapshotSet& snaps);

// Hermitian eigendecomposition, eigenvalues descending, each eigenvector's
// phase fixed so its largest-magnitude entry is real positive.
EigenPairs eig_hermitian(const Eigen::MatrixXcd& R);

// Snapshot dumps for cross-implementation tests. CSV columns:
// node,sensor,t,re,im (sensor indices local to the node, all 0-based).
// The binary layout is described in the README.
void dump_snapshots_csv(const SnapshotSet& snaps, const std::string& path);
void dump_snapshots_binary(const SnapshotSet& snaps, const std::string& path);
SnapshotSet load_snapshots_binary(const std::string& path);

} // namespace dce::array
