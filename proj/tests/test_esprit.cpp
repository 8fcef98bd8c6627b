#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "dce/esprit.hpp"
#include "dce/harness.hpp"
#include "dce/rng.hpp"

using namespace dce;
using cd = std::complex<double>;

namespace {

net::Topology paper_topology() {
    return net::Topology({{1, 2}, {0, 2}, {0, 1, 3}, {2, 4, 5}, {3, 5}, {3, 4}});
}

array::ArrayGeometry paper_geometry() {
    std::vector<array::Subarray> subs;
    const double xy[6][2] = {{0, 0}, {0.45, 0.99}, {3.02, 0.45}, {5.61, 0.90}, {8.03, 1.46}, {8.70, 0.50}};
    for (auto& p : xy) {
        array::Subarray s;
        s.xi << p[0], p[1];
        s.sensors = 2;
        subs.push_back(s);
    }
    return array::ArrayGeometry(subs, 1.0);
}

array::SourceScenario paper_scenario(double power = 10.0) {
    Eigen::VectorXd d(3);
    d << -14.0, -10.0, 5.0;
    return array::SourceScenario::equal_power(d, power, 1.0);
}

} // namespace

TEST_CASE("selection pair blocks") {
    const auto geom = paper_geometry();
    const auto sel = esprit::build_selection_pair(geom);
    CHECK(sel.upper.rows() == 6);
    CHECK(sel.lower.rows() == 6);
    // per subarray: [1 0] and [0 1]
    for (int k = 0; k < 6; ++k) {
        CHECK(sel.upper(k, 2 * k) == 1.0);
        CHECK(sel.upper.row(k).sum() == 1.0);
        CHECK(sel.lower(k, 2 * k + 1) == 1.0);
        CHECK(sel.lower.row(k).sum() == 1.0);
        CHECK(sel.contributes[k]);
    }

    // single subarray with three sensors
    std::vector<array::Subarray> subs(1);
    subs[0].xi << 0, 0;
    subs[0].sensors = 3;
    const auto s3 = esprit::build_selection_pair(array::ArrayGeometry(subs, 1.0));
    CHECK(s3.upper.rows() == 2);
    CHECK(s3.upper(0, 0) == 1.0);
    CHECK(s3.upper(1, 1) == 1.0);
    CHECK(s3.lower(0, 1) == 1.0);
    CHECK(s3.lower(1, 2) == 1.0);

    // a single-sensor subarray contributes nothing; all-single errors out
    std::vector<array::Subarray> mixed(2);
    mixed[0].xi << 0, 0;
    mixed[0].sensors = 2;
    mixed[1].xi << 3, 1;
    mixed[1].sensors = 1;
    const auto sm = esprit::build_selection_pair(array::ArrayGeometry(mixed, 1.0));
    CHECK(sm.upper.rows() == 1);
    CHECK_FALSE(sm.contributes[1]);
    std::vector<array::Subarray> singles(2);
    singles[0].xi << 0, 0;
    singles[0].sensors = 1;
    singles[1].xi << 2, 0;
    singles[1].sensors = 1;
    CHECK_THROWS_AS(esprit::build_selection_pair(array::ArrayGeometry(singles, 1.0)), ConfigError);
}

TEST_CASE("noiseless subspace recovers the shifts and DOAs exactly") {
    const auto geom = paper_geometry();
    const auto scen = paper_scenario();
    const auto sel = esprit::build_selection_pair(geom);
    const Eigen::MatrixXcd R = array::true_covariance(geom, scen);
    const Eigen::MatrixXcd Us = array::eig_hermitian(R).vectors.leftCols(3);

    const auto psi = esprit::psi_from_subspace(Us, sel);
    Eigen::VectorXd sorted = scen.doas_deg;
    std::sort(sorted.data(), sorted.data() + 3);
    for (int l = 0; l < 3; ++l) {
        const double th = sorted(l) * M_PI / 180.0;
        const cd expect = std::exp(cd(0, M_PI * std::sin(th)));
        CHECK(std::abs(psi.eigenvalues(l) - expect) < 1e-9);
        // left-right normalization q_l^T r_l = 1
        const cd qr = (psi.left.col(l).transpose() * psi.right.col(l))(0, 0);
        CHECK(std::abs(qr - cd(1, 0)) < 1e-10);
    }
    const auto doas = esprit::extract_doas(psi, geom.spacing());
    for (int l = 0; l < 3; ++l) {
        CHECK(doas.valid[l]);
        CHECK(doas.doas_deg(l) == doctest::Approx(sorted(l)).epsilon(1e-9));
    }
}

TEST_CASE("extract_doas closed forms") {
    esprit::PsiEstimate psi;
    psi.matrix = Eigen::MatrixXcd::Identity(2, 2);
    psi.eigenvalues.resize(2);
    psi.eigenvalues << cd(1, 0), cd(0, 1);
    psi.right = Eigen::MatrixXcd::Identity(2, 2);
    psi.left = Eigen::MatrixXcd::Identity(2, 2);
    const auto d = esprit::extract_doas(psi, 1.0);
    CHECK(d.doas_deg(0) == doctest::Approx(0.0));
    CHECK(d.doas_deg(1) == doctest::Approx(30.0));

    // |arg| > pi d flags the estimate instead of failing
    esprit::PsiEstimate bad = psi;
    bad.eigenvalues(1) = std::exp(cd(0, 0.9 * M_PI));
    const auto db = esprit::extract_doas(bad, 0.5);
    CHECK(db.valid[0]);
    CHECK_FALSE(db.valid[1]);
}

TEST_CASE("basis invariance of the subspace-to-psi map") {
    const auto geom = paper_geometry();
    const auto scen = paper_scenario();
    const auto sel = esprit::build_selection_pair(geom);
    const Eigen::MatrixXcd Us = array::eig_hermitian(array::true_covariance(geom, scen))
                                    .vectors.leftCols(3);
    rng::Stream st(4, 4);
    Eigen::MatrixXcd G(3, 3);
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) G(i, j) = st.cnormal(static_cast<std::uint64_t>(3 * i + j));
    REQUIRE(std::abs(G.determinant()) > 1e-3);
    const auto p1 = esprit::psi_from_subspace(Us, sel);
    const auto p2 = esprit::psi_from_subspace(Us * G, sel);
    for (int l = 0; l < 3; ++l)
        CHECK(std::abs(p1.eigenvalues(l) - p2.eigenvalues(l)) < 1e-9);
}

TEST_CASE("noiseless exactness holds for random partly calibrated geometries") {
    rng::Stream st(12, 6);
    for (int trial = 0; trial < 10; ++trial) {
        std::vector<array::Subarray> subs;
        const int K = 3 + static_cast<int>(st.uniform(1000 + trial) * 4);
        for (int k = 0; k < K; ++k) {
            array::Subarray s;
            if (k == 0)
                s.xi << 0, 0;
            else
                s.xi << 10.0 * st.uniform(2000 + 17 * trial + k), 5.0 * st.uniform(3000 + 17 * trial + k);
            s.sensors = 2 + static_cast<int>(st.uniform(4000 + 17 * trial + k) * 2);
            subs.push_back(s);
        }
        const array::ArrayGeometry geom(subs, 1.0);
        Eigen::VectorXd doas(2);
        doas << -35.0 + 20.0 * st.uniform(5000 + trial), 10.0 + 30.0 * st.uniform(6000 + trial);
        const auto scen = array::SourceScenario::equal_power(doas, 4.0, 1.0);
        const Eigen::MatrixXcd Us =
            array::eig_hermitian(array::true_covariance(geom, scen)).vectors.leftCols(2);
        const auto d = esprit::desprit_from_subspace(Us, esprit::build_selection_pair(geom), 1.0);
        Eigen::VectorXd sorted = doas;
        std::sort(sorted.data(), sorted.data() + 2);
        for (int l = 0; l < 2; ++l)
            CHECK(std::abs(d.doas_deg(l) - sorted(l)) < 1e-6);
    }
}

TEST_CASE("centralized esprit on exact and sampled covariances") {
    const auto geom = paper_geometry();
    const auto scen = paper_scenario();
    const auto d = esprit::centralized_esprit(array::true_covariance(geom, scen), geom, 3);
    Eigen::VectorXd sorted = scen.doas_deg;
    std::sort(sorted.data(), sorted.data() + 3);
    for (int l = 0; l < 3; ++l) CHECK(std::abs(d.doas_deg(l) - sorted(l)) < 1e-6);

    const auto snaps = array::generate_snapshots(geom, scen, 100, 31);
    const auto ds = esprit::centralized_esprit(array::sample_covariance(snaps), geom, 3);
    for (int l = 0; l < 3; ++l) CHECK(std::abs(ds.doas_deg(l) - sorted(l)) < 3.0);
}

TEST_CASE("desprit modes agree and nodes coincide at large P3") {
    const auto topo = paper_topology();
    const auto geom = paper_geometry();
    const auto W = net::build_metropolis_weights(topo);
    const auto snaps = array::generate_snapshots(geom, paper_scenario(), 100, 88);

    dpm::DpmConfig cfg;
    cfg.P = 10;
    cfg.P1 = cfg.P2 = 500;
    cfg.P3 = 500;
    cfg.Q = 50;
    cfg.seed = 2;
    net::AcAccounting acc_full, acc_a3;
    const auto full = esprit::desprit(snaps, topo, W, geom, 3, cfg, esprit::DespritMode::full,
                                      &acc_full);
    const auto a3 = esprit::desprit(snaps, topo, W, geom, 3, cfg, esprit::DespritMode::a3_shortcut,
                                    &acc_a3);
    REQUIRE(full.size() == 6);
    REQUIRE(a3.size() == 6);
    for (int k = 0; k < 6; ++k) {
        CHECK(full[k].solver_ok);
        for (int l = 0; l < 3; ++l)
            CHECK(std::abs(full[k].doas_deg(l) - a3[k].doas_deg(l)) < 1e-6);
    }
    // per-node disagreement shrinks geometrically with P3
    dpm::DpmConfig shallow = cfg;
    shallow.P3 = 30;
    const auto rough = esprit::desprit(snaps, topo, W, geom, 3, shallow, esprit::DespritMode::full);
    double dev_rough = 0.0, dev_fine = 0.0;
    for (int k = 0; k < 6; ++k)
        for (int l = 0; l < 3; ++l) {
            dev_rough = std::max(dev_rough, std::abs(rough[k].doas_deg(l) - a3[0].doas_deg(l)));
            dev_fine = std::max(dev_fine, std::abs(full[k].doas_deg(l) - a3[0].doas_deg(l)));
        }
    CHECK(dev_fine < 1e-8);
    CHECK(dev_rough > dev_fine);
    CHECK(dev_rough < 0.3);

    // both modes charge the consensus assembly of C and F
    CHECK(acc_full.instances == acc_a3.instances);
    CHECK(acc_full.iterations == acc_a3.iterations);
}

TEST_CASE("single-node desprit equals centralized esprit") {
    std::vector<array::Subarray> one(1);
    one[0].xi << 0, 0;
    one[0].sensors = 6;
    const array::ArrayGeometry g1(one, 1.0);
    const net::Topology t1(std::vector<std::vector<int>>{{}});
    Eigen::MatrixXd w1(1, 1);
    w1 << 1.0;
    const net::WeightMatrix W1(w1, t1);
    Eigen::VectorXd d(2);
    d << -20.0, 12.0;
    const auto scen = array::SourceScenario::equal_power(d, 8.0, 1.0);
    const auto snaps = array::generate_snapshots(g1, scen, 200, 55);

    dpm::DpmConfig cfg;
    cfg.P = 5;
    cfg.Q = 300;
    cfg.seed = 9;
    const auto dec = esprit::desprit(snaps, t1, W1, g1, 2, cfg);
    const auto cent = esprit::centralized_esprit(array::sample_covariance(snaps), g1, 2);
    for (int l = 0; l < 2; ++l)
        CHECK(std::abs(dec[0].doas_deg(l) - cent.doas_deg(l)) < 1e-6);
}

TEST_CASE("rank-deficient upper group is reported") {
    const auto geom = paper_geometry();
    const auto sel = esprit::build_selection_pair(geom);
    Eigen::MatrixXcd U = Eigen::MatrixXcd::Zero(12, 3);
    // subspace supported only on lower sensors: upper rows vanish
    for (int k = 0; k < 6; ++k) U(2 * k + 1, k % 3) = 1.0;
    CHECK_THROWS_AS(esprit::psi_from_subspace(U, sel), NumericalError);
}
