#include <doctest.h>

#include <cmath>
#include <random>

#include "lsm/errors.hpp"
#include "lsm/rasvt.hpp"
#include "lsm/simulation.hpp"
#include "test_util.hpp"

using namespace lsm;
using Eigen::MatrixXd;
using Eigen::VectorXd;

TEST_CASE("default_config") {
    SUBCASE("gamma formula at n = 1000, k = 2") {
        MatrixXd W = MatrixXd::Ones(1000, 1000);
        W.diagonal().setZero();
        const RasvtConfig cfg = default_config(make_network(W), 2);
        CHECK(cfg.gamma == 31623);
        const double upsilon = 999.0 / 1000.0;
        CHECK(cfg.tau == doctest::Approx(std::sqrt(upsilon * 1000.0 * std::log(1000.0))).epsilon(1e-14));
    }
    SUBCASE("upsilon with all-ones off-diagonal, n = 10") {
        MatrixXd W = MatrixXd::Ones(10, 10);
        W.diagonal().setZero();
        const RasvtConfig cfg = default_config(make_network(W), 1);
        CHECK(cfg.tau == doctest::Approx(std::sqrt(0.9 * 10.0 * std::log(10.0))).epsilon(1e-14));
    }
    SUBCASE("gamma clamped to at least one for n = 3") {
        MatrixXd W = MatrixXd::Ones(3, 3);
        W.diagonal().setZero();
        const RasvtConfig cfg = default_config(make_network(W), 2);
        CHECK(cfg.gamma >= 1);
        CHECK(2 * cfg.gamma < 9);
        CHECK_NOTHROW(cfg.validate(3));
    }
    SUBCASE("degenerate network") {
        try {
            default_config(make_network(MatrixXd::Zero(5, 5)), 2);
            FAIL("expected DataError");
        } catch (const DataError& e) {
            CHECK(std::string(e.what()).find("degenerate network") != std::string::npos);
        }
    }
}

TEST_CASE("svt") {
    std::mt19937_64 rng(1);
    MatrixXd B = test::uniform_matrix(6, 6, rng);
    const MatrixXd S = B + B.transpose();
    const double s1 = Eigen::JacobiSVD<MatrixXd>(S).singularValues()(0);
    CHECK(svt(S, s1 * (1 + 1e-12)).norm() == 0.0);
    CHECK((svt(S, 1e-300) - S).norm() < 1e-10);

    VectorXd u = test::uniform_matrix(5, 1, rng).col(0).normalized();
    const MatrixXd A = 5.0 * u * u.transpose();
    CHECK((svt(A, 3.0) - A).norm() < 1e-12);

    // Non-symmetric input takes the SVD path.
    const MatrixXd R = test::uniform_matrix(5, 5, rng);
    CHECK((svt(R, 1e-300) - R).norm() < 1e-10);

    // Symmetric path agrees with a direct SVD oracle.
    Eigen::JacobiSVD<MatrixXd> svd(S, Eigen::ComputeFullU | Eigen::ComputeFullV);
    const double tau = 0.5 * s1;
    MatrixXd oracle = MatrixXd::Zero(6, 6);
    for (int c = 0; c < 6; ++c) {
        if (svd.singularValues()(c) > tau) {
            oracle += svd.singularValues()(c) * svd.matrixU().col(c) * svd.matrixV().col(c).transpose();
        }
    }
    CHECK((svt(S, tau) - oracle).norm() < 1e-10);
}

TEST_CASE("adaptive_interval") {
    SUBCASE("Poisson 2x2 grid, gamma = 1") {
        MatrixXd E(2, 2);
        E << -1, 0.5, 2, 3;
        const Interval r = adaptive_interval(E, 1, EdgeFamily::Poisson);
        // Trimmed range [E_(1), E_(3)] = [-1, 2]; in-image range [0.5, 3].
        CHECK(r.lo == 0.5);
        CHECK(r.hi == 2.0);
    }
    SUBCASE("Bernoulli with nothing inside (0, 1)") {
        const MatrixXd E = MatrixXd::Constant(3, 3, 1.2);
        try {
            adaptive_interval(E, 1, EdgeFamily::Bernoulli);
            FAIL("expected NumericalError");
        } catch (const NumericalError& e) {
            CHECK(std::string(e.what()).find("initialization infeasible") != std::string::npos);
        }
    }
    SUBCASE("empty intersection") {
        MatrixXd E(3, 3);
        E << -5, -4, -3, -2, -1, -0.5, 0.2, 7, 8;
        try {
            adaptive_interval(E, 4, EdgeFamily::Poisson);
            FAIL("expected NumericalError");
        } catch (const NumericalError& e) {
            CHECK(std::string(e.what()).find("trimming too aggressive") != std::string::npos);
        }
    }
    SUBCASE("Gaussian keeps the trimmed order statistics") {
        MatrixXd E(3, 3);
        E << 9, -4, 1, 2, 3, 0, -7, 5, 6;
        const Interval r = adaptive_interval(E, 2, EdgeFamily::Gaussian);
        // Sorted: -7 -4 0 1 2 3 5 6 9, so E_(2) = -4 and E_(7) = 5.
        CHECK(r.lo == -4.0);
        CHECK(r.hi == 5.0);
    }
    SUBCASE("clamped entries map through mean_inverse") {
        MatrixXd E(2, 2);
        E << 0.0, 0.2, 0.7, 1.0;
        const Interval r = adaptive_interval(E, 1, EdgeFamily::Bernoulli);
        CHECK(r.lo == 0.2);
        CHECK(r.hi == 0.7);
        CHECK_NOTHROW(mean_inverse(EdgeFamily::Bernoulli, r.lo));
    }
    CHECK_THROWS_AS(adaptive_interval(MatrixXd::Zero(2, 2), 2, EdgeFamily::Gaussian), DataError);
}

TEST_CASE("degree_from_theta solves the linear system") {
    std::mt19937_64 rng(4);
    const Eigen::Index n = 9;
    MatrixXd T = test::uniform_matrix(n, n, rng, -2.0, 2.0);
    T = (T + T.transpose()).eval();
    const VectorXd a = detail::degree_from_theta(T);
    const MatrixXd M = n * MatrixXd::Identity(n, n) + MatrixXd::Ones(n, n);
    const VectorXd oracle = M.partialPivLu().solve(T.rowwise().sum());
    CHECK((a - oracle).norm() < 1e-12);

    const MatrixXd C = MatrixXd::Constant(n, n, 1.4);
    const VectorXd ac = detail::degree_from_theta(C);
    CHECK((ac - VectorXd::Constant(n, 0.7)).norm() < 1e-14);
}

TEST_CASE("ra_svt on a constant-mean network") {
    const Eigen::Index n = 12;
    MatrixXd W = MatrixXd::Constant(n, n, 0.3);
    W.diagonal().setZero();
    const Network A = make_network(W);
    RasvtConfig cfg;
    cfg.k = 2;
    cfg.tau = 1.0;
    cfg.gamma = 1;
    const LatentState Y = ra_svt(A, EdgeFamily::Gaussian, cfg);
    CHECK(Y.Z.colwise().sum().norm() < 1e-12);
    const MatrixXd T = theta(Y);
    // All off-diagonal Theta_ij collapse to the common value of the clamped estimate.
    double lo = 1e300, hi = -1e300;
    for (Eigen::Index j = 0; j < n; ++j) {
        for (Eigen::Index i = 0; i < j; ++i) {
            lo = std::min(lo, T(i, j));
            hi = std::max(hi, T(i, j));
        }
    }
    CHECK(hi - lo < 1e-10);
}

TEST_CASE("ra_svt recovers a planted Gaussian model") {
    TruthSpec spec{150, 2, EdgeFamily::Gaussian, 3};
    const LatentState truth = gen_truth(spec);
    const Network A = sample_network(truth, spec.family, 99);
    const LatentState Y = ra_svt(A, spec.family, default_config(A, 2));
    CHECK(Y.Z.colwise().sum().cwiseAbs().maxCoeff() < 1e-10);
    const LatentState flat{MatrixXd::Zero(150, 2), VectorXd::Zero(150)};
    CHECK(dist2(Y, truth) < 0.25 * dist2(flat, truth));
    CHECK_THROWS_AS(ra_svt(A, spec.family, RasvtConfig{-1.0, 1, 2}), DataError);
}
