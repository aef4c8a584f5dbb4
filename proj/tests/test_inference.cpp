#include <doctest.h>

#include <cmath>
#include <random>

#include "lsm/errors.hpp"
#include "lsm/inference.hpp"
#include "lsm/simulation.hpp"
#include "test_util.hpp"

using namespace lsm;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

LatentState random_state(Eigen::Index n, Eigen::Index k, std::mt19937_64& rng) {
    return center_reparam({test::uniform_matrix(n, k, rng, -1.0, 1.0),
                           test::uniform_matrix(n, 1, rng, -0.3, 0.3).col(0)});
}

} // namespace

TEST_CASE("normal helpers") {
    CHECK(normal_cdf(0.0) == 0.5);
    CHECK(normal_quantile(0.975) == doctest::Approx(1.959963984540054).epsilon(1e-14));
    CHECK(two_sided_p(1.959963984540054) == doctest::Approx(0.05).epsilon(1e-12));
    CHECK(normal_cdf(normal_quantile(0.3)) == doctest::Approx(0.3).epsilon(1e-14));
    const InferenceReport r = make_report(Target::Entry, "x", 2.0, 0.5, 0.95);
    CHECK(r.z == 4.0);
    CHECK(r.ci_low == doctest::Approx(2.0 - 0.5 * 1.959963984540054));
    CHECK(r.ci_high == doctest::Approx(2.0 + 0.5 * 1.959963984540054));
    CHECK(make_report(Target::Entry, "x", 2.0, 0.5, 0.95, 2.0).p_value == 1.0);
    CHECK_THROWS_AS(make_report(Target::Entry, "x", 1, 1, 1.5), DataError);
    CHECK(target_name(Target::EdgeMean) == "edge_mean");
}

TEST_CASE("entry_se") {
    SUBCASE("degree-only Gaussian model") {
        const Eigen::Index n = 9;
        LatentState Y{MatrixXd::Zero(n, 0), VectorXd::Zero(n)};
        const Network A = make_network(MatrixXd::Zero(n, n));
        CHECK(entry_se(Y, A, EdgeFamily::Gaussian, 3, 0) == doctest::Approx(1.0 / std::sqrt(n - 1.0)));
    }
    SUBCASE("rank-one information is singular") {
        LatentState Y{MatrixXd(2, 1), VectorXd::Zero(2)};
        Y.Z << 0, 2;
        const Network A = make_network(MatrixXd::Zero(2, 2));
        try {
            entry_se(Y, A, EdgeFamily::Gaussian, 0, 0);
            FAIL("expected NumericalError");
        } catch (const NumericalError& e) {
            CHECK(std::string(e.what()).find("information singular at node 0") != std::string::npos);
        }
    }
    SUBCASE("matches a dense inverse") {
        std::mt19937_64 rng(1);
        const LatentState Y = random_state(10, 2, rng);
        const Network A = test::random_network(Y, EdgeFamily::Poisson, rng);
        const MatrixXd inv = sigma_i(Y, A, EdgeFamily::Poisson, 4).inverse();
        for (Eigen::Index c = 0; c <= 2; ++c) {
            CHECK(entry_se(Y, A, EdgeFamily::Poisson, 4, c) ==
                  doctest::Approx(std::sqrt(inv(c, c))).epsilon(1e-12));
        }
        CHECK_THROWS_AS(entry_se(Y, A, EdgeFamily::Poisson, 4, 3), DataError);
    }
    SUBCASE("se shrinks like n^{-1/2}") {
        for (std::uint64_t seed = 1; seed <= 20; ++seed) {
            double se[2];
            int slot = 0;
            for (Eigen::Index n : {200, 800}) {
                const LatentState truth = gen_truth({n, 2, EdgeFamily::Gaussian, seed});
                const Network A = sample_network(truth, EdgeFamily::Gaussian, seed + 100);
                se[slot++] = entry_se(truth, A, EdgeFamily::Gaussian, 0, 0);
            }
            const double ratio = se[1] / se[0];
            CHECK(ratio >= 0.4);
            CHECK(ratio <= 0.6);
        }
    }
}

TEST_CASE("delta_method_se") {
    std::mt19937_64 rng(2);
    const LatentState Y = random_state(12, 2, rng);
    const Network A = test::random_network(Y, EdgeFamily::Bernoulli, rng);
    const EdgeFamily f = EdgeFamily::Bernoulli;

    VectorXd e = VectorXd::Zero(6);
    e(4) = 1.0;
    CHECK(delta_method_se(Y, A, f, {2, 7}, e) == doctest::Approx(entry_se(Y, A, f, 7, 1)).epsilon(1e-13));
    CHECK(delta_method_se(Y, A, f, {2, 7}, VectorXd::Zero(6)) == 0.0);
    CHECK_THROWS_AS(delta_method_se(Y, A, f, {2, 7}, VectorXd::Zero(5)), DataError);

    // Blockwise inversion against the dense inverse of the full block matrix.
    const VectorXd g = test::uniform_matrix(9, 1, rng).col(0);
    const MatrixXd dense = sigma_block(Y, A, f, {0, 5, 11}).block.inverse();
    const double oracle = std::sqrt(g.dot(dense * g));
    CHECK(delta_method_se(Y, A, f, {0, 5, 11}, g) == doctest::Approx(oracle).epsilon(1e-10));
}

TEST_CASE("edge_mean_se") {
    std::mt19937_64 rng(3);
    for (EdgeFamily f : {EdgeFamily::Poisson, EdgeFamily::Bernoulli, EdgeFamily::Gaussian}) {
        const LatentState Y = random_state(11, 2, rng);
        const Network A = test::random_network(Y, f, rng);
        const Eigen::Index i = 2, j = 8;
        const double t = Y.alpha(i) + Y.alpha(j) + Y.Z.row(i).dot(Y.Z.row(j));
        VectorXd g(6);
        g << Y.Z.row(j).transpose(), 1.0, Y.Z.row(i).transpose(), 1.0;
        g *= mean_derivative(f, t);
        const double se = edge_mean_se(Y, A, f, i, j);
        CHECK(se == doctest::Approx(delta_method_se(Y, A, f, {i, j}, g)).epsilon(1e-12));
        CHECK(edge_mean_se(Y, A, f, j, i) == doctest::Approx(se).epsilon(1e-12));

        const LatentState R{Y.Z * test::random_orthogonal(2, rng), Y.alpha};
        CHECK(edge_mean_se(R, A, f, i, j) == doctest::Approx(se).epsilon(1e-10));
        CHECK_THROWS_AS(edge_mean_se(Y, A, f, 3, 3), DataError);
    }
}

TEST_CASE("sigma_inverses agree with per-node inversion") {
    std::mt19937_64 rng(4);
    const LatentState Y = random_state(9, 2, rng);
    const Network A = test::random_network(Y, EdgeFamily::Poisson, rng);
    const auto inv = sigma_inverses(Y, A, EdgeFamily::Poisson);
    REQUIRE(inv.size() == 9);
    for (Eigen::Index i = 0; i < 9; ++i) {
        CHECK((inv[static_cast<std::size_t>(i)] - sigma_i(Y, A, EdgeFamily::Poisson, i).inverse()).norm() <
              1e-10 * inv[static_cast<std::size_t>(i)].norm());
    }
}

TEST_CASE("bh_adjust") {
    const auto r = bh_adjust({0.01, 0.04, 0.03, 0.20}, 0.05);
    CHECK(r == std::vector<bool>{true, false, false, false});
    CHECK(bh_adjust({1, 1, 1}, 0.05) == std::vector<bool>{false, false, false});
    CHECK(bh_adjust({0, 0, 0}, 0.05) == std::vector<bool>{true, true, true});
    // Step-up: the largest passing rank carries smaller p-values with it.
    CHECK(bh_adjust({0.04, 0.001, 0.03, 0.035}, 0.05) == std::vector<bool>{true, true, true, true});
    CHECK(bh_adjust({}, 0.05).empty());
}

TEST_CASE("compare_networks") {
    std::mt19937_64 rng(5);
    const LatentState Y = random_state(10, 2, rng);
    const Network A = test::random_network(Y, EdgeFamily::Poisson, rng);
    const FittedNetwork one{Y, A, EdgeFamily::Poisson};

    SUBCASE("identical fits") {
        const ComparisonResult r = compare_networks(one, one, 0.05);
        CHECK(r.pairs.size() == 45);
        for (const auto& p : r.pairs) {
            CHECK(p.diff == 0.0);
            CHECK_FALSE(p.rejected);
            CHECK(p.i < p.j);
        }
        CHECK(r.rejection_rate.norm() == 0.0);
    }
    SUBCASE("se matches the delta method on each network") {
        const LatentState Y2 = random_state(10, 2, rng);
        const Network A2 = test::random_network(Y2, EdgeFamily::Poisson, rng);
        const ComparisonResult r = compare_networks(one, {Y2, A2, EdgeFamily::Poisson}, 0.05);
        const auto& p = r.pairs[7];
        auto grad = [](const LatentState& S, Eigen::Index i, Eigen::Index j) {
            VectorXd g = VectorXd::Zero(6);
            g.head(2) = S.Z.row(j).transpose();
            g.segment(3, 2) = S.Z.row(i).transpose();
            return g;
        };
        const double s1 = delta_method_se(Y, A, EdgeFamily::Poisson, {p.i, p.j}, grad(Y, p.i, p.j));
        const double s2 = delta_method_se(Y2, A2, EdgeFamily::Poisson, {p.i, p.j}, grad(Y2, p.i, p.j));
        CHECK(p.se == doctest::Approx(std::sqrt(s1 * s1 + s2 * s2)).epsilon(1e-12));
        CHECK(p.diff == doctest::Approx(Y.Z.row(p.i).dot(Y.Z.row(p.j)) - Y2.Z.row(p.i).dot(Y2.Z.row(p.j))));

        // Rejection rates count rejected pairs per node over n - 1.
        VectorXd rate = VectorXd::Zero(10);
        for (const auto& q : r.pairs) {
            if (q.rejected) {
                rate(q.i) += 1.0 / 9;
                rate(q.j) += 1.0 / 9;
            }
        }
        CHECK((rate - r.rejection_rate).norm() < 1e-14);
    }
    SUBCASE("labels are matched, not positions") {
        std::vector<Eigen::Index> perm{3, 0, 1, 2, 4, 5, 6, 7, 9, 8};
        MatrixXd W(10, 10);
        LatentState P{MatrixXd(10, 2), VectorXd(10)};
        std::vector<std::string> labels(10);
        for (Eigen::Index a = 0; a < 10; ++a) {
            P.Z.row(a) = Y.Z.row(perm[a]);
            P.alpha(a) = Y.alpha(perm[a]);
            labels[a] = A.labels[perm[a]];
            for (Eigen::Index b = 0; b < 10; ++b) {
                W(a, b) = A.weights(perm[a], perm[b]);
            }
        }
        const ComparisonResult r = compare_networks(one, {P, make_network(W, labels), EdgeFamily::Poisson}, 0.05);
        for (const auto& p : r.pairs) {
            CHECK(std::abs(p.diff) < 1e-14);
        }
    }
    SUBCASE("unmatched labels are listed") {
        std::vector<std::string> labels = A.labels;
        labels[4] = "zz";
        try {
            compare_networks(one, {Y, make_network(A.weights, labels), EdgeFamily::Poisson}, 0.05);
            FAIL("expected DataError");
        } catch (const DataError& e) {
            const std::string msg = e.what();
            CHECK(msg.find("zz") != std::string::npos);
            CHECK(msg.find(A.labels[4]) != std::string::npos);
        }
    }
}
