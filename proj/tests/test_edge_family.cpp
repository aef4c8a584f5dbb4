#include <doctest.h>

#include <cmath>
#include <random>

#include "lsm/edge_family.hpp"

using namespace lsm;

namespace {

const EdgeFamily kFamilies[] = {EdgeFamily::Poisson, EdgeFamily::Bernoulli, EdgeFamily::Gaussian};

double sample_x(EdgeFamily f, std::mt19937_64& rng) {
    switch (f) {
    case EdgeFamily::Poisson:
        return static_cast<double>(std::uniform_int_distribution<int>(0, 6)(rng));
    case EdgeFamily::Bernoulli:
        return static_cast<double>(std::uniform_int_distribution<int>(0, 1)(rng));
    case EdgeFamily::Gaussian:
        break;
    }
    return std::normal_distribution<double>(0.0, 2.0)(rng);
}

// Difference of the unnormalized nll in extended precision.
double wide_nll_delta(EdgeFamily f, double t, double x, double delta) {
    const long double lt = t;
    const long double ls = lt + static_cast<long double>(delta);
    long double a = 0, b = 0;
    switch (f) {
    case EdgeFamily::Poisson:
        a = std::exp(ls) - x * ls;
        b = std::exp(lt) - x * lt;
        break;
    case EdgeFamily::Bernoulli:
        a = std::log1p(std::exp(ls)) - x * ls;
        b = std::log1p(std::exp(lt)) - x * lt;
        break;
    case EdgeFamily::Gaussian:
        a = 0.5L * (x - ls) * (x - ls);
        b = 0.5L * (x - lt) * (x - lt);
        break;
    }
    return static_cast<double>(a - b);
}

} // namespace

TEST_CASE("log_density at trivial points") {
    CHECK(log_density(EdgeFamily::Poisson, 0.0, 0.0) == doctest::Approx(-1.0).epsilon(1e-15));
    CHECK(log_density(EdgeFamily::Bernoulli, 0.0, 1.0) == doctest::Approx(-std::log(2.0)).epsilon(1e-15));
    CHECK(log_density(EdgeFamily::Gaussian, 1.5, 1.5) ==
          doctest::Approx(-std::log(std::sqrt(2.0 * M_PI))).epsilon(1e-15));
    // log(3!) term and log(1 + e^2)
    CHECK(log_density(EdgeFamily::Poisson, 0.5, 3.0) ==
          doctest::Approx(1.5 - std::exp(0.5) - std::log(6.0)).epsilon(1e-14));
    CHECK(log_density(EdgeFamily::Bernoulli, 2.0, 0.0) ==
          doctest::Approx(-std::log1p(std::exp(2.0))).epsilon(1e-14));
}

TEST_CASE("derivatives at trivial points") {
    CHECK(d1(EdgeFamily::Poisson, 0.0, 2.0) == doctest::Approx(1.0));
    CHECK(d2(EdgeFamily::Bernoulli, 0.0, 1.0) == doctest::Approx(-0.25));
    CHECK(d2(EdgeFamily::Bernoulli, 0.0, 0.0) == doctest::Approx(-0.25));
    CHECK(d2(EdgeFamily::Gaussian, 7.3, -4.0) == -1.0);
}

TEST_CASE("d1 and d2 match central differences of log_density") {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> th(-3.0, 3.0);
    const double h = 1e-5;
    for (EdgeFamily f : kFamilies) {
        for (int rep = 0; rep < 50; ++rep) {
            const double t = th(rng);
            const double x = sample_x(f, rng);
            const double fd1 = (log_density(f, t + h, x) - log_density(f, t - h, x)) / (2 * h);
            const double fd2 = (d1(f, t + h, x) - d1(f, t - h, x)) / (2 * h);
            CHECK(d1(f, t, x) == doctest::Approx(fd1).epsilon(1e-6).scale(1.0));
            CHECK(d2(f, t, x) == doctest::Approx(fd2).epsilon(1e-6).scale(1.0));
            const double fdm = (mean(f, t + h) - mean(f, t - h)) / (2 * h);
            CHECK(mean_derivative(f, t) == doctest::Approx(fdm).epsilon(1e-6).scale(1.0));
            CHECK(mean_derivative(f, t) == doctest::Approx(-d2(f, t, x)).epsilon(1e-14));
        }
    }
}

TEST_CASE("mean and its inverse") {
    CHECK(mean(EdgeFamily::Poisson, 0.0) == 1.0);
    CHECK(mean_inverse(EdgeFamily::Poisson, 1.0) == 0.0);
    CHECK(mean(EdgeFamily::Bernoulli, 0.0) == 0.5);
    const MeanImage g = mean_image(EdgeFamily::Gaussian);
    CHECK(std::isinf(g.lo));
    CHECK(g.lo < 0);
    CHECK(std::isinf(g.hi));
    CHECK(g.hi > 0);
    for (EdgeFamily f : kFamilies) {
        for (double t : {-4.0, -0.3, 0.0, 1.7, 5.0}) {
            CHECK(mean_inverse(f, mean(f, t)) == doctest::Approx(t).epsilon(1e-10));
        }
    }
    CHECK(mean(EdgeFamily::Bernoulli, -800.0) >= 0.0);
    CHECK(mean(EdgeFamily::Bernoulli, 800.0) == 1.0);
}

TEST_CASE("mean_inverse rejects the image boundary") {
    CHECK_THROWS_AS(mean_inverse(EdgeFamily::Poisson, 0.0), DomainError);
    CHECK_THROWS_AS(mean_inverse(EdgeFamily::Poisson, -1.0), DomainError);
    CHECK_THROWS_AS(mean_inverse(EdgeFamily::Bernoulli, 1.0), DomainError);
    CHECK_THROWS_AS(mean_inverse(EdgeFamily::Bernoulli, 0.0), DomainError);
    CHECK_NOTHROW(mean_inverse(EdgeFamily::Gaussian, -1e300));
}

TEST_CASE("support checks") {
    CHECK(in_support(EdgeFamily::Poisson, 4.0));
    CHECK_FALSE(in_support(EdgeFamily::Poisson, 1.5));
    CHECK_FALSE(in_support(EdgeFamily::Poisson, -1.0));
    CHECK_FALSE(in_support(EdgeFamily::Bernoulli, 2.0));
    CHECK(in_support(EdgeFamily::Gaussian, -3.25));
    CHECK_FALSE(in_support(EdgeFamily::Gaussian, std::nan("")));
    CHECK_THROWS_AS(log_density(EdgeFamily::Bernoulli, 0.0, 2.0), DomainError);
    CHECK_THROWS_AS(d1(EdgeFamily::Poisson, 0.0, 0.5), DomainError);
    try {
        check_support(EdgeFamily::Bernoulli, 2.0);
        FAIL("expected DomainError");
    } catch (const DomainError& e) {
        const std::string msg = e.what();
        CHECK(msg.find("bernoulli") != std::string::npos);
        CHECK(msg.find('2') != std::string::npos);
    }
}

TEST_CASE("family names round trip") {
    for (EdgeFamily f : kFamilies) {
        CHECK(parse_family(family_name(f)) == f);
    }
    CHECK_THROWS_AS(parse_family("binomial"), DataError);
}

TEST_CASE("kernel nll and nll_delta agree with log_density") {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> th(-3.0, 3.0);
    for (EdgeFamily f : kFamilies) {
        for (int rep = 0; rep < 50; ++rep) {
            const double t = th(rng);
            const double x = sample_x(f, rng);
            const double delta = std::ldexp(th(rng), -rep % 30);
            detail::with_kernel(f, [&](auto K) {
                const double mu = K.mean(t);
                const double full = K.nll(t, mu, x) + detail::nll_constant(f, x);
                CHECK(full == doctest::Approx(-log_density(f, t, x)).epsilon(1e-13));
                CHECK(K.nll_delta(t, mu, x, delta) ==
                      doctest::Approx(wide_nll_delta(f, t, x, delta)).epsilon(1e-7));
                return 0;
            });
        }
    }
}

TEST_CASE("nll_delta keeps precision for tiny steps") {
    // For delta -> 0 the difference is l'(t) delta to first order.
    const double t = 0.7;
    const double delta = 1e-13;
    detail::with_kernel(EdgeFamily::Poisson, [&](auto K) {
        const double got = K.nll_delta(t, K.mean(t), 3.0, delta);
        CHECK(got == doctest::Approx(-d1(EdgeFamily::Poisson, t, 3.0) * delta).epsilon(1e-9));
        return 0;
    });
    detail::with_kernel(EdgeFamily::Bernoulli, [&](auto K) {
        const double got = K.nll_delta(t, K.mean(t), 1.0, delta);
        CHECK(got == doctest::Approx(-d1(EdgeFamily::Bernoulli, t, 1.0) * delta).epsilon(1e-9));
        return 0;
    });
}
