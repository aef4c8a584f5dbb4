#ifndef LSM_EDGE_FAMILY_HPP
#define LSM_EDGE_FAMILY_HPP

#include <cmath>
#include <limits>
#include <string>
#include <string_view>

#include "lsm/errors.hpp"

namespace lsm {

/// Edge distributions with canonical links. Gaussian has unit variance.
enum class EdgeFamily { Poisson, Bernoulli, Gaussian };

EdgeFamily parse_family(std::string_view name);
std::string_view family_name(EdgeFamily family);

/// Open interval (lo, hi); either end may be infinite.
struct MeanImage {
    double lo;
    double hi;

    bool contains(double e) const { return e > lo && e < hi; }
};

bool in_support(EdgeFamily family, double x);
/// Throws DomainError naming the family and value when x is outside the support.
void check_support(EdgeFamily family, double x);

double log_density(EdgeFamily family, double theta, double x);
double d1(EdgeFamily family, double theta, double x);
double d2(EdgeFamily family, double theta, double x);

double mean(EdgeFamily family, double theta);
double mean_inverse(EdgeFamily family, double e);
MeanImage mean_image(EdgeFamily family);
/// mu'(theta); equals -d2 for every canonical family here.
double mean_derivative(EdgeFamily family, double theta);

namespace detail {

inline double softplus(double t) {
    return t > 0.0 ? t + std::log1p(std::exp(-t)) : std::log1p(std::exp(t));
}

inline double logistic(double t) {
    if (t >= 0.0) {
        return 1.0 / (1.0 + std::exp(-t));
    }
    const double e = std::exp(t);
    return e / (1.0 + e);
}

// Per-family kernels used by the dense pair loops. `nll` omits the
// x-only normalizing term (log x! for Poisson, log sqrt(2 pi) for Gaussian);
// `nll_delta` returns nll(theta + delta) - nll(theta) given mu = mean(theta),
// computed without cancellation for small delta.
struct PoissonKernel {
    static double mean(double t) { return std::exp(t); }
    static double nll(double t, double mu, double x) { return mu - x * t; }
    static double nll_delta(double /*t*/, double mu, double x, double delta) {
        return mu * std::expm1(delta) - x * delta;
    }
};

struct BernoulliKernel {
    static double mean(double t) { return logistic(t); }
    static double nll(double t, double /*mu*/, double x) { return softplus(t) - x * t; }
    static double nll_delta(double t, double mu, double x, double delta) {
        const double r = std::log1p(mu * std::expm1(delta));
        if (std::isfinite(r)) {
            return r - x * delta;
        }
        return softplus(t + delta) - softplus(t) - x * delta;
    }
};

struct GaussianKernel {
    static double mean(double t) { return t; }
    static double nll(double t, double /*mu*/, double x) { return 0.5 * (x - t) * (x - t); }
    static double nll_delta(double t, double /*mu*/, double x, double delta) {
        return delta * (0.5 * delta + t - x);
    }
};

template <class Fn>
decltype(auto) with_kernel(EdgeFamily family, Fn&& fn) {
    switch (family) {
    case EdgeFamily::Poisson:
        return fn(PoissonKernel{});
    case EdgeFamily::Bernoulli:
        return fn(BernoulliKernel{});
    case EdgeFamily::Gaussian:
        break;
    }
    return fn(GaussianKernel{});
}

/// The x-only term of -log p(x | theta) that the kernels leave out.
double nll_constant(EdgeFamily family, double x);

} // namespace detail

} // namespace lsm

#endif // LSM_EDGE_FAMILY_HPP
