#include "lsm/edge_family.hpp"

#include <numbers>
#include <sstream>

namespace lsm {

namespace {

const double kLogSqrt2Pi = 0.5 * std::log(2.0 * std::numbers::pi);

[[noreturn]] void throw_domain(EdgeFamily family, std::string_view what, double value) {
    std::ostringstream msg;
    msg.precision(17);
    msg << family_name(family) << ": " << what << " " << value;
    throw DomainError(msg.str());
}

} // namespace

EdgeFamily parse_family(std::string_view name) {
    if (name == "poisson") {
        return EdgeFamily::Poisson;
    }
    if (name == "bernoulli") {
        return EdgeFamily::Bernoulli;
    }
    if (name == "gaussian") {
        return EdgeFamily::Gaussian;
    }
    throw DataError("unknown edge family '" + std::string(name) +
                    "' (expected poisson, bernoulli or gaussian)");
}

std::string_view family_name(EdgeFamily family) {
    switch (family) {
    case EdgeFamily::Poisson:
        return "poisson";
    case EdgeFamily::Bernoulli:
        return "bernoulli";
    case EdgeFamily::Gaussian:
        return "gaussian";
    }
    return "unknown";
}

bool in_support(EdgeFamily family, double x) {
    switch (family) {
    case EdgeFamily::Poisson:
        return std::isfinite(x) && x >= 0.0 && x == std::floor(x);
    case EdgeFamily::Bernoulli:
        return x == 0.0 || x == 1.0;
    case EdgeFamily::Gaussian:
        return std::isfinite(x);
    }
    return false;
}

void check_support(EdgeFamily family, double x) {
    if (!in_support(family, x)) {
        throw_domain(family, "value outside support:", x);
    }
}

double log_density(EdgeFamily family, double theta, double x) {
    check_support(family, x);
    switch (family) {
    case EdgeFamily::Poisson:
        return x * theta - std::exp(theta) - std::lgamma(x + 1.0);
    case EdgeFamily::Bernoulli:
        return x * theta - detail::softplus(theta);
    case EdgeFamily::Gaussian:
        return -0.5 * (x - theta) * (x - theta) - kLogSqrt2Pi;
    }
    return 0.0;
}

double d1(EdgeFamily family, double theta, double x) {
    check_support(family, x);
    return x - mean(family, theta);
}

double d2(EdgeFamily family, double theta, double x) {
    check_support(family, x);
    return -mean_derivative(family, theta);
}

double mean(EdgeFamily family, double theta) {
    switch (family) {
    case EdgeFamily::Poisson:
        return std::exp(theta);
    case EdgeFamily::Bernoulli:
        return detail::logistic(theta);
    case EdgeFamily::Gaussian:
        return theta;
    }
    return 0.0;
}

double mean_derivative(EdgeFamily family, double theta) {
    switch (family) {
    case EdgeFamily::Poisson:
        return std::exp(theta);
    case EdgeFamily::Bernoulli: {
        const double s = detail::logistic(theta);
        return s * (1.0 - s);
    }
    case EdgeFamily::Gaussian:
        return 1.0;
    }
    return 0.0;
}

MeanImage mean_image(EdgeFamily family) {
    constexpr double inf = std::numeric_limits<double>::infinity();
    switch (family) {
    case EdgeFamily::Poisson:
        return {0.0, inf};
    case EdgeFamily::Bernoulli:
        return {0.0, 1.0};
    case EdgeFamily::Gaussian:
        break;
    }
    return {-inf, inf};
}

double mean_inverse(EdgeFamily family, double e) {
    if (!mean_image(family).contains(e)) {
        throw_domain(family, "mean_inverse argument outside the mean image:", e);
    }
    switch (family) {
    case EdgeFamily::Poisson:
        return std::log(e);
    case EdgeFamily::Bernoulli:
        return std::log(e) - std::log1p(-e);
    case EdgeFamily::Gaussian:
        return e;
    }
    return 0.0;
}

namespace detail {

double nll_constant(EdgeFamily family, double x) {
    switch (family) {
    case EdgeFamily::Poisson:
        return std::lgamma(x + 1.0);
    case EdgeFamily::Bernoulli:
        return 0.0;
    case EdgeFamily::Gaussian:
        return kLogSqrt2Pi;
    }
    return 0.0;
}

} // namespace detail

} // namespace lsm
