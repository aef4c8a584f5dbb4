#include "lsm/rasvt.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "lsm/errors.hpp"

namespace lsm {

namespace {

bool is_symmetric(const Eigen::MatrixXd& A) {
    if (A.rows() != A.cols()) {
        return false;
    }
    for (Eigen::Index j = 0; j < A.cols(); ++j) {
        for (Eigen::Index i = 0; i < j; ++i) {
            if (A(i, j) != A(j, i)) {
                return false;
            }
        }
    }
    return true;
}

} // namespace

void RasvtConfig::validate(Eigen::Index n) const {
    if (!(tau > 0.0) || !std::isfinite(tau)) {
        throw DataError("ra-svt: tau must be positive and finite");
    }
    if (k < 1) {
        throw DataError("ra-svt: k must be at least 1");
    }
    const std::int64_t n2 = static_cast<std::int64_t>(n) * n;
    if (gamma < 1 || 2 * gamma >= n2) {
        throw DataError("ra-svt: gamma must satisfy 1 <= gamma < n^2/2 (got " +
                        std::to_string(gamma) + " for n = " + std::to_string(n) + ")");
    }
}

RasvtConfig default_config(const Network& A, Eigen::Index k) {
    const Eigen::Index n = A.n();
    if (n < 3) {
        throw DataError("ra-svt: need at least 3 nodes");
    }
    if (k < 1) {
        throw DataError("ra-svt: k must be at least 1");
    }
    const auto nd = static_cast<double>(n);
    const double upsilon = A.weights.cwiseAbs().sum() / (nd * nd);
    if (!(upsilon > 0.0)) {
        throw DataError("ra-svt: degenerate network (all weights zero)");
    }
    RasvtConfig cfg;
    cfg.k = k;
    cfg.tau = std::sqrt(upsilon * nd * std::log(nd));
    const double exponent = 2.0 - 1.0 / (static_cast<double>(k) + 4.0);
    const auto raw = static_cast<std::int64_t>(std::llround(0.1 * std::pow(nd, exponent)));
    const std::int64_t upper = (static_cast<std::int64_t>(n) * n - 1) / 2;
    cfg.gamma = std::clamp<std::int64_t>(raw, 1, upper);
    return cfg;
}

Eigen::MatrixXd svt(const Eigen::MatrixXd& A, double tau) {
    if (!(tau > 0.0)) {
        throw DataError("svt: tau must be positive");
    }
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(A.rows(), A.cols());
    if (is_symmetric(A)) {
        // For symmetric A the singular triplets are (|lambda|, u, sign(lambda) u).
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(A);
        if (eig.info() != Eigen::Success) {
            throw NumericalError("svt: eigendecomposition failed");
        }
        for (Eigen::Index c = 0; c < A.rows(); ++c) {
            const double lambda = eig.eigenvalues()(c);
            if (std::abs(lambda) > tau) {
                const auto u = eig.eigenvectors().col(c);
                out.noalias() += lambda * u * u.transpose();
            }
        }
        return out;
    }
    Eigen::BDCSVD<Eigen::MatrixXd> svd(A, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const auto& sv = svd.singularValues();
    for (Eigen::Index c = 0; c < sv.size(); ++c) {
        if (sv(c) > tau) {
            out.noalias() += sv(c) * svd.matrixU().col(c) * svd.matrixV().col(c).transpose();
        }
    }
    return out;
}

Interval adaptive_interval(const Eigen::MatrixXd& E_tilde, std::int64_t gamma, EdgeFamily family) {
    const auto total = static_cast<std::int64_t>(E_tilde.size());
    if (gamma < 1 || 2 * gamma >= total) {
        throw DataError("adaptive_interval: gamma must satisfy 1 <= gamma < n^2/2");
    }
    std::vector<double> sorted(E_tilde.data(), E_tilde.data() + E_tilde.size());
    std::stable_sort(sorted.begin(), sorted.end());

    // Order statistics are 1-based: E_(r) = sorted[r - 1].
    const double trim_lo = sorted[static_cast<std::size_t>(gamma - 1)];
    const double trim_hi = sorted[static_cast<std::size_t>(total - gamma - 1)];

    const MeanImage image = mean_image(family);
    const auto first_inside = std::upper_bound(sorted.begin(), sorted.end(), image.lo);
    const auto past_inside = std::lower_bound(sorted.begin(), sorted.end(), image.hi);
    if (first_inside >= past_inside) {
        throw NumericalError("ra-svt: initialization infeasible (no thresholded entry lies inside the " +
                             std::string(family_name(family)) + " mean range)");
    }
    const double range_lo = *first_inside;
    const double range_hi = *(past_inside - 1);

    Interval out{std::max(trim_lo, range_lo), std::min(trim_hi, range_hi)};
    if (out.lo > out.hi) {
        throw NumericalError("ra-svt: trimming too aggressive (empty projection interval); "
                             "reduce gamma");
    }
    if (std::isfinite(image.lo)) {
        const double floor_lo = image.lo + 1e-12 * (1.0 + std::abs(image.lo));
        out.lo = std::max(out.lo, floor_lo);
        out.hi = std::max(out.hi, out.lo);
    }
    if (std::isfinite(image.hi)) {
        const double ceil_hi = image.hi - 1e-12 * (1.0 + std::abs(image.hi));
        out.hi = std::min(out.hi, ceil_hi);
        out.lo = std::min(out.lo, out.hi);
    }
    return out;
}

LatentState ra_svt(const Network& A, EdgeFamily family, const RasvtConfig& config) {
    const Eigen::Index n = A.n();
    config.validate(n);
    if (config.k > n) {
        throw DataError("ra-svt: k exceeds the number of nodes");
    }
    validate_support(A, family);

    const Eigen::MatrixXd E_tilde = svt(A.weights, config.tau);
    const Interval range = adaptive_interval(E_tilde, config.gamma, family);

    Eigen::MatrixXd Theta(n, n);
    for (Eigen::Index j = 0; j < n; ++j) {
        for (Eigen::Index i = 0; i < n; ++i) {
            Theta(i, j) = mean_inverse(family, std::clamp(E_tilde(i, j), range.lo, range.hi));
        }
    }

    LatentState Y;
    Y.alpha = detail::degree_from_theta(Theta);
    Eigen::MatrixXd residual = Theta;
    residual.colwise() -= Y.alpha;
    residual.rowwise() -= Y.alpha.transpose();
    Y.Z = top_k_psd_sqrt(residual, config.k);
    return center_reparam(Y);
}

namespace detail {

Eigen::VectorXd degree_from_theta(const Eigen::MatrixXd& Theta) {
    const auto n = static_cast<double>(Theta.rows());
    const Eigen::VectorXd rows = Theta.rowwise().sum();
    const double grand = rows.sum();
    return (rows.array() - grand / (2.0 * n)).matrix() / n;
}

} // namespace detail

} // namespace lsm
