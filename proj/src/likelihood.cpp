#include "lsm/likelihood.hpp"

#include <algorithm>
#include <set>
#include <sstream>

namespace lsm {

namespace {

void check_index(const LatentState& Y, Eigen::Index i) {
    if (i < 0 || i >= Y.n()) {
        throw DataError("node index " + std::to_string(i) + " out of range [0, " +
                        std::to_string(Y.n()) + ")");
    }
}

} // namespace

Network make_network(Eigen::MatrixXd weights, std::vector<std::string> labels) {
    if (weights.rows() != weights.cols()) {
        throw DataError("network: adjacency must be square");
    }
    const Eigen::Index n = weights.rows();
    for (Eigen::Index j = 0; j < n; ++j) {
        if (weights(j, j) != 0.0) {
            throw DataError("network: nonzero diagonal at node " + std::to_string(j));
        }
        for (Eigen::Index i = 0; i < j; ++i) {
            if (weights(i, j) != weights(j, i)) {
                throw DataError("network: asymmetric entry at (" + std::to_string(i) + ", " +
                                std::to_string(j) + ")");
            }
        }
    }
    if (labels.empty()) {
        const auto width = std::to_string(std::max<Eigen::Index>(n - 1, 0)).size();
        labels.reserve(static_cast<std::size_t>(n));
        for (Eigen::Index i = 0; i < n; ++i) {
            std::string digits = std::to_string(i);
            labels.push_back("v" + std::string(width - digits.size(), '0') + digits);
        }
    }
    if (static_cast<Eigen::Index>(labels.size()) != n) {
        throw DataError("network: " + std::to_string(labels.size()) + " labels for " +
                        std::to_string(n) + " nodes");
    }
    return Network{std::move(weights), std::move(labels)};
}

void validate_support(const Network& A, EdgeFamily family) {
    const Eigen::Index n = A.n();
    for (Eigen::Index j = 0; j < n; ++j) {
        for (Eigen::Index i = 0; i < j; ++i) {
            if (!in_support(family, A.weights(i, j))) {
                std::ostringstream msg;
                msg.precision(17);
                msg << family_name(family) << ": entry (" << i << ", " << j << ") = "
                    << A.weights(i, j) << " outside support";
                throw DomainError(msg.str());
            }
        }
    }
}

Eigen::MatrixXd theta(const LatentState& Y) {
    Y.check_shape();
    Eigen::MatrixXd T = Y.Z * Y.Z.transpose();
    T.colwise() += Y.alpha;
    T.rowwise() += Y.alpha.transpose();
    return T;
}

double neg_log_lik(const LatentState& Y, const Network& A, EdgeFamily family) {
    detail::check_conformable(Y, A);
    validate_support(A, family);
    const Eigen::MatrixXd T = theta(Y);
    const Eigen::Index n = A.n();
    double total = detail::nll_constants(A, family).total;
    detail::with_kernel(family, [&](auto kernel) {
        using K = decltype(kernel);
        for (Eigen::Index j = 0; j < n; ++j) {
            for (Eigen::Index i = 0; i < j; ++i) {
                const double t = T(i, j);
                total += K::nll(t, K::mean(t), A.weights(i, j));
            }
        }
        return 0;
    });
    return total;
}

Eigen::MatrixXd Gradient::stacked() const {
    Eigen::MatrixXd out(Z.rows(), Z.cols() + 1);
    out.leftCols(Z.cols()) = Z;
    out.col(Z.cols()) = alpha;
    return out;
}

double Gradient::max_abs() const {
    double m = alpha.size() ? alpha.cwiseAbs().maxCoeff() : 0.0;
    if (Z.size()) {
        m = std::max(m, Z.cwiseAbs().maxCoeff());
    }
    return m;
}

Gradient gradient(const LatentState& Y, const Network& A, EdgeFamily family) {
    detail::check_conformable(Y, A);
    validate_support(A, family);
    const Eigen::MatrixXd T = theta(Y);
    const Eigen::Index n = A.n();
    Eigen::MatrixXd G = Eigen::MatrixXd::Zero(n, n);
    detail::with_kernel(family, [&](auto kernel) {
        using K = decltype(kernel);
        for (Eigen::Index j = 0; j < n; ++j) {
            for (Eigen::Index i = 0; i < j; ++i) {
                const double g = A.weights(i, j) - K::mean(T(i, j));
                G(i, j) = g;
                G(j, i) = g;
            }
        }
        return 0;
    });
    Gradient out;
    out.Z = -(G * Y.Z);
    out.alpha = -G.rowwise().sum();
    return out;
}

double row_neg_log_lik(const LatentState& Y, const Network& A, EdgeFamily family, Eigen::Index i) {
    detail::check_conformable(Y, A);
    check_index(Y, i);
    const Eigen::Index n = A.n();
    double total = 0.0;
    for (Eigen::Index j = 0; j < n; ++j) {
        if (j == i) {
            continue;
        }
        const double t = Y.alpha(i) + Y.alpha(j) + Y.Z.row(i).dot(Y.Z.row(j));
        total -= log_density(family, t, A.weights(i, j));
    }
    return total;
}

Eigen::MatrixXd sigma_i(const LatentState& Y, const Network& A, EdgeFamily family, Eigen::Index i) {
    detail::check_conformable(Y, A);
    check_index(Y, i);
    const Eigen::Index n = A.n();
    const Eigen::Index k = Y.k();
    Eigen::MatrixXd S = Eigen::MatrixXd::Zero(k + 1, k + 1);
    Eigen::VectorXd w(k + 1);
    for (Eigen::Index j = 0; j < n; ++j) {
        if (j == i) {
            continue;
        }
        const double t = Y.alpha(i) + Y.alpha(j) + Y.Z.row(i).dot(Y.Z.row(j));
        const double curvature = -d2(family, t, A.weights(i, j));
        w.head(k) = Y.Z.row(j).transpose();
        w(k) = 1.0;
        S.noalias() += curvature * w * w.transpose();
    }
    return S;
}

SigmaBlock sigma_block(const LatentState& Y, const Network& A, EdgeFamily family,
                       const std::vector<Eigen::Index>& indices) {
    std::set<Eigen::Index> seen;
    for (auto i : indices) {
        if (!seen.insert(i).second) {
            throw DataError("sigma_block: duplicate node index " + std::to_string(i));
        }
    }
    const Eigen::Index d = Y.k() + 1;
    const auto m = static_cast<Eigen::Index>(indices.size());
    SigmaBlock out{indices, Eigen::MatrixXd::Zero(m * d, m * d)};
    for (Eigen::Index b = 0; b < m; ++b) {
        out.block.block(b * d, b * d, d, d) = sigma_i(Y, A, family, indices[static_cast<std::size_t>(b)]);
    }
    return out;
}

namespace detail {

NllConstants nll_constants(const Network& A, EdgeFamily family) {
    const Eigen::Index n = A.n();
    NllConstants c;
    c.rows = Eigen::VectorXd::Zero(n);
    for (Eigen::Index j = 0; j < n; ++j) {
        for (Eigen::Index i = 0; i < j; ++i) {
            const double v = nll_constant(family, A.weights(i, j));
            c.rows(i) += v;
            c.rows(j) += v;
            c.total += v;
        }
    }
    return c;
}

void check_conformable(const LatentState& Y, const Network& A) {
    Y.check_shape();
    if (Y.n() != A.n()) {
        throw DataError("latent state has " + std::to_string(Y.n()) + " nodes but network has " +
                        std::to_string(A.n()));
    }
}

} // namespace detail

} // namespace lsm
