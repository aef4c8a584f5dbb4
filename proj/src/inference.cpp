#include "lsm/inference.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include <boost/math/distributions/normal.hpp>

#include "lsm/errors.hpp"

namespace lsm {

namespace {

Eigen::MatrixXd invert_information(const Eigen::MatrixXd& S, Eigen::Index node) {
    Eigen::LLT<Eigen::MatrixXd> llt(S);
    if (llt.info() != Eigen::Success || !(llt.rcond() > 1e-12)) {
        throw NumericalError("information singular at node " + std::to_string(node));
    }
    return llt.solve(Eigen::MatrixXd::Identity(S.rows(), S.cols()));
}

double quad_form_se(double q) {
    // Rounding can push an exactly-zero form slightly negative.
    return std::sqrt(std::max(q, 0.0));
}

} // namespace

std::string_view target_name(Target target) {
    switch (target) {
    case Target::Entry:
        return "entry";
    case Target::EdgeMean:
        return "edge_mean";
    case Target::InnerProduct:
        return "inner_product";
    case Target::Custom:
        return "custom";
    }
    return "custom";
}

double normal_cdf(double x) {
    return 0.5 * std::erfc(-x / std::sqrt(2.0));
}

double two_sided_p(double z) {
    return std::erfc(std::abs(z) / std::sqrt(2.0));
}

double normal_quantile(double p) {
    return boost::math::quantile(boost::math::normal_distribution<double>(), p);
}

InferenceReport make_report(Target target, std::string label, double estimate, double se,
                            double level, double null_value) {
    if (!(level > 0.0 && level < 1.0)) {
        throw DataError("confidence level must lie in (0, 1)");
    }
    InferenceReport r;
    r.target = target;
    r.label = std::move(label);
    r.estimate = estimate;
    r.se = se;
    r.z = (estimate - null_value) / se;
    r.p_value = two_sided_p(r.z);
    const double half = normal_quantile(0.5 + 0.5 * level) * se;
    r.ci_low = estimate - half;
    r.ci_high = estimate + half;
    return r;
}

std::vector<Eigen::MatrixXd> sigma_inverses(const LatentState& Y, const Network& A, EdgeFamily family) {
    detail::check_conformable(Y, A);
    const Eigen::Index n = Y.n();
    const Eigen::Index k = Y.k();
    const Eigen::MatrixXd T = theta(Y);
    // W = [Z, 1]; Sigma_i = W^T diag(c_i) W with c_ij = mu'(Theta_ij), c_ii = 0.
    Eigen::MatrixXd W(n, k + 1);
    W.leftCols(k) = Y.Z;
    W.col(k).setOnes();
    std::vector<Eigen::MatrixXd> out;
    out.reserve(static_cast<std::size_t>(n));
    Eigen::VectorXd c(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < n; ++j) {
            c(j) = j == i ? 0.0 : -d2(family, T(i, j), A.weights(i, j));
        }
        const Eigen::MatrixXd S = W.transpose() * c.asDiagonal() * W;
        out.push_back(invert_information(S, i));
    }
    return out;
}

double entry_se(const LatentState& Y, const Network& A, EdgeFamily family, Eigen::Index i,
                Eigen::Index coord) {
    if (coord < 0 || coord > Y.k()) {
        throw DataError("entry_se: coordinate " + std::to_string(coord) + " out of range [0, " +
                        std::to_string(Y.k()) + "]");
    }
    const Eigen::MatrixXd inv = invert_information(sigma_i(Y, A, family, i), i);
    return quad_form_se(inv(coord, coord));
}

double delta_method_se(const LatentState& Y, const Network& A, EdgeFamily family,
                       const std::vector<Eigen::Index>& indices, const Eigen::VectorXd& grad_g) {
    const Eigen::Index d = Y.k() + 1;
    if (grad_g.size() != d * static_cast<Eigen::Index>(indices.size())) {
        throw DataError("delta_method_se: gradient length does not match m(k+1)");
    }
    const SigmaBlock blocks = sigma_block(Y, A, family, indices);
    double q = 0.0;
    for (std::size_t b = 0; b < indices.size(); ++b) {
        const auto off = static_cast<Eigen::Index>(b) * d;
        const Eigen::MatrixXd inv = invert_information(blocks.block.block(off, off, d, d), indices[b]);
        const auto g = grad_g.segment(off, d);
        q += g.dot(inv * g);
    }
    return quad_form_se(q);
}

double edge_mean_se(const LatentState& Y, const Network& A, EdgeFamily family, Eigen::Index i,
                    Eigen::Index j) {
    if (i == j) {
        throw DataError("edge_mean_se: need two distinct nodes");
    }
    detail::check_conformable(Y, A);
    const Eigen::Index k = Y.k();
    const Eigen::MatrixXd inv_i = invert_information(sigma_i(Y, A, family, i), i);
    const Eigen::MatrixXd inv_j = invert_information(sigma_i(Y, A, family, j), j);
    Eigen::VectorXd w_i(k + 1), w_j(k + 1);
    w_i << Y.Z.row(i).transpose(), 1.0;
    w_j << Y.Z.row(j).transpose(), 1.0;
    const double t = Y.alpha(i) + Y.alpha(j) + Y.Z.row(i).dot(Y.Z.row(j));
    const double q = w_j.dot(inv_i * w_j) + w_i.dot(inv_j * w_i);
    return std::abs(mean_derivative(family, t)) * quad_form_se(q);
}

std::vector<bool> bh_adjust(const std::vector<double>& p_values, double level) {
    const std::size_t m = p_values.size();
    std::vector<std::size_t> order(m);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return p_values[a] < p_values[b]; });
    std::size_t cutoff = 0; // number of rejections
    for (std::size_t r = m; r >= 1; --r) {
        if (p_values[order[r - 1]] <= static_cast<double>(r) * level / static_cast<double>(m)) {
            cutoff = r;
            break;
        }
    }
    std::vector<bool> rejected(m, false);
    if (cutoff > 0) {
        const double threshold = p_values[order[cutoff - 1]];
        for (std::size_t i = 0; i < m; ++i) {
            rejected[i] = p_values[i] <= threshold;
        }
    }
    return rejected;
}

ComparisonResult compare_networks(const FittedNetwork& first, const FittedNetwork& second,
                                  double level) {
    detail::check_conformable(first.state, first.network);
    detail::check_conformable(second.state, second.network);
    if (first.state.k() != second.state.k()) {
        throw DataError("compare: latent dimensions differ");
    }
    const auto& labels = first.network.labels;
    std::map<std::string, Eigen::Index> where;
    for (Eigen::Index i = 0; i < second.network.n(); ++i) {
        where[second.network.labels[static_cast<std::size_t>(i)]] = i;
    }
    std::vector<Eigen::Index> match;
    std::string missing;
    for (const auto& l : labels) {
        auto it = where.find(l);
        if (it == where.end()) {
            missing += (missing.empty() ? "" : ", ") + l;
        } else {
            match.push_back(it->second);
            where.erase(it);
        }
    }
    for (const auto& [l, idx] : where) {
        missing += (missing.empty() ? "" : ", ") + l;
    }
    if (!missing.empty()) {
        throw DataError("compare: unmatched node labels: " + missing);
    }

    const Eigen::Index n = first.state.n();
    const Eigen::Index k = first.state.k();
    const auto inv1 = sigma_inverses(first.state, first.network, first.family);
    const auto inv2 = sigma_inverses(second.state, second.network, second.family);
    const Eigen::MatrixXd gram1 = first.state.Z * first.state.Z.transpose();
    const Eigen::MatrixXd gram2 = second.state.Z * second.state.Z.transpose();

    // g(y_i, y_j) = z_i^T z_j has gradient [z_j; 0; z_i; 0]: only the Z-blocks of the inverses enter.
    auto variance = [k](const std::vector<Eigen::MatrixXd>& inv, const Eigen::MatrixXd& Z,
                        Eigen::Index i, Eigen::Index j) {
        const auto zi = Z.row(i).transpose();
        const auto zj = Z.row(j).transpose();
        return zj.dot(inv[static_cast<std::size_t>(i)].topLeftCorner(k, k) * zj) +
               zi.dot(inv[static_cast<std::size_t>(j)].topLeftCorner(k, k) * zi);
    };

    ComparisonResult out;
    out.labels = labels;
    out.pairs.reserve(static_cast<std::size_t>(n * (n - 1) / 2));
    std::vector<double> p;
    p.reserve(out.pairs.capacity());
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = i + 1; j < n; ++j) {
            const Eigen::Index i2 = match[static_cast<std::size_t>(i)];
            const Eigen::Index j2 = match[static_cast<std::size_t>(j)];
            PairwiseTestResult t;
            t.i = i;
            t.j = j;
            t.diff = gram1(i, j) - gram2(i2, j2);
            const double var = variance(inv1, first.state.Z, i, j) + variance(inv2, second.state.Z, i2, j2);
            t.se = quad_form_se(var);
            if (t.se > 0.0) {
                t.z = t.diff / t.se;
                t.p_value = two_sided_p(t.z);
            } else {
                t.z = 0.0;
                t.p_value = t.diff == 0.0 ? 1.0 : 0.0;
            }
            p.push_back(t.p_value);
            out.pairs.push_back(t);
        }
    }
    const auto rejected = bh_adjust(p, level);
    out.rejection_rate = Eigen::VectorXd::Zero(n);
    for (std::size_t t = 0; t < out.pairs.size(); ++t) {
        out.pairs[t].rejected = rejected[t];
        if (rejected[t]) {
            out.rejection_rate(out.pairs[t].i) += 1.0;
            out.rejection_rate(out.pairs[t].j) += 1.0;
        }
    }
    if (n > 1) {
        out.rejection_rate /= static_cast<double>(n - 1);
    }
    return out;
}

} // namespace lsm
