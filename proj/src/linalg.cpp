#include "lsm/linalg.hpp"

#include <algorithm>
#include <cmath>

#include "lsm/errors.hpp"

namespace lsm {

Eigen::MatrixXd LatentState::stacked() const {
    Eigen::MatrixXd Y(n(), k() + 1);
    Y.leftCols(k()) = Z;
    Y.col(k()) = alpha;
    return Y;
}

void LatentState::check_shape() const {
    if (Z.rows() != alpha.size()) {
        throw DataError("latent state: Z has " + std::to_string(Z.rows()) +
                        " rows but alpha has length " + std::to_string(alpha.size()));
    }
}

AlignmentResult procrustes_align(const Eigen::MatrixXd& Z_hat, const Eigen::MatrixXd& Z_ref) {
    if (Z_hat.rows() != Z_ref.rows() || Z_hat.cols() != Z_ref.cols()) {
        throw DataError("procrustes_align: shape mismatch");
    }
    if (Z_hat.rows() < Z_hat.cols()) {
        throw DataError("procrustes_align: need n >= k");
    }
    const Eigen::MatrixXd cross = Z_ref.transpose() * Z_hat;
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(cross, Eigen::ComputeFullU | Eigen::ComputeFullV);

    AlignmentResult out;
    out.Q = svd.matrixU() * svd.matrixV().transpose();
    out.Zq = Z_hat * out.Q.transpose();
    out.residual = (Z_hat - Z_ref * out.Q).norm();

    const auto& sv = svd.singularValues();
    if (sv.size() > 0) {
        const double largest = sv(0);
        const double smallest = sv(sv.size() - 1);
        out.singular = !(smallest >= 1e-12 * largest) || largest == 0.0;
    }
    return out;
}

double dist2(const LatentState& a, const LatentState& b) {
    a.check_shape();
    b.check_shape();
    if (a.n() != b.n() || a.k() != b.k()) {
        throw DataError("dist2: shape mismatch");
    }
    const double r = procrustes_align(a.Z, b.Z).residual;
    return r * r + (a.alpha - b.alpha).squaredNorm();
}

void canonicalize_signs(Eigen::MatrixXd& V) {
    for (Eigen::Index c = 0; c < V.cols(); ++c) {
        Eigen::Index arg = 0;
        V.col(c).cwiseAbs().maxCoeff(&arg);
        if (V(arg, c) < 0.0) {
            V.col(c) *= -1.0;
        }
    }
}

Eigen::MatrixXd top_k_psd_sqrt(const Eigen::MatrixXd& S, Eigen::Index k) {
    if (S.rows() != S.cols()) {
        throw DataError("top_k_psd_sqrt: matrix must be square");
    }
    const Eigen::Index n = S.rows();
    if (k < 1 || k > n) {
        throw DataError("top_k_psd_sqrt: need 1 <= k <= n");
    }
    const Eigen::MatrixXd sym = 0.5 * (S + S.transpose());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(sym);
    if (eig.info() != Eigen::Success) {
        throw NumericalError("top_k_psd_sqrt: eigendecomposition failed");
    }
    // Eigenvalues come back ascending.
    Eigen::MatrixXd vecs = eig.eigenvectors().rightCols(k).rowwise().reverse();
    const Eigen::VectorXd vals = eig.eigenvalues().tail(k).reverse();
    canonicalize_signs(vecs);
    for (Eigen::Index c = 0; c < k; ++c) {
        vecs.col(c) *= std::sqrt(std::max(vals(c), 0.0));
    }
    return vecs;
}

LatentState center_reparam(const LatentState& Y) {
    Y.check_shape();
    const auto n = static_cast<double>(Y.n());
    if (Y.n() == 0) {
        return Y;
    }
    const Eigen::VectorXd c = Y.Z.colwise().sum().transpose() / n;
    LatentState out;
    out.Z = Y.Z.rowwise() - c.transpose();
    out.alpha = Y.alpha + Y.Z * c - Eigen::VectorXd::Constant(Y.n(), 0.5 * c.squaredNorm());
    return out;
}

double two_to_inf_norm(const Eigen::MatrixXd& M) {
    if (M.size() == 0) {
        return 0.0;
    }
    return M.rowwise().norm().maxCoeff();
}

} // namespace lsm
