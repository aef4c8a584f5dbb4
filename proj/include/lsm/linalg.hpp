#ifndef LSM_LINALG_HPP
#define LSM_LINALG_HPP

#include <Eigen/Dense>

namespace lsm {

/// Y = [Z, alpha]: latent positions (n x k) and degree parameters (n).
struct LatentState {
    Eigen::MatrixXd Z;
    Eigen::VectorXd alpha;

    Eigen::Index n() const { return Z.rows(); }
    Eigen::Index k() const { return Z.cols(); }
    /// n x (k+1) stacked matrix [Z, alpha].
    Eigen::MatrixXd stacked() const;
    /// Throws DataError unless Z has as many rows as alpha.
    void check_shape() const;
};

struct AlignmentResult {
    Eigen::MatrixXd Q;  // k x k orthogonal
    Eigen::MatrixXd Zq; // Z_hat * Q^T, expressed in the reference frame
    double residual = 0.0;
    /// Z_ref^T Z_hat is numerically singular; Q is then one of several minimizers.
    bool singular = false;
};

/// Orthogonal Procrustes: Q in O(k) minimizing ||Z_hat - Z_ref Q||_F.
AlignmentResult procrustes_align(const Eigen::MatrixXd& Z_hat, const Eigen::MatrixXd& Z_ref);

/// O(k)-invariant squared distance: min_Q ||Z_a - Z_b Q||_F^2 + ||alpha_a - alpha_b||^2.
double dist2(const LatentState& a, const LatentState& b);

/// Top-k positively truncated square root of a symmetric matrix.
Eigen::MatrixXd top_k_psd_sqrt(const Eigen::MatrixXd& S, Eigen::Index k);

/// Shifts Z to zero column means while keeping every off-diagonal Theta_ij.
LatentState center_reparam(const LatentState& Y);

/// Largest row-wise Euclidean norm.
double two_to_inf_norm(const Eigen::MatrixXd& M);

/// Fixes eigenvector signs so that the largest-magnitude entry of each column is positive.
void canonicalize_signs(Eigen::MatrixXd& V);

} // namespace lsm

#endif // LSM_LINALG_HPP
