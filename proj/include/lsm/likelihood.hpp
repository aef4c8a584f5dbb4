#ifndef LSM_LIKELIHOOD_HPP
#define LSM_LIKELIHOOD_HPP

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "lsm/edge_family.hpp"
#include "lsm/linalg.hpp"

namespace lsm {

/// Symmetric weighted adjacency with zero diagonal and node labels.
struct Network {
    Eigen::MatrixXd weights;
    std::vector<std::string> labels;

    Eigen::Index n() const { return weights.rows(); }
};

/// Builds a network after checking symmetry, zero diagonal and label count.
/// Empty `labels` yields "v0", "v1", ... zero-padded so that sorting preserves order.
Network make_network(Eigen::MatrixXd weights, std::vector<std::string> labels = {});

/// Throws DomainError naming (i, j) for the first off-diagonal entry outside the support.
void validate_support(const Network& A, EdgeFamily family);

/// Theta = Z Z^T + alpha 1^T + 1 alpha^T (diagonal included).
Eigen::MatrixXd theta(const LatentState& Y);

/// L(Y) = -sum_{i<j} log p(A_ij | Theta_ij).
double neg_log_lik(const LatentState& Y, const Network& A, EdgeFamily family);

struct Gradient {
    Eigen::MatrixXd Z;     // dL/dZ
    Eigen::VectorXd alpha; // dL/dalpha

    Eigen::MatrixXd stacked() const;
    double max_abs() const;
};

/// Exact gradient of neg_log_lik: dL/dZ = -G Z, dL/dalpha = -G 1 with G_ij = l'(Theta_ij; A_ij), G_ii = 0.
Gradient gradient(const LatentState& Y, const Network& A, EdgeFamily family);

/// L_i(Y) = -sum_{j != i} log p(A_ij | Theta_ij). Zero-based node index.
double row_neg_log_lik(const LatentState& Y, const Network& A, EdgeFamily family, Eigen::Index i);

/// Sigma_i(Y) = -sum_{j != i} l''(Theta_ij; A_ij) w_j w_j^T, w_j = [z_j; 1].
Eigen::MatrixXd sigma_i(const LatentState& Y, const Network& A, EdgeFamily family, Eigen::Index i);

struct SigmaBlock {
    std::vector<Eigen::Index> indices;
    Eigen::MatrixXd block; // m(k+1) x m(k+1), block diagonal
};

SigmaBlock sigma_block(const LatentState& Y, const Network& A, EdgeFamily family,
                       const std::vector<Eigen::Index>& indices);

namespace detail {

/// Sum of the x-only likelihood constants over i<j, and per row over j != i.
struct NllConstants {
    double total = 0.0;
    Eigen::VectorXd rows;
};

NllConstants nll_constants(const Network& A, EdgeFamily family);

void check_conformable(const LatentState& Y, const Network& A);

} // namespace detail

} // namespace lsm

#endif // LSM_LIKELIHOOD_HPP
