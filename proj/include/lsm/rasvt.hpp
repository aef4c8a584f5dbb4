#ifndef LSM_RASVT_HPP
#define LSM_RASVT_HPP

#include <cstdint>

#include <Eigen/Dense>

#include "lsm/edge_family.hpp"
#include "lsm/likelihood.hpp"
#include "lsm/linalg.hpp"

namespace lsm {

/// Tuning for range-adaptive singular value thresholding.
struct RasvtConfig {
    double tau = 0.0;       // singular value threshold
    std::int64_t gamma = 1; // trimming rank, 1 <= gamma < n^2/2
    Eigen::Index k = 2;

    void validate(Eigen::Index n) const;
};

/// gamma = round(0.1 n^{2 - 1/(k+4)}) clamped to [1, floor((n^2-1)/2)],
/// tau = sqrt(v n log n) with v the mean of all n^2 adjacency entries.
RasvtConfig default_config(const Network& A, Eigen::Index k);

/// Sum of the singular triplets of A with singular value strictly above tau.
Eigen::MatrixXd svt(const Eigen::MatrixXd& A, double tau);

struct Interval {
    double lo;
    double hi;
};

/// Intersection of the trimmed order-statistic range [E_(gamma), E_(n^2-gamma)]
/// with the range of entries lying strictly inside the family's mean image.
Interval adaptive_interval(const Eigen::MatrixXd& E_tilde, std::int64_t gamma, EdgeFamily family);

/// Initial estimate Y0 = [Z0, alpha0], centered.
LatentState ra_svt(const Network& A, EdgeFamily family, const RasvtConfig& config);

namespace detail {

/// alpha solving (n I + 1 1^T) alpha = Theta 1, in closed form.
Eigen::VectorXd degree_from_theta(const Eigen::MatrixXd& Theta);

} // namespace detail

} // namespace lsm

#endif // LSM_RASVT_HPP
