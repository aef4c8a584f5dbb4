#ifndef LSM_INFERENCE_HPP
#define LSM_INFERENCE_HPP

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "lsm/edge_family.hpp"
#include "lsm/likelihood.hpp"
#include "lsm/linalg.hpp"

namespace lsm {

enum class Target { Entry, EdgeMean, InnerProduct, Custom };

std::string_view target_name(Target target);

/// Estimate with standard error, z statistic against zero, two-sided p-value and CI.
struct InferenceReport {
    Target target = Target::Custom;
    std::string label;
    double estimate = 0.0;
    double se = 0.0;
    double z = 0.0;
    double p_value = 1.0;
    double ci_low = 0.0;
    double ci_high = 0.0;
};

/// Fills z, p and CI from (estimate, se) at confidence `level`, testing against `null_value`.
InferenceReport make_report(Target target, std::string label, double estimate, double se,
                            double level, double null_value = 0.0);

double normal_cdf(double x);
/// Two-sided p-value 2 (1 - Phi(|z|)).
double two_sided_p(double z);
/// Phi^{-1}(p).
double normal_quantile(double p);

/// sqrt of the (coord, coord) entry of Sigma_i(Y)^{-1}; coord in [0, k], k being alpha.
double entry_se(const LatentState& Y, const Network& A, EdgeFamily family, Eigen::Index i,
                Eigen::Index coord);

/// sqrt(grad^T Sigma_I(Y)^{-1} grad) for a function of the stacked rows y_I.
double delta_method_se(const LatentState& Y, const Network& A, EdgeFamily family,
                       const std::vector<Eigen::Index>& indices, const Eigen::VectorXd& grad_g);

/// Standard error of mu(Theta_ij) by the delta method.
double edge_mean_se(const LatentState& Y, const Network& A, EdgeFamily family, Eigen::Index i,
                    Eigen::Index j);

/// Inverses of every Sigma_i(Y), computed through a Cholesky factorization.
/// Throws NumericalError("information singular at node i") when a block is not positive definite.
std::vector<Eigen::MatrixXd> sigma_inverses(const LatentState& Y, const Network& A, EdgeFamily family);

struct PairwiseTestResult {
    Eigen::Index i = 0;
    Eigen::Index j = 0;
    double diff = 0.0;
    double se = 0.0;
    double z = 0.0;
    double p_value = 1.0;
    bool rejected = false;
};

/// A fitted latent state together with the network it was fitted on.
struct FittedNetwork {
    LatentState state;
    Network network;
    EdgeFamily family = EdgeFamily::Poisson;
};

struct ComparisonResult {
    std::vector<std::string> labels;
    std::vector<PairwiseTestResult> pairs; // ordered by (i, j), i < j
    Eigen::VectorXd rejection_rate;        // per node, over its n - 1 pairs
};

/// Two-sample tests of <z_1i, z_1j> = <z_2i, z_2j> over all pairs, with BH at `level`.
ComparisonResult compare_networks(const FittedNetwork& first, const FittedNetwork& second,
                                  double level);

/// Benjamini-Hochberg step-up rule.
std::vector<bool> bh_adjust(const std::vector<double>& p_values, double level);

} // namespace lsm

#endif // LSM_INFERENCE_HPP
