#ifndef LSM_SIMULATION_HPP
#define LSM_SIMULATION_HPP

#include <cstdint>
#include <functional>
#include <vector>

#include "lsm/edge_family.hpp"
#include "lsm/likelihood.hpp"
#include "lsm/linalg.hpp"
#include "lsm/pgd.hpp"

namespace lsm {

struct TruthSpec {
    Eigen::Index n = 500;
    Eigen::Index k = 2;
    EdgeFamily family = EdgeFamily::Poisson;
    std::uint64_t seed = 1;

    /// Requires n > 2(k + 2) and k >= 1.
    void validate() const;
};

/// Deterministic 64-bit seed for (base seed, stream, index).
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream, std::uint64_t index);

/// alpha* = u / sum(u) with u ~ Unif[1,3]; Z* = 0.5 sqrt(n) U where U holds the
/// first k left singular vectors of J_n Z~ and Z~ has N(0,1) entries truncated to [-2, 2].
LatentState gen_truth(const TruthSpec& spec);

/// Independent draws A_ij = A_ji ~ p(. | Theta_ij) for i < j; zero diagonal.
Network sample_network(const LatentState& truth, EdgeFamily family, std::uint64_t seed);

/// Runs fn(0), ..., fn(count - 1) on up to `threads` workers.
void parallel_for(int count, int threads, const std::function<void(int)>& fn);

struct StudyOptions {
    int threads = 1;
    int max_iters = 2000;
    double stop_tol = 0.01;
};

/// Outcome of one fit inside a study.
struct StudyFit {
    int rep = 0;
    double scale = 0.0;
    bool converged = false;
    int iterations = 0; // R_conv when converged
    double mean_backtracks = 0.0;
    bool diverged = false;
    FitInvariants invariants;
};

struct ConvergenceCell {
    double scale = 0.0;
    bool adaptive = true;
    int reps = 0;
    int converged = 0;
    double proportion = 0.0;
    double mean_iterations = 0.0; // over converged fits
    double mean_backtracks = 0.0; // per iteration, over all fits
};

struct ConvergenceStudy {
    std::vector<ConvergenceCell> cells; // one per scale, input order
    std::vector<StudyFit> fits;         // rep-major, scale-minor
};

/// Fits each replication at eta_init = s * eta0 for every scale s, with eta0 six times
/// the closed-form step at the RA-SVT estimate. Truth is drawn once from spec.seed.
ConvergenceStudy run_convergence_study(const TruthSpec& spec, const std::vector<double>& eta_scales,
                                       bool adaptive, int reps, const StudyOptions& options = {});

struct NormalityTargets {
    Eigen::Index node = 0;  // entry target: coordinate `coord` of node `node`
    Eigen::Index coord = 0;
    Eigen::Index pair_i = 0; // edge-mean target
    Eigen::Index pair_j = 1;
    double eta_scale = 1.0;  // eta_init = eta_scale * eta0
};

struct NormalityRep {
    int rep = 0;
    bool converged = false;
    double entry_hat = 0.0; // aligned estimate
    double entry_true = 0.0;
    double entry_se = 0.0;
    double t_entry = 0.0;
    double mean_hat = 0.0;
    double mean_true = 0.0;
    double mean_se = 0.0;
    double t_mean = 0.0;
    FitInvariants invariants;
};

struct NormalityStudy {
    std::vector<NormalityRep> reps;
    int non_converged = 0;

    std::vector<double> t_entry() const; // converged replications only
    std::vector<double> t_mean() const;
};

NormalityStudy run_normality_study(const TruthSpec& spec, int reps, const NormalityTargets& targets = {},
                                   const StudyOptions& options = {});

/// sup_x |F_n(x) - Phi(x)|.
double ks_statistic_normal(std::vector<double> sample);

/// Fraction of |t| <= Phi^{-1}(0.5 + level / 2).
double coverage(const std::vector<double>& t, double level);

} // namespace lsm

#endif // LSM_SIMULATION_HPP
