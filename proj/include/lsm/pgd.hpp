#ifndef LSM_PGD_HPP
#define LSM_PGD_HPP

#include <optional>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "lsm/edge_family.hpp"
#include "lsm/likelihood.hpp"
#include "lsm/linalg.hpp"

namespace lsm {

enum class EtaMode {
    FixedInit,       // every outer iteration starts its search from eta_init
    RefreshEachIter, // eta_init is rescaled by the closed-form step at the current iterate
};

enum class StopRule { MaxAbsScore, GradFroNorm, None };

EtaMode parse_eta_mode(std::string_view name);
StopRule parse_stop_rule(std::string_view name);
std::string_view eta_mode_name(EtaMode mode);
std::string_view stop_rule_name(StopRule rule);

struct PgdConfig {
    double c_ls = 1.0;
    double beta = 0.5;
    int max_iters = 2000;
    /// Maximum number of step shrinks per iteration; ceil(log n) when unset.
    std::optional<int> backtrack_budget;
    /// Initial step; the closed-form choice at Y0 when unset.
    std::optional<double> eta_init;
    EtaMode eta_mode = EtaMode::FixedInit;
    double stop_tol = 0.01;
    StopRule stop_rule = StopRule::MaxAbsScore;
    /// false: fixed step eta_r = eta_init, no acceptance tests.
    bool line_search = true;

    void validate() const;
};

struct IterTrace {
    int iter = 0;
    double loss = 0.0;
    double max_abs_score = 0.0;
    double grad_fro = 0.0;
    double eta = 0.0; // accepted step; 0 on the terminal record
    int backtracks = 0;
    bool budget_exhausted = false;
    bool cond_full = true; // sufficient-decrease rule held at the accepted step
    double center_dev = 0.0; // max |column sum of Z^r|
    double z_max = 0.0;      // max |Z^r_ij|
    double row_norm = 0.0;   // ||Y^r||_{2->inf}
};

struct FitResult {
    LatentState state;
    std::vector<IterTrace> trace;
    bool converged = false;
    /// Iteration index r at which the stop rule fired.
    std::optional<int> converged_at;
    /// Iterates became non-finite; the fit stopped early.
    bool diverged = false;
    int budget_exhausted_count = 0;
    int iterations = 0; // number of updates applied
    double eta_init = 0.0;
    int backtrack_budget = 0;
};

/// d(Y) = -[J_n dL/dZ, dL/dalpha], an n x (k+1) matrix.
Eigen::MatrixXd descent_direction(const LatentState& Y, const Network& A, EdgeFamily family);

struct LineSearchOutcome {
    bool full = false; // whole-matrix sufficient decrease
    bool rows = false; // every single-row update satisfies its own rule
};

LineSearchOutcome line_search_conditions(const LatentState& Y, double eta, const Network& A,
                                         EdgeFamily family, double c_ls);

/// Closed-form initial step:
/// 1 / (6 max_{i<j}(1 - l''(Theta_ij))) * min(1 / ||Z||_op^2, 1 / n).
double default_eta_init(const LatentState& Y0, const Network& A, EdgeFamily family);

/// ceil(log n), at least 1.
int default_backtrack_budget(Eigen::Index n);

/// Projected gradient descent with the two-rule adaptive line search.
FitResult fit(const Network& A, EdgeFamily family, const LatentState& Y0, const PgdConfig& config);

/// Per-fit checks of the iterate invariants recorded in the trace.
struct FitInvariants {
    bool centered = true;          // |column sums of Z^r| <= 1e-7 n max|Z^r|
    bool backtracks_in_budget = true;
    bool eta_in_bounds = true;     // eta_r in [eta_init beta^R', eta_init]
    bool monotone = true;          // loss non-increasing after each accepted adaptive step
    double max_center_ratio = 0.0; // max_r |column sum| / (n max|Z^r|)
    int max_backtracks = 0;
    double max_row_norm = 0.0;     // max_r ||Y^r||_{2->inf}

    bool ok() const { return centered && backtracks_in_budget && eta_in_bounds && monotone; }
};

FitInvariants check_invariants(const FitResult& result, const PgdConfig& config);

} // namespace lsm

#endif // LSM_PGD_HPP
