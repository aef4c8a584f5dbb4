#include "lsm/pgd.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "lsm/errors.hpp"

namespace lsm {

EtaMode parse_eta_mode(std::string_view name) {
    if (name == "fixed") {
        return EtaMode::FixedInit;
    }
    if (name == "refresh") {
        return EtaMode::RefreshEachIter;
    }
    throw DataError("unknown eta mode '" + std::string(name) + "' (expected fixed or refresh)");
}

StopRule parse_stop_rule(std::string_view name) {
    if (name == "score") {
        return StopRule::MaxAbsScore;
    }
    if (name == "grad") {
        return StopRule::GradFroNorm;
    }
    if (name == "none") {
        return StopRule::None;
    }
    throw DataError("unknown stop rule '" + std::string(name) + "' (expected score, grad or none)");
}

std::string_view eta_mode_name(EtaMode mode) {
    return mode == EtaMode::FixedInit ? "fixed" : "refresh";
}

std::string_view stop_rule_name(StopRule rule) {
    switch (rule) {
    case StopRule::MaxAbsScore:
        return "score";
    case StopRule::GradFroNorm:
        return "grad";
    case StopRule::None:
        return "none";
    }
    return "none";
}

void PgdConfig::validate() const {
    if (!(c_ls > 0.0)) {
        throw DataError("pgd: c_ls must be positive");
    }
    if (!(beta > 0.0 && beta < 1.0)) {
        throw DataError("pgd: beta must lie in (0, 1)");
    }
    if (max_iters < 1) {
        throw DataError("pgd: max_iters must be positive");
    }
    if (backtrack_budget && *backtrack_budget < 1) {
        throw DataError("pgd: backtrack budget must be positive");
    }
    if (eta_init && !(*eta_init > 0.0 && std::isfinite(*eta_init))) {
        throw DataError("pgd: eta_init must be positive and finite");
    }
    if (!(stop_tol >= 0.0)) {
        throw DataError("pgd: stop_tol must be nonnegative");
    }
}

int default_backtrack_budget(Eigen::Index n) {
    const double v = std::ceil(std::log(static_cast<double>(std::max<Eigen::Index>(n, 2))));
    return std::max(1, static_cast<int>(v));
}

namespace {

// Dense per-iteration state: Theta, means, the score matrix and the
// eta-independent products that make each line-search trial elementwise.
class Workspace {
public:
    Workspace(const Network& A, EdgeFamily family)
        : A_(A), family_(family), consts_(detail::nll_constants(A, family)) {}

    /// Fills Theta, mu, loss and gradient at Y. Returns false on non-finite values.
    bool evaluate(const LatentState& Y) {
        const Eigen::Index n = A_.n();
        Theta_.noalias() = Y.Z * Y.Z.transpose();
        Theta_.colwise() += Y.alpha;
        Theta_.rowwise() += Y.alpha.transpose();
        mu_.resize(n, n);
        G_.resize(n, n);
        double loss = 0.0;
        detail::with_kernel(family_, [&](auto kernel) {
            using K = decltype(kernel);
            for (Eigen::Index j = 0; j < n; ++j) {
                for (Eigen::Index i = 0; i < j; ++i) {
                    const double t = Theta_(i, j);
                    const double m = K::mean(t);
                    const double x = A_.weights(i, j);
                    mu_(i, j) = m;
                    mu_(j, i) = m;
                    G_(i, j) = x - m;
                    G_(j, i) = x - m;
                    loss += K::nll(t, m, x);
                }
                mu_(j, j) = K::mean(Theta_(j, j));
                G_(j, j) = 0.0;
            }
            return 0;
        });
        loss_ = loss + consts_.total;
        grad_.Z.noalias() = -(G_ * Y.Z);
        grad_.alpha = -G_.rowwise().sum();
        return std::isfinite(loss_) && grad_.Z.allFinite() && grad_.alpha.allFinite();
    }

    /// d(Y) and the products needed for trial steps along it.
    void prepare_direction(const LatentState& Y) {
        const Eigen::Index n = A_.n();
        dZ_ = -(grad_.Z.rowwise() - grad_.Z.colwise().mean());
        dalpha_ = -grad_.alpha;
        // <grad L, d> = -(||J grad_Z||^2 + ||grad_alpha||^2)
        inner_ = -(dZ_.squaredNorm() + dalpha_.squaredNorm());
        row_sq_ = grad_.Z.rowwise().squaredNorm() + grad_.alpha.cwiseAbs2();

        Eigen::MatrixXd cross(n, n);
        cross.noalias() = Y.Z * dZ_.transpose();
        lin_ = cross + cross.transpose();
        lin_.colwise() += dalpha_;
        lin_.rowwise() += dalpha_.transpose();
        quad_.noalias() = dZ_ * dZ_.transpose();
        // row_(j, i) = <z_j, grad_z_i>
        row_.noalias() = Y.Z * grad_.Z.transpose();
    }

    LineSearchOutcome test(double eta, double c_ls, bool short_circuit = false) const {
        const Eigen::Index n = A_.n();
        const double penalty = c_ls * static_cast<double>(n) * eta * eta;
        LineSearchOutcome out;
        detail::with_kernel(family_, [&](auto kernel) {
            using K = decltype(kernel);
            double full = 0.0;
            for (Eigen::Index j = 0; j < n; ++j) {
                for (Eigen::Index i = 0; i < j; ++i) {
                    const double delta = eta * lin_(i, j) + eta * eta * quad_(i, j);
                    full += K::nll_delta(Theta_(i, j), mu_(i, j), A_.weights(i, j), delta);
                }
            }
            const double lhs = full - penalty * inner_;
            out.full = std::isfinite(lhs) && lhs <= 0.0;
            if (short_circuit && !out.full) {
                return 0;
            }

            bool rows_ok = true;
            for (Eigen::Index i = 0; i < n && rows_ok; ++i) {
                const double ga = grad_.alpha(i);
                double change = 0.0;
                for (Eigen::Index j = 0; j < n; ++j) {
                    if (j == i) {
                        continue;
                    }
                    const double delta = -eta * (row_(j, i) + ga);
                    change += K::nll_delta(Theta_(j, i), mu_(j, i), A_.weights(j, i), delta);
                }
                const double row_lhs = change + penalty * row_sq_(i);
                rows_ok = std::isfinite(row_lhs) && row_lhs <= 0.0;
            }
            out.rows = rows_ok;
            return 0;
        });
        return out;
    }

    double closed_form_eta(const LatentState& Y) const {
        const Eigen::Index n = A_.n();
        double curvature = 0.0;
        for (Eigen::Index j = 0; j < n; ++j) {
            for (Eigen::Index i = 0; i < j; ++i) {
                curvature = std::max(curvature, mean_derivative(family_, Theta_(i, j)));
            }
        }
        const double op2 = Y.k() > 0 ? operator_norm_sq(Y.Z) : 0.0;
        double cap = 1.0 / static_cast<double>(n);
        if (op2 > 0.0) {
            cap = std::min(cap, 1.0 / op2);
        }
        return cap / (6.0 * (1.0 + curvature));
    }

    static double operator_norm_sq(const Eigen::MatrixXd& Z) {
        const Eigen::MatrixXd gram = Z.transpose() * Z;
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(gram, Eigen::EigenvaluesOnly);
        return std::max(0.0, eig.eigenvalues().maxCoeff());
    }

    double loss() const { return loss_; }
    const Gradient& grad() const { return grad_; }
    const Eigen::MatrixXd& dZ() const { return dZ_; }
    const Eigen::VectorXd& dalpha() const { return dalpha_; }

private:
    const Network& A_;
    EdgeFamily family_;
    detail::NllConstants consts_;
    Eigen::MatrixXd Theta_, mu_, G_;
    Gradient grad_;
    double loss_ = 0.0;
    Eigen::MatrixXd dZ_;
    Eigen::VectorXd dalpha_;
    double inner_ = 0.0;
    Eigen::VectorXd row_sq_;
    Eigen::MatrixXd lin_, quad_, row_;
};

void check_inputs(const Network& A, EdgeFamily family, const LatentState& Y) {
    detail::check_conformable(Y, A);
    validate_support(A, family);
}

} // namespace

Eigen::MatrixXd descent_direction(const LatentState& Y, const Network& A, EdgeFamily family) {
    check_inputs(A, family, Y);
    Workspace ws(A, family);
    ws.evaluate(Y);
    ws.prepare_direction(Y);
    Eigen::MatrixXd d(Y.n(), Y.k() + 1);
    d.leftCols(Y.k()) = ws.dZ();
    d.col(Y.k()) = ws.dalpha();
    return d;
}

LineSearchOutcome line_search_conditions(const LatentState& Y, double eta, const Network& A,
                                         EdgeFamily family, double c_ls) {
    if (!(eta > 0.0)) {
        throw DataError("line search: eta must be positive");
    }
    check_inputs(A, family, Y);
    Workspace ws(A, family);
    if (!ws.evaluate(Y)) {
        throw NumericalError("line search: non-finite loss at the current iterate");
    }
    ws.prepare_direction(Y);
    return ws.test(eta, c_ls);
}

double default_eta_init(const LatentState& Y0, const Network& A, EdgeFamily family) {
    detail::check_conformable(Y0, A);
    Workspace ws(A, family);
    ws.evaluate(Y0);
    return ws.closed_form_eta(Y0);
}

FitResult fit(const Network& A, EdgeFamily family, const LatentState& Y0, const PgdConfig& config) {
    config.validate();
    check_inputs(A, family, Y0);
    const Eigen::Index n = A.n();
    {
        const double scale = std::max(1.0, Y0.Z.size() ? Y0.Z.cwiseAbs().maxCoeff() : 0.0);
        const double dev = Y0.Z.size() ? Y0.Z.colwise().sum().cwiseAbs().maxCoeff() : 0.0;
        if (dev > 1e-8 * static_cast<double>(n) * scale) {
            throw DataError("pgd: initial latent positions are not centered (use center_reparam)");
        }
    }

    Workspace ws(A, family);
    LatentState Y = Y0;
    if (!ws.evaluate(Y)) {
        throw NumericalError("pgd: non-finite loss at the initial estimate");
    }

    FitResult result;
    result.backtrack_budget = config.backtrack_budget.value_or(default_backtrack_budget(n));
    const double eta_closed0 = ws.closed_form_eta(Y);
    result.eta_init = config.eta_init.value_or(eta_closed0);
    const double eta_ratio = result.eta_init / eta_closed0;
    result.trace.reserve(static_cast<std::size_t>(std::min(config.max_iters, 100000)) + 1);

    for (int r = 0;; ++r) {
        IterTrace rec;
        rec.iter = r;
        rec.loss = ws.loss();
        rec.max_abs_score = ws.grad().max_abs();
        rec.grad_fro = std::sqrt(ws.grad().Z.squaredNorm() + ws.grad().alpha.squaredNorm());
        rec.center_dev = Y.Z.size() ? Y.Z.colwise().sum().cwiseAbs().maxCoeff() : 0.0;
        rec.z_max = Y.Z.size() ? Y.Z.cwiseAbs().maxCoeff() : 0.0;
        rec.row_norm = two_to_inf_norm(Y.stacked());

        bool stop = false;
        switch (config.stop_rule) {
        case StopRule::MaxAbsScore:
            stop = rec.max_abs_score <= config.stop_tol;
            break;
        case StopRule::GradFroNorm:
            stop = rec.grad_fro <= config.stop_tol;
            break;
        case StopRule::None:
            break;
        }
        if (stop) {
            result.converged = true;
            result.converged_at = r;
            result.trace.push_back(rec);
            break;
        }
        if (r == config.max_iters) {
            result.trace.push_back(rec);
            break;
        }

        ws.prepare_direction(Y);
        double eta = result.eta_init;
        if (config.eta_mode == EtaMode::RefreshEachIter && r > 0) {
            eta = eta_ratio * ws.closed_form_eta(Y);
        }
        if (config.line_search) {
            LineSearchOutcome ok = ws.test(eta, config.c_ls, true);
            while (!(ok.full && ok.rows)) {
                if (rec.backtracks == result.backtrack_budget) {
                    rec.budget_exhausted = true;
                    ++result.budget_exhausted_count;
                    break;
                }
                eta *= config.beta;
                ++rec.backtracks;
                ok = ws.test(eta, config.c_ls, true);
            }
            rec.cond_full = ok.full;
        }
        rec.eta = eta;
        result.trace.push_back(rec);

        Y.Z.noalias() += eta * ws.dZ();
        Y.alpha.noalias() += eta * ws.dalpha();
        ++result.iterations;

        if (!ws.evaluate(Y)) {
            result.diverged = true;
            break;
        }
    }
    result.state = std::move(Y);
    return result;
}

FitInvariants check_invariants(const FitResult& result, const PgdConfig& config) {
    FitInvariants inv;
    const double n = static_cast<double>(result.state.n());
    const double lower = result.eta_init * std::pow(config.beta, result.backtrack_budget);
    const double slack = 1e-12 * result.eta_init;
    for (std::size_t t = 0; t < result.trace.size(); ++t) {
        const IterTrace& rec = result.trace[t];
        const double scale = n * std::max(rec.z_max, 1e-300);
        const double ratio = rec.z_max > 0.0 ? rec.center_dev / scale : 0.0;
        inv.max_center_ratio = std::max(inv.max_center_ratio, ratio);
        if (rec.center_dev > 1e-7 * n * rec.z_max + 1e-300) {
            inv.centered = false;
        }
        inv.max_backtracks = std::max(inv.max_backtracks, rec.backtracks);
        if (rec.backtracks > result.backtrack_budget) {
            inv.backtracks_in_budget = false;
        }
        inv.max_row_norm = std::max(inv.max_row_norm, rec.row_norm);
        const bool moved = rec.eta > 0.0;
        if (moved && config.eta_mode == EtaMode::FixedInit) {
            if (config.line_search) {
                if (rec.eta > result.eta_init + slack || rec.eta < lower - slack) {
                    inv.eta_in_bounds = false;
                }
            } else if (rec.eta != result.eta_init) {
                inv.eta_in_bounds = false;
            }
        }
        if (moved && config.line_search && rec.cond_full && t + 1 < result.trace.size()) {
            const double next = result.trace[t + 1].loss;
            if (next > rec.loss + 1e-11 * std::abs(rec.loss)) {
                inv.monotone = false;
            }
        }
    }
    return inv;
}

} // namespace lsm
