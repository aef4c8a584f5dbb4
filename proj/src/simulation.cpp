#include "lsm/simulation.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <thread>

#include "lsm/errors.hpp"
#include "lsm/inference.hpp"
#include "lsm/rasvt.hpp"

namespace lsm {

namespace {

constexpr std::uint64_t kNetworkStream = 1;

double truncated_normal(std::mt19937_64& rng, double bound) {
    std::normal_distribution<double> normal;
    for (;;) {
        const double v = normal(rng);
        if (std::abs(v) <= bound) {
            return v;
        }
    }
}

struct ReplicationStart {
    Network network;
    LatentState init;
    double eta0 = 0.0;
};

ReplicationStart start_replication(const LatentState& truth, const TruthSpec& spec, int rep) {
    ReplicationStart s;
    s.network = sample_network(truth, spec.family,
                               derive_seed(spec.seed, kNetworkStream, static_cast<std::uint64_t>(rep)));
    s.init = ra_svt(s.network, spec.family, default_config(s.network, spec.k));
    s.eta0 = 6.0 * default_eta_init(s.init, s.network, spec.family);
    return s;
}

PgdConfig study_config(const StudyOptions& options, double eta, bool adaptive) {
    PgdConfig cfg;
    cfg.max_iters = options.max_iters;
    cfg.stop_tol = options.stop_tol;
    cfg.eta_init = eta;
    cfg.line_search = adaptive;
    return cfg;
}

double mean_backtracks(const FitResult& r) {
    if (r.iterations == 0) {
        return 0.0;
    }
    double total = 0.0;
    for (const auto& rec : r.trace) {
        total += rec.backtracks;
    }
    return total / r.iterations;
}

} // namespace

void TruthSpec::validate() const {
    if (k < 1) {
        throw DataError("truth: k must be at least 1");
    }
    if (n <= 2 * (k + 2)) {
        throw DataError("truth: need n > 2(k + 2)");
    }
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream, std::uint64_t index) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(index),
                      static_cast<std::uint32_t>(index >> 32)};
    std::uint32_t words[2];
    seq.generate(words, words + 2);
    return (static_cast<std::uint64_t>(words[0]) << 32) | words[1];
}

LatentState gen_truth(const TruthSpec& spec) {
    spec.validate();
    const Eigen::Index n = spec.n;
    std::mt19937_64 rng(spec.seed);

    std::uniform_real_distribution<double> unif(1.0, 3.0);
    Eigen::VectorXd a(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        a(i) = unif(rng);
    }

    Eigen::MatrixXd Zt(n, spec.k);
    for (Eigen::Index c = 0; c < spec.k; ++c) {
        for (Eigen::Index i = 0; i < n; ++i) {
            Zt(i, c) = truncated_normal(rng, 2.0);
        }
    }
    const Eigen::MatrixXd centered = Zt.rowwise() - Zt.colwise().mean();
    Eigen::BDCSVD<Eigen::MatrixXd> svd(centered, Eigen::ComputeThinU);
    Eigen::MatrixXd U = svd.matrixU().leftCols(spec.k);
    canonicalize_signs(U);

    LatentState truth;
    truth.alpha = a / a.sum();
    truth.Z = 0.5 * std::sqrt(static_cast<double>(n)) * U;
    return truth;
}

Network sample_network(const LatentState& truth, EdgeFamily family, std::uint64_t seed) {
    truth.check_shape();
    const Eigen::Index n = truth.n();
    std::mt19937_64 rng(seed);
    Eigen::MatrixXd W = Eigen::MatrixXd::Zero(n, n);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    std::normal_distribution<double> normal;
    for (Eigen::Index j = 0; j < n; ++j) {
        for (Eigen::Index i = 0; i < j; ++i) {
            const double t = truth.alpha(i) + truth.alpha(j) + truth.Z.row(i).dot(truth.Z.row(j));
            double x = 0.0;
            switch (family) {
            case EdgeFamily::Poisson: {
                std::poisson_distribution<long long> pois(std::exp(t));
                x = static_cast<double>(pois(rng));
                break;
            }
            case EdgeFamily::Bernoulli:
                x = unif(rng) < detail::logistic(t) ? 1.0 : 0.0;
                break;
            case EdgeFamily::Gaussian:
                x = t + normal(rng);
                break;
            }
            W(i, j) = x;
            W(j, i) = x;
        }
    }
    return make_network(std::move(W));
}

void parallel_for(int count, int threads, const std::function<void(int)>& fn) {
    const int workers = std::max(1, std::min(threads, count));
    if (workers == 1) {
        for (int i = 0; i < count; ++i) {
            fn(i);
        }
        return;
    }
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errors(static_cast<std::size_t>(workers));
    for (int w = 0; w < workers; ++w) {
        pool.emplace_back([&, w] {
            try {
                for (int i = w; i < count; i += workers) {
                    fn(i);
                }
            } catch (...) {
                errors[static_cast<std::size_t>(w)] = std::current_exception();
            }
        });
    }
    for (auto& t : pool) {
        t.join();
    }
    for (auto& e : errors) {
        if (e) {
            std::rethrow_exception(e);
        }
    }
}

ConvergenceStudy run_convergence_study(const TruthSpec& spec, const std::vector<double>& eta_scales,
                                       bool adaptive, int reps, const StudyOptions& options) {
    if (reps < 1) {
        throw DataError("convergence study: reps must be at least 1");
    }
    const LatentState truth = gen_truth(spec);
    const std::size_t per_rep = eta_scales.size();
    std::vector<StudyFit> fits(static_cast<std::size_t>(reps) * per_rep);

    parallel_for(reps, options.threads, [&](int rep) {
        const ReplicationStart start = start_replication(truth, spec, rep);
        for (std::size_t s = 0; s < per_rep; ++s) {
            const PgdConfig cfg = study_config(options, eta_scales[s] * start.eta0, adaptive);
            const FitResult res = fit(start.network, spec.family, start.init, cfg);
            StudyFit& out = fits[static_cast<std::size_t>(rep) * per_rep + s];
            out.rep = rep;
            out.scale = eta_scales[s];
            out.converged = res.converged;
            out.iterations = res.converged_at.value_or(res.iterations);
            out.mean_backtracks = mean_backtracks(res);
            out.diverged = res.diverged;
            out.invariants = check_invariants(res, cfg);
        }
    });

    ConvergenceStudy study;
    study.fits = std::move(fits);
    for (std::size_t s = 0; s < per_rep; ++s) {
        ConvergenceCell cell;
        cell.scale = eta_scales[s];
        cell.adaptive = adaptive;
        cell.reps = reps;
        double iters = 0.0;
        double bt = 0.0;
        for (int rep = 0; rep < reps; ++rep) {
            const StudyFit& f = study.fits[static_cast<std::size_t>(rep) * per_rep + s];
            if (f.converged) {
                ++cell.converged;
                iters += f.iterations;
            }
            bt += f.mean_backtracks;
        }
        cell.proportion = static_cast<double>(cell.converged) / reps;
        cell.mean_iterations = cell.converged ? iters / cell.converged : 0.0;
        cell.mean_backtracks = bt / reps;
        study.cells.push_back(cell);
    }
    return study;
}

std::vector<double> NormalityStudy::t_entry() const {
    std::vector<double> out;
    for (const auto& r : reps) {
        if (r.converged) {
            out.push_back(r.t_entry);
        }
    }
    return out;
}

std::vector<double> NormalityStudy::t_mean() const {
    std::vector<double> out;
    for (const auto& r : reps) {
        if (r.converged) {
            out.push_back(r.t_mean);
        }
    }
    return out;
}

NormalityStudy run_normality_study(const TruthSpec& spec, int reps, const NormalityTargets& targets,
                                   const StudyOptions& options) {
    if (reps < 1) {
        throw DataError("normality study: reps must be at least 1");
    }
    const LatentState truth = gen_truth(spec);
    const Eigen::Index n = truth.n();
    const Eigen::Index k = truth.k();
    if (targets.node < 0 || targets.node >= n || targets.coord < 0 || targets.coord > k ||
        targets.pair_i < 0 || targets.pair_i >= n || targets.pair_j < 0 || targets.pair_j >= n ||
        targets.pair_i == targets.pair_j) {
        throw DataError("normality study: target indices out of range");
    }
    const double theta_true = truth.alpha(targets.pair_i) + truth.alpha(targets.pair_j) +
                              truth.Z.row(targets.pair_i).dot(truth.Z.row(targets.pair_j));
    const double mean_true = mean(spec.family, theta_true);
    const double entry_true =
        targets.coord < k ? truth.Z(targets.node, targets.coord) : truth.alpha(targets.node);

    NormalityStudy study;
    study.reps.resize(static_cast<std::size_t>(reps));
    parallel_for(reps, options.threads, [&](int rep) {
        const ReplicationStart start = start_replication(truth, spec, rep);
        const PgdConfig cfg = study_config(options, targets.eta_scale * start.eta0, true);
        const FitResult res = fit(start.network, spec.family, start.init, cfg);

        NormalityRep& out = study.reps[static_cast<std::size_t>(rep)];
        out.rep = rep;
        out.converged = res.converged;
        out.invariants = check_invariants(res, cfg);
        out.entry_true = entry_true;
        out.mean_true = mean_true;
        if (!res.converged) {
            return;
        }
        LatentState aligned{procrustes_align(res.state.Z, truth.Z).Zq, res.state.alpha};
        out.entry_hat = targets.coord < k ? aligned.Z(targets.node, targets.coord)
                                          : aligned.alpha(targets.node);
        out.entry_se = entry_se(aligned, start.network, spec.family, targets.node, targets.coord);
        out.t_entry = (out.entry_hat - entry_true) / out.entry_se;

        const double theta_hat = aligned.alpha(targets.pair_i) + aligned.alpha(targets.pair_j) +
                                 aligned.Z.row(targets.pair_i).dot(aligned.Z.row(targets.pair_j));
        out.mean_hat = mean(spec.family, theta_hat);
        out.mean_se = edge_mean_se(aligned, start.network, spec.family, targets.pair_i, targets.pair_j);
        out.t_mean = (out.mean_hat - mean_true) / out.mean_se;
    });
    for (const auto& r : study.reps) {
        if (!r.converged) {
            ++study.non_converged;
        }
    }
    return study;
}

double ks_statistic_normal(std::vector<double> sample) {
    if (sample.empty()) {
        return 1.0;
    }
    std::sort(sample.begin(), sample.end());
    const auto m = static_cast<double>(sample.size());
    double d = 0.0;
    for (std::size_t i = 0; i < sample.size(); ++i) {
        const double f = normal_cdf(sample[i]);
        d = std::max(d, std::max(static_cast<double>(i + 1) / m - f, f - static_cast<double>(i) / m));
    }
    return d;
}

double coverage(const std::vector<double>& t, double level) {
    if (t.empty()) {
        return 0.0;
    }
    const double crit = normal_quantile(0.5 + 0.5 * level);
    const auto hits = std::count_if(t.begin(), t.end(), [crit](double v) { return std::abs(v) <= crit; });
    return static_cast<double>(hits) / static_cast<double>(t.size());
}

} // namespace lsm
