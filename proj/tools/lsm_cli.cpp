// Command-line front end: simulate, fit, infer, compare, study.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "lsm/errors.hpp"
#include "lsm/inference.hpp"
#include "lsm/io.hpp"
#include "lsm/pgd.hpp"
#include "lsm/rasvt.hpp"
#include "lsm/simulation.hpp"

namespace fs = std::filesystem;
using namespace lsm;

namespace {

constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitNumerical = 3;

struct Common {
    std::string family = "poisson";
    int k = 2;
    std::uint64_t seed = 1;
    int threads = 1;
    std::string out;
};

void add_common(CLI::App* cmd, Common& c, bool with_out = true) {
    cmd->add_option("--family", c.family, "Edge family: poisson, bernoulli or gaussian")
        ->check(CLI::IsMember({"poisson", "bernoulli", "gaussian"}));
    cmd->add_option("--k", c.k, "Latent dimension")->check(CLI::PositiveNumber);
    cmd->add_option("--seed", c.seed, "Random seed");
    cmd->add_option("--threads", c.threads, "Worker threads")->check(CLI::PositiveNumber);
    if (with_out) {
        cmd->add_option("--out", c.out, "Output path");
    }
}

std::ofstream open_out(const std::string& path) {
    std::ofstream out(path);
    if (!out) {
        throw DataError("cannot write '" + path + "'");
    }
    return out;
}

std::vector<double> parse_scales(const std::string& text) {
    std::vector<double> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        const auto slash = item.find('/');
        try {
            if (slash != std::string::npos) {
                out.push_back(std::stod(item.substr(0, slash)) / std::stod(item.substr(slash + 1)));
            } else {
                out.push_back(std::stod(item));
            }
        } catch (const std::exception&) {
            throw DataError("cannot parse step scale '" + item + "'");
        }
    }
    if (out.empty()) {
        throw DataError("no step scales given");
    }
    return out;
}

// --- simulate -------------------------------------------------------------

struct SimulateArgs {
    Common common;
    int n = 500;
};

int run_simulate(const SimulateArgs& a) {
    TruthSpec spec;
    spec.n = a.n;
    spec.k = a.common.k;
    spec.family = parse_family(a.common.family);
    spec.seed = a.common.seed;
    const std::string dir = a.common.out.empty() ? "." : a.common.out;
    fs::create_directories(dir);

    const LatentState truth = gen_truth(spec);
    const Network net = sample_network(truth, spec.family, derive_seed(spec.seed, 1, 0));

    const std::string net_path = (fs::path(dir) / "network.csv").string();
    auto out = open_out(net_path);
    write_edge_list(net, out);

    FitArtifact art;
    art.family = spec.family;
    art.labels = net.labels;
    art.state = truth;
    art.config = {{"kind", "truth"}, {"n", spec.n}, {"k", spec.k}, {"seed", spec.seed}};
    art.diagnostics.converged = true;
    art.network_path = fs::absolute(net_path).string();
    save_artifact(art, (fs::path(dir) / "truth.json").string());
    std::cerr << "wrote " << net_path << " and " << (fs::path(dir) / "truth.json").string() << '\n';
    return 0;
}

// --- fit ------------------------------------------------------------------

struct FitArgs {
    Common common;
    std::string network;
    std::string trace;
    std::string init = "rasvt";
    std::optional<double> tau;
    std::optional<std::int64_t> gamma;
    int max_iters = 2000;
    double beta = 0.5;
    double c_ls = 1.0;
    std::string eta_init = "auto";
    std::string eta_mode = "fixed";
    double stop_tol = 0.01;
    std::string stop_rule = "score";
    bool no_line_search = false;
    std::optional<int> backtrack_budget;
};

int run_fit(const FitArgs& a) {
    const EdgeFamily family = parse_family(a.common.family);
    const Network net = load_network(a.network, family);

    LatentState init;
    nlohmann::json init_echo;
    if (a.init == "rasvt") {
        RasvtConfig rc = default_config(net, a.common.k);
        if (a.tau) {
            rc.tau = *a.tau;
        }
        if (a.gamma) {
            rc.gamma = *a.gamma;
        }
        init = ra_svt(net, family, rc);
        init_echo = {{"source", "rasvt"}, {"tau", rc.tau}, {"gamma", rc.gamma}};
    } else if (a.init.rfind("file:", 0) == 0) {
        const std::string path = a.init.substr(5);
        const FitArtifact start = load_artifact(path);
        if (start.labels != net.labels) {
            throw DataError("initial state labels do not match the network");
        }
        if (start.state.k() != a.common.k) {
            throw DataError("initial state has k = " + std::to_string(start.state.k()));
        }
        init = center_reparam(start.state);
        init_echo = {{"source", "file"}, {"path", path}};
    } else {
        throw DataError("--init must be 'rasvt' or 'file:<path>'");
    }

    PgdConfig cfg;
    cfg.max_iters = a.max_iters;
    cfg.beta = a.beta;
    cfg.c_ls = a.c_ls;
    cfg.stop_tol = a.stop_tol;
    cfg.stop_rule = parse_stop_rule(a.stop_rule);
    cfg.eta_mode = parse_eta_mode(a.eta_mode);
    cfg.line_search = !a.no_line_search;
    cfg.backtrack_budget = a.backtrack_budget;
    if (a.eta_init != "auto") {
        try {
            cfg.eta_init = std::stod(a.eta_init);
        } catch (const std::exception&) {
            throw DataError("--eta-init must be 'auto' or a number");
        }
    }
    const FitResult res = fit(net, family, init, cfg);

    const std::string out_path = a.common.out.empty() ? "fit.json" : a.common.out;
    const std::string trace_path = a.trace.empty() ? out_path + ".trace.csv" : a.trace;
    {
        auto t = open_out(trace_path);
        write_trace_csv(res, t);
    }
    FitArtifact art;
    art.family = family;
    art.labels = net.labels;
    art.state = res.state;
    art.config = {{"init", init_echo},
                  {"max_iters", cfg.max_iters},
                  {"beta", cfg.beta},
                  {"c_ls", cfg.c_ls},
                  {"eta_init", a.eta_init},
                  {"eta_mode", std::string(eta_mode_name(cfg.eta_mode))},
                  {"stop_tol", cfg.stop_tol},
                  {"stop_rule", std::string(stop_rule_name(cfg.stop_rule))},
                  {"line_search", cfg.line_search},
                  {"backtrack_budget", res.backtrack_budget}};
    art.diagnostics = diagnostics_of(res);
    art.network_path = fs::absolute(a.network).string();
    art.trace_path = fs::absolute(trace_path).string();
    save_artifact(art, out_path);

    std::cerr << (res.converged ? "converged" : "not converged") << " after " << res.iterations
              << " iterations; max |score| = " << art.diagnostics.final_max_abs_score << '\n';
    if (res.budget_exhausted_count > 0) {
        std::cerr << "warning: backtracking budget exhausted in " << res.budget_exhausted_count
                  << " iterations\n";
    }
    return 0;
}

// --- infer ----------------------------------------------------------------

struct InferArgs {
    std::string artifact;
    std::string network;
    std::vector<std::string> nodes;
    std::vector<std::string> pairs;
    double level = 0.95;
    std::string out;
};

Network network_for(const FitArtifact& art, const std::string& override_path) {
    const std::string path = override_path.empty() ? art.network_path : override_path;
    if (path.empty()) {
        throw DataError("fit artifact has no network path; pass --network");
    }
    Network net = load_network(path, art.family);
    if (net.labels != art.labels) {
        throw DataError("network labels do not match the fit artifact");
    }
    return net;
}

int run_infer(const InferArgs& a) {
    const FitArtifact art = load_artifact(a.artifact);
    const Network net = network_for(art, a.network);
    if (a.nodes.empty() && a.pairs.empty()) {
        throw DataError("nothing to infer: pass --node and/or --pair");
    }
    const auto reports = infer_reports(art, net, a.nodes, a.pairs, a.level);
    if (a.out.empty()) {
        write_reports_csv(reports, std::cout);
    } else {
        auto out = open_out(a.out);
        write_reports_csv(reports, out);
    }
    return 0;
}

// --- compare --------------------------------------------------------------

struct CompareArgs {
    std::string first;
    std::string second;
    double level = 0.05;
    std::string out = "compare";
};

int run_compare(const CompareArgs& a) {
    const FitArtifact f1 = load_artifact(a.first);
    const FitArtifact f2 = load_artifact(a.second);
    FittedNetwork n1{f1.state, network_for(f1, ""), f1.family};
    FittedNetwork n2{f2.state, network_for(f2, ""), f2.family};
    const ComparisonResult res = compare_networks(n1, n2, a.level);
    {
        auto out = open_out(a.out + ".pairs.csv");
        write_pairs_csv(res, out);
    }
    {
        auto out = open_out(a.out + ".rates.csv");
        write_rates_csv(res, out);
    }
    std::size_t rejected = 0;
    for (const auto& p : res.pairs) {
        rejected += p.rejected ? 1 : 0;
    }
    std::cerr << rejected << " of " << res.pairs.size() << " pairs rejected at level " << a.level << '\n';
    return 0;
}

// --- study ----------------------------------------------------------------

struct StudyArgs {
    Common common;
    int n = 500;
    int reps = 20;
    std::string scales = "10,5,1,1/5";
    std::string mode = "both";
    int max_iters = 2000;
    double stop_tol = 0.01;
};

std::string scale_name(double s) {
    std::ostringstream o;
    o << s;
    return o.str();
}

int run_study_convergence(const StudyArgs& a) {
    TruthSpec spec{a.n, a.common.k, parse_family(a.common.family), a.common.seed};
    const auto scales = parse_scales(a.scales);
    StudyOptions opt{a.common.threads, a.max_iters, a.stop_tol};
    std::vector<bool> modes;
    if (a.mode == "both" || a.mode == "adaptive") {
        modes.push_back(true);
    }
    if (a.mode == "both" || a.mode == "fixed") {
        modes.push_back(false);
    }
    std::ostringstream header, row;
    header << "n";
    row << a.n;
    for (bool adaptive : modes) {
        const auto study = run_convergence_study(spec, scales, adaptive, a.reps, opt);
        for (const auto& cell : study.cells) {
            header << ',' << (adaptive ? "adaptive_" : "fixed_") << scale_name(cell.scale);
            row << ',' << format_double(cell.proportion);
            std::cerr << (adaptive ? "adaptive" : "fixed") << " scale " << cell.scale << ": "
                      << cell.converged << "/" << cell.reps << " converged, mean R_conv "
                      << cell.mean_iterations << ", mean backtracks " << cell.mean_backtracks << '\n';
        }
    }
    const std::string text = header.str() + "\n" + row.str() + "\n";
    if (a.common.out.empty()) {
        std::cout << text;
    } else {
        auto out = open_out(a.common.out);
        out << text;
    }
    return 0;
}

int run_study_normality(const StudyArgs& a) {
    TruthSpec spec{a.n, a.common.k, parse_family(a.common.family), a.common.seed};
    StudyOptions opt{a.common.threads, a.max_iters, a.stop_tol};
    const NormalityStudy study = run_normality_study(spec, a.reps, {}, opt);
    std::ostringstream text;
    text << "rep,converged,entry_hat,entry_true,entry_se,t_entry,mean_hat,mean_true,mean_se,t_mean\n";
    for (const auto& r : study.reps) {
        text << r.rep << ',' << (r.converged ? 1 : 0) << ',' << format_double(r.entry_hat) << ','
             << format_double(r.entry_true) << ',' << format_double(r.entry_se) << ','
             << format_double(r.t_entry) << ',' << format_double(r.mean_hat) << ','
             << format_double(r.mean_true) << ',' << format_double(r.mean_se) << ','
             << format_double(r.t_mean) << '\n';
    }
    if (a.common.out.empty()) {
        std::cout << text.str();
    } else {
        auto out = open_out(a.common.out);
        out << text.str();
    }
    const auto te = study.t_entry();
    const auto tm = study.t_mean();
    std::cerr << "non-converged: " << study.non_converged << "\n"
              << "entry: coverage " << coverage(te, 0.95) << ", KS " << ks_statistic_normal(te) << "\n"
              << "edge mean: coverage " << coverage(tm, 0.95) << ", KS " << ks_statistic_normal(tm) << '\n';
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Latent space network models: estimation and inference"};
    app.require_subcommand(1);

    SimulateArgs sim;
    auto* c_sim = app.add_subcommand("simulate", "Draw a ground truth and one network from it");
    add_common(c_sim, sim.common);
    c_sim->add_option("--n", sim.n, "Number of nodes")->check(CLI::PositiveNumber);

    FitArgs fa;
    auto* c_fit = app.add_subcommand("fit", "Fit a latent space model to an edge list");
    add_common(c_fit, fa.common);
    c_fit->add_option("network", fa.network, "Edge list CSV")->required();
    c_fit->add_option("--trace", fa.trace, "Trace CSV path (default <out>.trace.csv)");
    c_fit->add_option("--init", fa.init, "rasvt or file:<path>");
    c_fit->add_option("--tau", fa.tau, "Singular value threshold");
    c_fit->add_option("--gamma", fa.gamma, "Trimming rank");
    c_fit->add_option("--max-iters", fa.max_iters)->check(CLI::PositiveNumber);
    c_fit->add_option("--beta", fa.beta, "Backtracking factor");
    c_fit->add_option("--c-ls", fa.c_ls, "Line-search constant");
    c_fit->add_option("--eta-init", fa.eta_init, "auto or a positive step");
    c_fit->add_option("--eta-mode", fa.eta_mode)->check(CLI::IsMember({"fixed", "refresh"}));
    c_fit->add_option("--stop-tol", fa.stop_tol);
    c_fit->add_option("--stop-rule", fa.stop_rule)->check(CLI::IsMember({"score", "grad", "none"}));
    c_fit->add_option("--backtrack-budget", fa.backtrack_budget);
    c_fit->add_flag("--no-line-search", fa.no_line_search, "Fixed step eta_init every iteration");

    InferArgs ia;
    auto* c_inf = app.add_subcommand("infer", "Standard errors and tests from a fit");
    c_inf->add_option("artifact", ia.artifact, "Fit JSON")->required();
    c_inf->add_option("--network", ia.network, "Edge list (default: path stored in the fit)");
    c_inf->add_option("--node", ia.nodes, "Node label (entrywise inference; frame-dependent)");
    c_inf->add_option("--pair", ia.pairs, "Pair 'a,b' (edge mean and inner product)");
    c_inf->add_option("--level", ia.level, "Confidence level");
    c_inf->add_option("--out", ia.out, "Output CSV (default stdout)");

    CompareArgs ca;
    auto* c_cmp = app.add_subcommand("compare", "Two-network latent similarity tests");
    c_cmp->add_option("first", ca.first)->required();
    c_cmp->add_option("second", ca.second)->required();
    c_cmp->add_option("--level", ca.level, "Benjamini-Hochberg level");
    c_cmp->add_option("--out", ca.out, "Output prefix");

    StudyArgs sa;
    auto* c_study = app.add_subcommand("study", "Monte Carlo studies");
    c_study->require_subcommand(1);
    auto add_study_opts = [&](CLI::App* cmd) {
        add_common(cmd, sa.common);
        cmd->add_option("--n", sa.n)->check(CLI::PositiveNumber);
        cmd->add_option("--reps", sa.reps)->check(CLI::PositiveNumber);
        cmd->add_option("--max-iters", sa.max_iters)->check(CLI::PositiveNumber);
        cmd->add_option("--stop-tol", sa.stop_tol);
    };
    auto* c_conv = c_study->add_subcommand("convergence", "Convergence proportions by step scale");
    add_study_opts(c_conv);
    c_conv->add_option("--scales", sa.scales, "Comma-separated multiples of eta0");
    c_conv->add_option("--mode", sa.mode)->check(CLI::IsMember({"both", "adaptive", "fixed"}));
    auto* c_norm = c_study->add_subcommand("normality", "Standardized statistics over replications");
    add_study_opts(c_norm);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitUsage;
    }

    try {
        if (*c_sim) {
            return run_simulate(sim);
        }
        if (*c_fit) {
            return run_fit(fa);
        }
        if (*c_inf) {
            return run_infer(ia);
        }
        if (*c_cmp) {
            return run_compare(ca);
        }
        if (*c_conv) {
            return run_study_convergence(sa);
        }
        if (*c_norm) {
            return run_study_normality(sa);
        }
    } catch (const NumericalError& e) {
        std::cerr << "numerical error: " << e.what() << '\n';
        return kExitNumerical;
    } catch (const DataError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitData;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitData;
    }
    return kExitUsage;
}
