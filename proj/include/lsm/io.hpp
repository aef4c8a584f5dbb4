#ifndef LSM_IO_HPP
#define LSM_IO_HPP

#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

#include "lsm/edge_family.hpp"
#include "lsm/inference.hpp"
#include "lsm/likelihood.hpp"
#include "lsm/linalg.hpp"
#include "lsm/pgd.hpp"

namespace lsm {

/// Dense storage limit on the node count.
constexpr Eigen::Index kMaxNodes = 20000;

/// Reads a CSV edge list (source, target, weight). '#' starts a comment line, a
/// header row is optional, and fields may be RFC-4180 quoted. Nodes are indexed
/// in sorted label order; unlisted pairs have weight 0.
Network load_network(const std::string& path, EdgeFamily family);
Network parse_network(std::istream& in, EdgeFamily family);

/// Writes every pair i < j with nonzero weight.
void write_edge_list(const Network& A, std::ostream& out);

/// Splits one CSV record; handles quoted fields with doubled quotes.
std::vector<std::string> split_csv_line(const std::string& line);
/// Quotes a field when it contains a comma, quote or line break.
std::string csv_field(const std::string& value);
/// Shortest decimal text that reads back to the same double.
std::string format_double(double v);

struct FitDiagnostics {
    bool converged = false;
    bool diverged = false;
    int iterations = 0;
    double final_loss = 0.0;
    double final_max_abs_score = 0.0;
    int budget_exhausted_count = 0;
    double eta_init = 0.0;
};

/// JSON document describing one fit.
struct FitArtifact {
    static constexpr int kFormatVersion = 1;

    int format_version = kFormatVersion;
    EdgeFamily family = EdgeFamily::Poisson;
    std::vector<std::string> labels;
    LatentState state;
    nlohmann::json config = nlohmann::json::object();
    FitDiagnostics diagnostics;
    std::string network_path;
    std::string trace_path;
};

FitDiagnostics diagnostics_of(const FitResult& result);

nlohmann::json to_json(const FitArtifact& artifact);
FitArtifact artifact_from_json(const nlohmann::json& doc);
void save_artifact(const FitArtifact& artifact, const std::string& path);
FitArtifact load_artifact(const std::string& path);

/// Entry reports for every coordinate of each listed node, then edge-mean and
/// inner-product reports for each "a,b" pair, all evaluated at the stored state.
std::vector<InferenceReport> infer_reports(const FitArtifact& artifact, const Network& network,
                                           const std::vector<std::string>& nodes,
                                           const std::vector<std::string>& pairs, double level);

/// Columns: iter, loss, max_abs_score, eta, backtracks.
void write_trace_csv(const FitResult& result, std::ostream& out);

/// Columns: target, estimate, se, z, p, ci_low, ci_high.
void write_reports_csv(const std::vector<InferenceReport>& reports, std::ostream& out);

/// Columns: label_i, label_j, diff, se, z, p, rejected.
void write_pairs_csv(const ComparisonResult& result, std::ostream& out);
/// Columns: label, rate.
void write_rates_csv(const ComparisonResult& result, std::ostream& out);

} // namespace lsm

#endif // LSM_IO_HPP
