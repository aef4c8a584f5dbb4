#include "lsm/io.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <map>
#include <ostream>
#include <set>
#include <sstream>

#include "lsm/errors.hpp"

namespace lsm {

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) {
        return {};
    }
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

bool parse_double(const std::string& text, double& out) {
    const std::string t = trim(text);
    if (t.empty()) {
        return false;
    }
    const char* first = t.data();
    if (*first == '+') {
        ++first;
    }
    const auto res = std::from_chars(first, t.data() + t.size(), out);
    return res.ec == std::errc() && res.ptr == t.data() + t.size();
}

Eigen::Index find_label(const std::vector<std::string>& labels, const std::string& label) {
    const auto it = std::find(labels.begin(), labels.end(), label);
    if (it == labels.end()) {
        throw DataError("unknown node label '" + label + "'");
    }
    return static_cast<Eigen::Index>(it - labels.begin());
}

[[noreturn]] void fail_line(std::size_t line, const std::string& what) {
    throw DataError("line " + std::to_string(line) + ": " + what);
}

} // namespace

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string cur;
    bool quoted = false;
    bool was_quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    cur += '"';
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                cur += c;
            }
        } else if (c == '"') {
            quoted = true;
            was_quoted = true;
            cur = trim(cur);
        } else if (c == ',') {
            fields.push_back(was_quoted ? cur : trim(cur));
            cur.clear();
            was_quoted = false;
        } else if (was_quoted && (c == ' ' || c == '\t' || c == '\r')) {
            continue;
        } else if (c != '\r' || i + 1 != line.size()) {
            cur += c;
        }
    }
    if (quoted) {
        throw DataError("unterminated quoted field");
    }
    fields.push_back(was_quoted ? cur : trim(cur));
    return fields;
}

std::string csv_field(const std::string& value) {
    if (value.find_first_of(",\"\r\n") == std::string::npos) {
        return value;
    }
    std::string out = "\"";
    for (char c : value) {
        if (c == '"') {
            out += '"';
        }
        out += c;
    }
    out += '"';
    return out;
}

std::string format_double(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

Network parse_network(std::istream& in, EdgeFamily family) {
    struct Row {
        std::string a, b;
        double w;
        std::size_t line;
    };
    std::vector<Row> rows;
    std::set<std::string> labels;
    std::string line;
    std::size_t line_no = 0;
    bool seen_data = false;
    while (std::getline(in, line)) {
        ++line_no;
        const std::string t = trim(line);
        if (t.empty() || t.front() == '#') {
            continue;
        }
        std::vector<std::string> f;
        try {
            f = split_csv_line(line);
        } catch (const DataError& e) {
            fail_line(line_no, e.what());
        }
        if (f.size() != 3) {
            fail_line(line_no, "expected 3 fields (source, target, weight), got " + std::to_string(f.size()));
        }
        double w = 0.0;
        if (!parse_double(f[2], w)) {
            if (!seen_data) {
                seen_data = true; // header row
                continue;
            }
            fail_line(line_no, "cannot parse weight '" + f[2] + "'");
        }
        seen_data = true;
        if (f[0].empty() || f[1].empty()) {
            fail_line(line_no, "empty node label");
        }
        if (f[0] == f[1]) {
            fail_line(line_no, "self-loop at node '" + f[0] + "'");
        }
        if (!in_support(family, w)) {
            throw DomainError("line " + std::to_string(line_no) + ": weight " + f[2] + " outside " +
                              std::string(family_name(family)) + " support");
        }
        labels.insert(f[0]);
        labels.insert(f[1]);
        rows.push_back({f[0], f[1], w, line_no});
    }
    if (static_cast<Eigen::Index>(labels.size()) > kMaxNodes) {
        throw DataError("network has " + std::to_string(labels.size()) +
                        " nodes; dense storage is limited to " + std::to_string(kMaxNodes));
    }
    std::vector<std::string> sorted(labels.begin(), labels.end());
    std::map<std::string, Eigen::Index> index;
    for (std::size_t i = 0; i < sorted.size(); ++i) {
        index[sorted[i]] = static_cast<Eigen::Index>(i);
    }
    const auto n = static_cast<Eigen::Index>(sorted.size());
    Eigen::MatrixXd W = Eigen::MatrixXd::Zero(n, n);
    std::map<std::pair<Eigen::Index, Eigen::Index>, std::size_t> seen;
    for (const Row& r : rows) {
        Eigen::Index i = index[r.a];
        Eigen::Index j = index[r.b];
        if (i > j) {
            std::swap(i, j);
        }
        const auto [it, fresh] = seen.emplace(std::make_pair(i, j), r.line);
        if (!fresh) {
            fail_line(r.line, "duplicate pair (" + r.a + ", " + r.b + "), first listed at line " +
                                  std::to_string(it->second));
        }
        W(i, j) = r.w;
        W(j, i) = r.w;
    }
    return make_network(std::move(W), std::move(sorted));
}

Network load_network(const std::string& path, EdgeFamily family) {
    std::ifstream in(path);
    if (!in) {
        throw DataError("cannot open network file '" + path + "'");
    }
    return parse_network(in, family);
}

void write_edge_list(const Network& A, std::ostream& out) {
    out << "source,target,weight\n";
    for (Eigen::Index i = 0; i < A.n(); ++i) {
        for (Eigen::Index j = i + 1; j < A.n(); ++j) {
            const double w = A.weights(i, j);
            if (w != 0.0) {
                out << csv_field(A.labels[static_cast<std::size_t>(i)]) << ','
                    << csv_field(A.labels[static_cast<std::size_t>(j)]) << ',' << format_double(w) << '\n';
            }
        }
    }
}

FitDiagnostics diagnostics_of(const FitResult& result) {
    FitDiagnostics d;
    d.converged = result.converged;
    d.diverged = result.diverged;
    d.iterations = result.iterations;
    d.budget_exhausted_count = result.budget_exhausted_count;
    d.eta_init = result.eta_init;
    if (!result.trace.empty()) {
        d.final_loss = result.trace.back().loss;
        d.final_max_abs_score = result.trace.back().max_abs_score;
    }
    return d;
}

nlohmann::json to_json(const FitArtifact& a) {
    using nlohmann::json;
    a.state.check_shape();
    json z = json::array();
    for (Eigen::Index i = 0; i < a.state.n(); ++i) {
        json row = json::array();
        for (Eigen::Index c = 0; c < a.state.k(); ++c) {
            row.push_back(a.state.Z(i, c));
        }
        z.push_back(std::move(row));
    }
    json alpha = json::array();
    for (Eigen::Index i = 0; i < a.state.n(); ++i) {
        alpha.push_back(a.state.alpha(i));
    }
    return json{
        {"format_version", a.format_version},
        {"family", std::string(family_name(a.family))},
        {"n", a.state.n()},
        {"k", a.state.k()},
        {"labels", a.labels},
        {"Z", std::move(z)},
        {"alpha", std::move(alpha)},
        {"config", a.config},
        {"diagnostics",
         {{"converged", a.diagnostics.converged},
          {"diverged", a.diagnostics.diverged},
          {"iterations", a.diagnostics.iterations},
          {"final_loss", a.diagnostics.final_loss},
          {"final_max_abs_score", a.diagnostics.final_max_abs_score},
          {"budget_exhausted_count", a.diagnostics.budget_exhausted_count},
          {"eta_init", a.diagnostics.eta_init}}},
        {"network_path", a.network_path},
        {"trace_path", a.trace_path},
    };
}

FitArtifact artifact_from_json(const nlohmann::json& doc) {
    try {
        FitArtifact a;
        a.format_version = doc.at("format_version").get<int>();
        if (a.format_version != FitArtifact::kFormatVersion) {
            throw DataError("fit artifact: unsupported format version " + std::to_string(a.format_version));
        }
        a.family = parse_family(doc.at("family").get<std::string>());
        const auto n = doc.at("n").get<Eigen::Index>();
        const auto k = doc.at("k").get<Eigen::Index>();
        a.labels = doc.at("labels").get<std::vector<std::string>>();
        const auto& z = doc.at("Z");
        const auto& alpha = doc.at("alpha");
        if (static_cast<Eigen::Index>(a.labels.size()) != n || static_cast<Eigen::Index>(z.size()) != n ||
            static_cast<Eigen::Index>(alpha.size()) != n) {
            throw DataError("fit artifact: inconsistent node count");
        }
        a.state.Z.resize(n, k);
        a.state.alpha.resize(n);
        for (Eigen::Index i = 0; i < n; ++i) {
            const auto& row = z.at(static_cast<std::size_t>(i));
            if (static_cast<Eigen::Index>(row.size()) != k) {
                throw DataError("fit artifact: row " + std::to_string(i) + " of Z has wrong length");
            }
            for (Eigen::Index c = 0; c < k; ++c) {
                a.state.Z(i, c) = row.at(static_cast<std::size_t>(c)).get<double>();
            }
            a.state.alpha(i) = alpha.at(static_cast<std::size_t>(i)).get<double>();
        }
        a.config = doc.value("config", nlohmann::json::object());
        if (doc.contains("diagnostics")) {
            const auto& d = doc.at("diagnostics");
            a.diagnostics.converged = d.value("converged", false);
            a.diagnostics.diverged = d.value("diverged", false);
            a.diagnostics.iterations = d.value("iterations", 0);
            a.diagnostics.final_loss = d.value("final_loss", 0.0);
            a.diagnostics.final_max_abs_score = d.value("final_max_abs_score", 0.0);
            a.diagnostics.budget_exhausted_count = d.value("budget_exhausted_count", 0);
            a.diagnostics.eta_init = d.value("eta_init", 0.0);
        }
        a.network_path = doc.value("network_path", std::string());
        a.trace_path = doc.value("trace_path", std::string());
        return a;
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("fit artifact: ") + e.what());
    }
}

void save_artifact(const FitArtifact& artifact, const std::string& path) {
    std::ofstream out(path);
    if (!out) {
        throw DataError("cannot write '" + path + "'");
    }
    out << to_json(artifact).dump(2) << '\n';
}

FitArtifact load_artifact(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw DataError("cannot open fit artifact '" + path + "'");
    }
    nlohmann::json doc;
    try {
        in >> doc;
    } catch (const nlohmann::json::exception& e) {
        throw DataError("fit artifact '" + path + "': " + e.what());
    }
    return artifact_from_json(doc);
}

void write_trace_csv(const FitResult& result, std::ostream& out) {
    out << "iter,loss,max_abs_score,eta,backtracks\n";
    for (const auto& rec : result.trace) {
        out << rec.iter << ',' << format_double(rec.loss) << ',' << format_double(rec.max_abs_score) << ','
            << format_double(rec.eta) << ',' << rec.backtracks << '\n';
    }
}

void write_reports_csv(const std::vector<InferenceReport>& reports, std::ostream& out) {
    out << "target,estimate,se,z,p,ci_low,ci_high\n";
    for (const auto& r : reports) {
        const std::string name = std::string(target_name(r.target)) + (r.label.empty() ? "" : ":" + r.label);
        out << csv_field(name) << ',' << format_double(r.estimate) << ',' << format_double(r.se) << ','
            << format_double(r.z) << ',' << format_double(r.p_value) << ',' << format_double(r.ci_low) << ','
            << format_double(r.ci_high) << '\n';
    }
}

void write_pairs_csv(const ComparisonResult& result, std::ostream& out) {
    out << "label_i,label_j,diff,se,z,p,rejected\n";
    for (const auto& t : result.pairs) {
        out << csv_field(result.labels[static_cast<std::size_t>(t.i)]) << ','
            << csv_field(result.labels[static_cast<std::size_t>(t.j)]) << ',' << format_double(t.diff) << ','
            << format_double(t.se) << ',' << format_double(t.z) << ',' << format_double(t.p_value) << ','
            << (t.rejected ? 1 : 0) << '\n';
    }
}

void write_rates_csv(const ComparisonResult& result, std::ostream& out) {
    out << "label,rate\n";
    for (std::size_t i = 0; i < result.labels.size(); ++i) {
        out << csv_field(result.labels[i]) << ','
            << format_double(result.rejection_rate(static_cast<Eigen::Index>(i))) << '\n';
    }
}

std::vector<InferenceReport> infer_reports(const FitArtifact& art, const Network& net,
                                           const std::vector<std::string>& nodes,
                                           const std::vector<std::string>& pairs, double level) {
    std::vector<InferenceReport> reports;
    const LatentState& Y = art.state;
    const Eigen::Index k = Y.k();
    for (const auto& label : nodes) {
        const Eigen::Index i = find_label(art.labels, label);
        for (Eigen::Index c = 0; c <= k; ++c) {
            const double est = c < k ? Y.Z(i, c) : Y.alpha(i);
            const double se = entry_se(Y, net, art.family, i, c);
            const std::string coord = c < k ? "z" + std::to_string(c + 1) : "alpha";
            reports.push_back(make_report(Target::Entry, label + ":" + coord, est, se, level));
        }
    }
    for (const auto& spec : pairs) {
        const auto comma = spec.find(',');
        if (comma == std::string::npos) {
            throw DataError("pair '" + spec + "' must have the form a,b");
        }
        const std::string la = spec.substr(0, comma);
        const std::string lb = spec.substr(comma + 1);
        const Eigen::Index i = find_label(art.labels, la);
        const Eigen::Index j = find_label(art.labels, lb);
        if (i == j) {
            throw DataError("pair '" + spec + "' names the same node twice");
        }
        const double t = Y.alpha(i) + Y.alpha(j) + Y.Z.row(i).dot(Y.Z.row(j));
        reports.push_back(make_report(Target::EdgeMean, la + "," + lb, mean(art.family, t),
                                      edge_mean_se(Y, net, art.family, i, j), level));
        Eigen::VectorXd g = Eigen::VectorXd::Zero(2 * (k + 1));
        g.head(k) = Y.Z.row(j).transpose();
        g.segment(k + 1, k) = Y.Z.row(i).transpose();
        reports.push_back(make_report(Target::InnerProduct, la + "," + lb, Y.Z.row(i).dot(Y.Z.row(j)),
                                      delta_method_se(Y, net, art.family, {i, j}, g), level));
    }
    return reports;
}

} // namespace lsm
