#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "gmcluster/csv.hpp"
#include "gmcluster/error.hpp"
#include "gmcluster/metrics.hpp"
#include "gmcluster/model_select.hpp"
#include "gmcluster/synth.hpp"
#include "gmcluster/version.hpp"

namespace gmcluster::cli {

using json = nlohmann::json;

inline constexpr int kExitOk = 0;
inline constexpr int kExitData = 1;
inline constexpr int kExitConfig = 2;

struct RunConfig {
    int kmax = 20;
    int max_iter = 100;
    CovModel cov_model = CovModel::Diagonal;
    double ridge = kDefaultRelativeRidge;
    Preprocess preprocess = Preprocess::Paper;
    AmiNormalization ami_norm = AmiNormalization::Mean;
    std::uint64_t seed = 0;
    int threads = 0; // 0 = auto
    std::string output_dir = ".";
    char delimiter = ',';

    /// Returns an error message for the first violated constraint.
    std::optional<std::string> violation() const {
        if (kmax < 1) return "kmax must be >= 1";
        if (max_iter < 1) return "max-iter must be >= 1";
        if (!(ridge >= 0.0) || !std::isfinite(ridge)) return "ridge must be a finite value >= 0";
        if (threads < 0) return "threads must be >= 0 (0 = auto)";
        return std::nullopt;
    }

    ClusterConfig cluster_config() const { return {kmax, max_iter, cov_model, ridge, preprocess, threads}; }
};

inline const char* to_string(CovModel m) { return m == CovModel::Diagonal ? "diagonal" : "full_ridge"; }
inline const char* to_string(AmiNormalization a) { return a == AmiNormalization::Mean ? "mean" : "max"; }
inline const char* to_string(Preprocess p) {
    switch (p) {
    case Preprocess::None: return "none";
    case Preprocess::Standardize: return "standardize";
    case Preprocess::Paper: return "paper";
    }
    return "paper";
}

inline std::optional<CovModel> parse_cov_model(const std::string& s) {
    if (s == "diagonal") return CovModel::Diagonal;
    if (s == "full_ridge") return CovModel::FullRidge;
    return std::nullopt;
}
inline std::optional<Preprocess> parse_preprocess(const std::string& s) {
    if (s == "none") return Preprocess::None;
    if (s == "standardize") return Preprocess::Standardize;
    if (s == "paper") return Preprocess::Paper;
    return std::nullopt;
}
inline std::optional<AmiNormalization> parse_ami_norm(const std::string& s) {
    if (s == "mean") return AmiNormalization::Mean;
    if (s == "max") return AmiNormalization::Max;
    return std::nullopt;
}
inline std::optional<char> parse_delimiter(const std::string& s) {
    if (s == "tab" || s == "\\t" || s == "\t") return '\t';
    if (s.size() == 1 && s != "." && s != "\"") return s[0];
    return std::nullopt;
}

inline json finite_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

inline json config_json(const RunConfig& c) {
    std::string delim(1, c.delimiter);
    if (c.delimiter == '\t') delim = "tab";
    return json{{"kmax", c.kmax},
                {"max_iter", c.max_iter},
                {"cov_model", to_string(c.cov_model)},
                {"ridge", c.ridge},
                {"preprocess", to_string(c.preprocess)},
                {"ami_norm", to_string(c.ami_norm)},
                {"seed", c.seed},
                {"threads", c.threads == 0 ? json("auto") : json(c.threads)},
                {"delimiter", delim}};
}

inline json timings_json(const StageTimings& t) {
    return json{{"preprocess", t.preprocess}, {"gram", t.gram},           {"transform", t.transform},
                {"dendrogram", t.dendrogram}, {"fit", t.fit},             {"selection", t.selection},
                {"total", t.total}};
}

/// Result document for `cluster`. Everything except "timings" is a pure
/// function of (input, config).
inline json result_json(const std::string& input_path, const Dataset& ds, const RunConfig& config,
                        const ClusterOutput& out, std::optional<double> ami_value) {
    json trace = json::array();
    for (const auto& e : out.bic_trace) {
        trace.push_back({{"k", e.k},
                         {"bic", finite_or_null(e.bic)},
                         {"loglik", finite_or_null(e.loglik)},
                         {"iterations", e.iterations},
                         {"converged", e.converged},
                         {"degenerate", e.degenerate}});
    }
    json doc{{"tool", "gmcluster"},
             {"version", kVersion},
             {"input",
              {{"path", input_path},
               {"n_objects", ds.values.rows()},
               {"n_features", ds.values.cols()},
               {"n_features_used", out.n_features_used},
               {"dropped_columns", out.dropped_columns},
               {"log_transformed", out.log_applied},
               {"has_labels", ds.labels.has_value()}}},
             {"config", config_json(config)},
             {"k_hat", out.k_hat},
             {"kmax_used", out.kmax_used},
             {"bic_trace", trace},
             {"warnings", out.warnings},
             {"timings", timings_json(out.timings)}};
    if (ami_value) doc["ami"] = *ami_value;
    return doc;
}

namespace detail {

inline std::filesystem::path ensure_dir(const std::string& dir) {
    std::filesystem::path p(dir);
    std::filesystem::create_directories(p);
    return p;
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorCode::ParseError, "cannot write " + path.string());
    out << text;
}

inline int report_error(std::ostream& err, const Error& e) {
    err << "error: " << e.what() << '\n';
    switch (e.code()) {
    case ErrorCode::InvalidArgument:
    case ErrorCode::KOutOfRange: return kExitConfig;
    default: return kExitData;
    }
}

} // namespace detail

/// `cluster`: reads the CSV, runs the pipeline and writes assignments.csv,
/// result.json and bic.csv into the output directory.
inline int cmd_cluster(const std::string& input, const RunConfig& config, std::ostream& log = std::cerr) {
    if (auto bad = config.violation()) {
        log << "error: " << *bad << '\n';
        return kExitConfig;
    }
    try {
        const Dataset ds = read_dataset(input, {config.delimiter});
        FeatureMatrix x = config.preprocess == Preprocess::None ? FeatureMatrix::assume_standardized(ds.values)
                                                                : FeatureMatrix::raw(ds.values);
        const ClusterOutput out = gmcluster(x, config.cluster_config());
        for (const auto& w : out.warnings) log << "warning: " << w << '\n';

        std::optional<double> ami_value;
        if (ds.labels) {
            const auto truth = assignment_from_keys<std::string>(*ds.labels);
            ami_value = ami(truth, out.labels, config.ami_norm);
        }

        const auto dir = detail::ensure_dir(config.output_dir);
        std::ostringstream assignments;
        write_assignments(assignments, ds.object_ids, out.labels);
        detail::write_text(dir / "assignments.csv", assignments.str());
        detail::write_text(dir / "result.json", result_json(input, ds, config, out, ami_value).dump(2) + "\n");

        std::ostringstream bic_csv;
        bic_csv << "k,bic,degenerate\n";
        bic_csv.precision(17);
        for (const auto& e : out.bic_trace) {
            bic_csv << e.k << ',';
            if (std::isfinite(e.bic)) bic_csv << e.bic; else bic_csv << "NA";
            bic_csv << ',' << (e.degenerate ? 1 : 0) << '\n';
        }
        detail::write_text(dir / "bic.csv", bic_csv.str());
        log << "k_hat=" << out.k_hat;
        if (ami_value) log << " ami=" << *ami_value;
        log << '\n';
        return kExitOk;
    } catch (const Error& e) {
        return detail::report_error(log, e);
    } catch (const std::filesystem::filesystem_error& e) {
        log << "error: " << e.what() << '\n';
        return kExitData;
    }
}

/// `eval`: AMI between two (object_id, label) files, 6 decimals on `out`.
inline int cmd_eval(const std::string& pred_path, const std::string& truth_path, const RunConfig& config,
                    std::ostream& out = std::cout, std::ostream& log = std::cerr) {
    try {
        const LabelFile pred = read_labels(pred_path, {config.delimiter});
        const LabelFile truth = read_labels(truth_path, {config.delimiter});
        const auto [p, t] = align_labels(pred, truth);
        char buf[64];
        std::snprintf(buf, sizeof buf, "%.6f", ami(t, p, config.ami_norm));
        out << buf << '\n';
        return kExitOk;
    } catch (const Error& e) {
        return detail::report_error(log, e);
    }
}

/// Simulation request: per-cluster mean/variance patterns tiled to each P.
struct SimulationSpec {
    MixturePattern pattern;
    std::size_t n = 10;
    std::vector<std::size_t> p_grid;
    std::size_t reps = 100;
    std::size_t lemma1_n = 0;
    std::size_t lemma1_p = 0;
    std::size_t lemma1_reps = 0;
};

/// Throws InvalidArgument with a readable message on any schema violation.
inline SimulationSpec parse_simulation_spec(const json& j) {
    auto fail = [](const std::string& what) { return Error(ErrorCode::InvalidArgument, "spec: " + what); };
    try {
        SimulationSpec s;
        s.pattern.weights = j.at("weights").get<std::vector<double>>();
        for (const auto& c : j.at("clusters")) {
            s.pattern.mean_patterns.push_back(c.at("mean").get<std::vector<double>>());
            s.pattern.variance_patterns.push_back(c.at("variance").get<std::vector<double>>());
        }
        s.n = j.value("n", std::size_t{10});
        s.p_grid = j.value("p_grid", std::vector<std::size_t>{});
        s.reps = j.value("reps", std::size_t{100});
        s.pattern.seed = j.value("seed", std::uint64_t{0});
        if (s.p_grid.empty()) throw fail("p_grid must list at least one P");
        for (auto p : s.p_grid) if (p < 1) throw fail("every P must be >= 1");
        if (s.n < 2) throw fail("n must be >= 2");
        if (s.reps < 30) throw fail("reps must be >= 30");
        const json l1 = j.value("lemma1", json::object());
        s.lemma1_n = l1.value("n", s.n);
        s.lemma1_p = l1.value("p", s.p_grid.front());
        s.lemma1_reps = l1.value("reps", std::max<std::size_t>(100, s.reps));
        if (s.lemma1_reps < 100) throw fail("lemma1.reps must be >= 100");
        if (s.lemma1_n < 2) throw fail("lemma1.n must be >= 2");
        s.pattern.at(1); // validates weights and patterns
        return s;
    } catch (const json::exception& e) {
        throw fail(e.what());
    }
}

inline json concentration_json(const ConcentrationReport& r) {
    json pts = json::array();
    for (const auto& pt : r.points) {
        pts.push_back({{"p", pt.p},
                       {"empirical_mse", pt.mse},
                       {"mse_se", pt.mse_se},
                       {"delta_p_sq", pt.bound_sq},
                       {"row_bound_sq", pt.row_bound_sq},
                       {"row_mse", pt.row_mse},
                       {"within_bound", pt.mse <= pt.bound_sq},
                       {"tau_p", pt.inputs.tau_p},
                       {"kappa_p", pt.inputs.kappa_p},
                       {"mu_sup", pt.inputs.mu_sup},
                       {"sigma_sup", pt.inputs.sigma_sup},
                       {"kappa_over_p", pt.kappa_ratio},
                       {"tau_over_p", pt.tau_ratio}});
    }
    return json{{"points", pts}, {"loglog_slope", finite_or_null(r.slope)}, {"components", r.components},
                {"note", r.note}};
}

inline json lemma1_json(const Lemma1Report& r) {
    return json{{"n", r.n},
                {"p", r.p},
                {"reps", r.reps},
                {"entries", r.n_entries},
                {"max_standardized_deviation", finite_or_null(r.max_standardized_deviation)},
                {"max_cross_cluster_deviation", finite_or_null(r.max_cross_cluster_deviation)},
                {"components", r.components},
                {"note", r.note + "; the maximum is taken over all entries, so occasional 3-sigma values are expected"}};
}

/// `simulate`: concentration and entrywise row-mean checks on synthetic
/// data; writes simulate_report.json and concentration.csv.
inline int cmd_simulate(const std::string& spec_path, const RunConfig& config, std::ostream& log = std::cerr) {
    SimulationSpec spec;
    try {
        std::ifstream in(spec_path);
        if (!in) {
            log << "error: cannot open " << spec_path << '\n';
            return kExitData;
        }
        json j;
        try {
            j = json::parse(in);
        } catch (const json::exception& e) {
            log << "error: " << spec_path << ": " << e.what() << '\n';
            return kExitConfig;
        }
        spec = parse_simulation_spec(j);
        if (config.seed != 0) spec.pattern.seed = config.seed;
    } catch (const Error& e) {
        log << "error: " << e.what() << '\n';
        return kExitConfig;
    }
    try {
        const auto conc = empirical_concentration(spec.pattern, spec.n, spec.p_grid, spec.reps);
        const auto l1 = lemma1_check(spec.pattern.at(spec.lemma1_p), spec.lemma1_n, spec.lemma1_reps);
        json report{{"tool", "gmcluster"},
                    {"version", kVersion},
                    {"spec", spec_path},
                    {"n", spec.n},
                    {"reps", spec.reps},
                    {"seed", spec.pattern.seed},
                    {"concentration", concentration_json(conc)},
                    {"lemma1", lemma1_json(l1)}};
        const auto dir = detail::ensure_dir(config.output_dir);
        detail::write_text(dir / "simulate_report.json", report.dump(2) + "\n");
        std::ostringstream csv;
        csv.precision(17);
        csv << "p,empirical_mse,mse_se,delta_p_sq\n";
        for (const auto& pt : conc.points) csv << pt.p << ',' << pt.mse << ',' << pt.mse_se << ',' << pt.bound_sq << '\n';
        detail::write_text(dir / "concentration.csv", csv.str());
        log << "slope=" << conc.slope << " lemma1_max_z=" << l1.max_standardized_deviation << '\n';
        return kExitOk;
    } catch (const Error& e) {
        return detail::report_error(log, e);
    }
}

/// `generate`: one synthetic dataset (object_id, label, features) as CSV.
inline int cmd_generate(const std::string& spec_path, std::size_t n, std::size_t p, const std::string& output,
                        const RunConfig& config, std::ostream& log = std::cerr) {
    SimulationSpec spec;
    try {
        std::ifstream in(spec_path);
        if (!in) {
            log << "error: cannot open " << spec_path << '\n';
            return kExitData;
        }
        spec = parse_simulation_spec(json::parse(in));
    } catch (const json::exception& e) {
        log << "error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const Error& e) {
        log << "error: " << e.what() << '\n';
        return kExitConfig;
    }
    try {
        MixtureSpec ms = spec.pattern.at(p == 0 ? spec.p_grid.front() : p);
        ms.seed = config.seed != 0 ? config.seed : ms.seed;
        const auto sample = gen_mixture(ms, n == 0 ? spec.n : n);
        std::ostringstream csv;
        csv.precision(17);
        csv << "object_id,label";
        for (Eigen::Index j = 0; j < sample.x.values().cols(); ++j) csv << ",f" << (j + 1);
        csv << '\n';
        for (Eigen::Index i = 0; i < sample.x.values().rows(); ++i) {
            csv << "obj" << (i + 1) << ',' << sample.components[static_cast<std::size_t>(i)];
            for (Eigen::Index j = 0; j < sample.x.values().cols(); ++j) csv << ',' << sample.x.values()(i, j);
            csv << '\n';
        }
        detail::write_text(output, csv.str());
        return kExitOk;
    } catch (const Error& e) {
        return detail::report_error(log, e);
    }
}

} // namespace gmcluster::cli
