// Command-line front end. Flags take precedence over GMCLUSTER_* environment
// variables, which take precedence over built-in defaults.

#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "gmcluster/cli.hpp"

namespace {

using namespace gmcluster;
using namespace gmcluster::cli;

struct RawFlags {
    int kmax = 20;
    int max_iter = 100;
    std::string cov_model = "diagonal";
    double ridge = kDefaultRelativeRidge;
    std::string preprocess = "paper";
    std::string ami_norm = "mean";
    std::uint64_t seed = 0;
    std::string threads = "auto";
    std::string output_dir = ".";
    std::string delimiter = ",";
};

void add_common(CLI::App& app, RawFlags& f) {
    app.add_option("--kmax", f.kmax, "largest number of clusters to try")->envname("GMCLUSTER_KMAX")->capture_default_str();
    app.add_option("--max-iter", f.max_iter, "classification-EM iteration cap")
        ->envname("GMCLUSTER_MAX_ITER")
        ->capture_default_str();
    app.add_option("--cov-model", f.cov_model, "diagonal | full_ridge")->envname("GMCLUSTER_COV_MODEL")->capture_default_str();
    app.add_option("--ridge", f.ridge, "relative ridge for full_ridge")->envname("GMCLUSTER_RIDGE")->capture_default_str();
    app.add_option("--preprocess", f.preprocess, "none | standardize | paper")
        ->envname("GMCLUSTER_PREPROCESS")
        ->capture_default_str();
    app.add_option("--ami-norm", f.ami_norm, "mean | max")->envname("GMCLUSTER_AMI_NORM")->capture_default_str();
    app.add_option("--seed", f.seed, "random seed")->envname("GMCLUSTER_SEED")->capture_default_str();
    app.add_option("--threads", f.threads, "worker threads or 'auto'")->envname("GMCLUSTER_THREADS")->capture_default_str();
    app.add_option("--output-dir", f.output_dir, "directory for output files")
        ->envname("GMCLUSTER_OUTPUT_DIR")
        ->capture_default_str();
    app.add_option("--delimiter", f.delimiter, "field delimiter (single character or 'tab')")
        ->envname("GMCLUSTER_DELIMITER")
        ->capture_default_str();
}

// Returns false (after printing why) when a flag value is not allowed.
bool resolve(const RawFlags& f, RunConfig& c) {
    c.kmax = f.kmax;
    c.max_iter = f.max_iter;
    c.ridge = f.ridge;
    c.seed = f.seed;
    c.output_dir = f.output_dir;
    auto bad = [](const std::string& what) {
        std::cerr << "error: " << what << '\n';
        return false;
    };
    if (auto m = parse_cov_model(f.cov_model)) c.cov_model = *m; else return bad("unknown --cov-model " + f.cov_model);
    if (auto p = parse_preprocess(f.preprocess)) c.preprocess = *p; else return bad("unknown --preprocess " + f.preprocess);
    if (auto a = parse_ami_norm(f.ami_norm)) c.ami_norm = *a; else return bad("unknown --ami-norm " + f.ami_norm);
    if (auto d = parse_delimiter(f.delimiter)) c.delimiter = *d; else return bad("bad --delimiter " + f.delimiter);
    if (f.threads == "auto") {
        c.threads = 0;
    } else {
        try {
            std::size_t used = 0;
            c.threads = std::stoi(f.threads, &used);
            if (used != f.threads.size() || c.threads < 1) return bad("--threads must be a positive integer or 'auto'");
        } catch (const std::exception&) {
            return bad("--threads must be a positive integer or 'auto'");
        }
    }
    if (auto v = c.violation()) return bad(*v);
    return true;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"gmcluster: Gram-matrix mixture clustering with BIC model selection"};
    app.set_version_flag("--version", std::string(kVersion));
    app.require_subcommand(1);
    RawFlags flags;

    std::string input;
    auto* cluster = app.add_subcommand("cluster", "cluster the rows of a CSV file");
    cluster->add_option("input", input, "CSV: rows are objects, columns are features")->required();
    add_common(*cluster, flags);

    std::string pred, truth;
    auto* eval = app.add_subcommand("eval", "adjusted mutual information between two label files");
    eval->add_option("pred", pred, "predicted labels (object_id,label)")->required();
    eval->add_option("truth", truth, "reference labels (object_id,label)")->required();
    add_common(*eval, flags);

    std::string spec_path;
    auto* simulate = app.add_subcommand("simulate", "Monte-Carlo concentration report for a mixture spec");
    simulate->add_option("spec", spec_path, "simulation spec (JSON)")->required();
    add_common(*simulate, flags);

    std::string gen_spec, gen_out;
    std::size_t gen_n = 0, gen_p = 0;
    auto* generate = app.add_subcommand("generate", "write one synthetic dataset drawn from a mixture spec");
    generate->add_option("spec", gen_spec, "simulation spec (JSON)")->required();
    generate->add_option("--n", gen_n, "number of objects (default: spec n)");
    generate->add_option("--p", gen_p, "number of features (default: first P of the grid)");
    generate->add_option("--output", gen_out, "output CSV path")->required();
    add_common(*generate, flags);

    try {
        app.parse(argc, argv);
    } catch (const CLI::Success& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitConfig;
    }

    RunConfig config;
    if (!resolve(flags, config)) return kExitConfig;

    if (*cluster) return cmd_cluster(input, config);
    if (*eval) return cmd_eval(pred, truth, config);
    if (*simulate) return cmd_simulate(spec_path, config);
    if (*generate) return cmd_generate(gen_spec, gen_n, gen_p, gen_out, config);
    return kExitConfig;
}
