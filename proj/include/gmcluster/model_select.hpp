#pragma once

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <string>
#include <thread>
#include <vector>

#include "gmcluster/assignment.hpp"
#include "gmcluster/data_core.hpp"
#include "gmcluster/error.hpp"
#include "gmcluster/gram_transform.hpp"
#include "gmcluster/hier_init.hpp"
#include "gmcluster/mixture_fit.hpp"

namespace gmcluster {

enum class Preprocess { None, Standardize, Paper };

struct ClusterConfig {
    int kmax = 20;
    int max_iter = 100;
    CovModel cov_model = CovModel::Diagonal;
    double ridge = kDefaultRelativeRidge;
    Preprocess preprocess = Preprocess::Paper;
    int threads = 0; // 0 = hardware concurrency
};

struct BicEntry {
    int k = 0;
    double bic = 0.0;
    double loglik = 0.0;
    int iterations = 0;
    bool converged = false;
    bool degenerate = false;
};

struct StageTimings {
    double preprocess = 0.0;
    double gram = 0.0;
    double transform = 0.0;
    double dendrogram = 0.0;
    std::vector<double> fit; // per K, seconds
    double selection = 0.0;
    double total = 0.0;
};

struct ClusterOutput {
    int k_hat = 0;
    ClusterAssignment labels;
    std::vector<BicEntry> bic_trace;
    std::vector<FitResult> per_fit;
    StageTimings timings;
    int kmax_used = 0;
    std::size_t n_features_used = 0;
    std::size_t dropped_columns = 0;
    bool log_applied = false;
    std::vector<std::string> warnings;
};

namespace detail {

using Clock = std::chrono::steady_clock;

inline double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

inline unsigned resolve_threads(int requested) {
    if (requested > 0) return static_cast<unsigned>(requested);
    return std::max(1u, std::thread::hardware_concurrency());
}

// Index of the best finite BIC; ties resolve to the smaller K because only a
// strictly larger value replaces the incumbent while scanning K upward.
inline std::size_t select_best(const std::vector<FitResult>& fits) {
    std::size_t best = fits.size();
    for (std::size_t i = 0; i < fits.size(); ++i) {
        if (fits[i].degenerate || !std::isfinite(fits[i].bic)) continue;
        if (best == fits.size() || fits[i].bic > fits[best].bic) best = i;
    }
    return best;
}

} // namespace detail

/// Runs the K = 1..kmax sweep on an already-built G and M.
///
/// Each K is initialized by cutting the Ward tree of M's rows, fitted with
/// classification EM and scored by BIC on M^delta-hat. Fits are independent,
/// so they run on a small worker pool; the result only depends on the per-K
/// outputs, never on scheduling.
inline ClusterOutput select_model(const GramMatrix& g, const MMatrix& m, const ClusterConfig& config) {
    const auto n = static_cast<int>(m.n_objects());
    if (config.kmax < 1) throw Error(ErrorCode::InvalidArgument, "kmax must be >= 1");
    if (config.max_iter < 1) throw Error(ErrorCode::InvalidArgument, "max_iter must be >= 1");
    if (!(config.ridge >= 0.0)) throw Error(ErrorCode::InvalidArgument, "ridge must be >= 0");

    ClusterOutput out;
    out.kmax_used = std::min(config.kmax, n);
    if (config.kmax > n) {
        out.warnings.push_back("kmax " + std::to_string(config.kmax) + " exceeds N; clamped to " + std::to_string(n));
    }

    auto t0 = detail::Clock::now();
    const Dendrogram tree = ward_dendrogram(m);
    out.timings.dendrogram = detail::seconds_since(t0);

    const FitOptions opt{config.cov_model, config.ridge, config.max_iter};
    const auto kmax = static_cast<std::size_t>(out.kmax_used);
    out.per_fit.resize(kmax);
    out.timings.fit.assign(kmax, 0.0);

    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t idx = next++; idx < kmax; idx = next++) {
            const int k = static_cast<int>(idx) + 1;
            const auto start = detail::Clock::now();
            const ClusterAssignment init = k == 1 ? ClusterAssignment::single(m.n_objects()) : cut_tree(tree, k);
            out.per_fit[idx] = cem_fit(g, m, k, init, opt);
            out.timings.fit[idx] = detail::seconds_since(start);
        }
    };
    const unsigned workers = std::min<unsigned>(detail::resolve_threads(config.threads), static_cast<unsigned>(kmax));
    if (workers <= 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        pool.reserve(workers);
        for (unsigned w = 0; w < workers; ++w) pool.emplace_back(worker);
    }

    t0 = detail::Clock::now();
    const std::size_t best = detail::select_best(out.per_fit);
    if (best == out.per_fit.size()) throw Error(ErrorCode::AllFitsDegenerate, "no K produced a usable fit");
    out.k_hat = static_cast<int>(best) + 1;
    out.labels = out.per_fit[best].labels;
    for (const auto& fit : out.per_fit) {
        out.bic_trace.push_back({fit.k, fit.bic, fit.loglik, fit.iterations, fit.converged, fit.degenerate});
    }
    out.timings.selection = detail::seconds_since(t0);
    return out;
}

/// Full pipeline: preprocess, G, M, then the K sweep.
inline ClusterOutput gmcluster(const FeatureMatrix& x, const ClusterConfig& config = {}) {
    const auto start = detail::Clock::now();
    auto t0 = start;

    std::size_t dropped = 0;
    bool log_applied = false;
    FeatureMatrix standardized = [&] {
        switch (config.preprocess) {
        case Preprocess::None:
            if (!x.standardized()) {
                throw Error(ErrorCode::NotStandardized, "preprocess 'none' requires standardized input");
            }
            return x;
        case Preprocess::Standardize: {
            auto s = standardize_columns(x);
            dropped = s.dropped_columns;
            return std::move(s.matrix);
        }
        case Preprocess::Paper: {
            auto p = preprocess_dataset(x);
            dropped = p.dropped_columns;
            log_applied = p.log_applied;
            return std::move(standardize_columns(p.matrix).matrix);
        }
        }
        throw Error(ErrorCode::InvalidArgument, "unknown preprocess mode");
    }();
    const double t_pre = detail::seconds_since(t0);

    t0 = detail::Clock::now();
    const GramMatrix g = gram(standardized);
    const double t_gram = detail::seconds_since(t0);

    t0 = detail::Clock::now();
    const MMatrix m = build_M(g);
    const double t_transform = detail::seconds_since(t0);

    ClusterOutput out = select_model(g, m, config);
    out.timings.preprocess = t_pre;
    out.timings.gram = t_gram;
    out.timings.transform = t_transform;
    out.n_features_used = standardized.n_features();
    out.dropped_columns = dropped;
    out.log_applied = log_applied;
    if (dropped > 0) out.warnings.push_back("dropped " + std::to_string(dropped) + " constant column(s)");
    out.timings.total = detail::seconds_since(start);
    return out;
}

} // namespace gmcluster
