#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "gmcluster/assignment.hpp"
#include "gmcluster/data_core.hpp"
#include "gmcluster/error.hpp"
#include "gmcluster/gram_transform.hpp"
#include "gmcluster/mixture_spec.hpp"

namespace gmcluster {

namespace detail {

inline constexpr std::uint64_t kLabelStream = 0x6c6162656c73ULL;   // "labels"
inline constexpr std::uint64_t kFeatureStream = 0x666561747572ULL; // "featur"

// A fresh engine per (seed, stream, replicate, index). Every row of every
// replicate is drawn from its own stream, so results do not depend on the
// order (or thread) in which rows are generated.
inline std::mt19937_64 substream(std::uint64_t seed, std::uint64_t stream, std::uint64_t replicate,
                                 std::uint64_t index) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32),
                      static_cast<std::uint32_t>(replicate), static_cast<std::uint32_t>(replicate >> 32),
                      static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32)};
    return std::mt19937_64(seq);
}

} // namespace detail

struct SyntheticSample {
    FeatureMatrix x;                // raw draws
    ClusterAssignment truth;        // canonicalized
    std::vector<int> components;    // generating component of each object, 1..K0
};

/// Feature draws for a fixed component assignment, replicate `replicate`.
inline Matrix draw_features(const MixtureSpec& spec, std::span<const int> components, std::uint64_t replicate = 0) {
    const auto n = static_cast<Eigen::Index>(components.size());
    const auto p = static_cast<Eigen::Index>(spec.n_features());
    Matrix x(n, p);
    for (Eigen::Index i = 0; i < n; ++i) {
        const Eigen::Index a = components[static_cast<std::size_t>(i)] - 1;
        auto eng = detail::substream(spec.seed, detail::kFeatureStream, replicate, static_cast<std::uint64_t>(i));
        std::normal_distribution<double> normal(0.0, 1.0);
        for (Eigen::Index j = 0; j < p; ++j) {
            x(i, j) = spec.means(a, j) + std::sqrt(spec.variances(a, j)) * normal(eng);
        }
    }
    return x;
}

/// Draws delta_i iid from the weights, then x_{i,p} ~ N(mu_{delta_i,p}, sigma^{delta_i}_p).
inline SyntheticSample gen_mixture(const MixtureSpec& spec, std::size_t n, std::uint64_t replicate = 0) {
    spec.validate();
    if (n < 2) throw Error(ErrorCode::InvalidArgument, "need at least 2 objects");
    std::vector<int> components(n);
    std::discrete_distribution<int> pick(spec.weights.begin(), spec.weights.end());
    for (std::size_t i = 0; i < n; ++i) {
        auto eng = detail::substream(spec.seed, detail::kLabelStream, replicate, i);
        components[i] = pick(eng) + 1;
    }
    Matrix x = draw_features(spec, components, replicate);
    return {FeatureMatrix::raw(std::move(x)), ClusterAssignment(components), std::move(components)};
}

/// Deterministic block assignment with cluster sizes given by largest
/// remainder rounding of w_a * n. Used where the truth must stay fixed
/// across replicates.
inline std::vector<int> block_components(std::span<const double> weights, std::size_t n) {
    std::vector<std::size_t> sizes(weights.size());
    std::vector<std::pair<double, std::size_t>> remainders;
    std::size_t assigned = 0;
    for (std::size_t a = 0; a < weights.size(); ++a) {
        const double exact = weights[a] * static_cast<double>(n);
        sizes[a] = static_cast<std::size_t>(std::floor(exact));
        assigned += sizes[a];
        remainders.emplace_back(-(exact - std::floor(exact)), a);
    }
    std::sort(remainders.begin(), remainders.end());
    for (std::size_t r = 0; assigned < n; ++r, ++assigned) ++sizes[remainders[r % remainders.size()].second];
    std::vector<int> out;
    out.reserve(n);
    for (std::size_t a = 0; a < sizes.size(); ++a) out.insert(out.end(), sizes[a], static_cast<int>(a) + 1);
    return out;
}

/// Dependence summaries entering the concentration bound.
struct BoundInputs {
    double tau_p = 0.0;     // sup_a ||Sigma_a||_1^{1/2}
    double kappa_p = 0.0;   // sup_a ||Upsilon_a||_1^{1/2}
    double mu_sup = 0.0;    // sup |mu_{a,p}|
    double sigma_sup = 0.0; // sup sqrt(sigma^a_p)
    std::size_t n = 0;
    std::size_t p = 0;
};

/// Closed forms for independent Gaussian features: Sigma_a is diagonal, and
/// Upsilon_a = Var(y^2) is diagonal with entries 2 sigma^4.
inline BoundInputs bound_inputs(const MixtureSpec& spec, std::size_t n) {
    BoundInputs in;
    in.n = n;
    in.p = spec.n_features();
    double tau_sq = 0.0, kappa_sq = 0.0;
    for (Eigen::Index a = 0; a < spec.variances.rows(); ++a) {
        tau_sq = std::max(tau_sq, spec.variances.row(a).sum());
        kappa_sq = std::max(kappa_sq, 2.0 * spec.variances.row(a).array().square().sum());
    }
    in.tau_p = std::sqrt(tau_sq);
    in.kappa_p = std::sqrt(kappa_sq);
    in.mu_sup = spec.means.cwiseAbs().maxCoeff();
    in.sigma_sup = std::sqrt(spec.variances.maxCoeff());
    return in;
}

/// Delta_P = (1/P) [N {(N-1) tau^2 (2 mu_sup + sigma_sup)^2 + (kappa + 2 tau mu_sup)^2}]^{1/2}.
inline double lemma2_bound(const BoundInputs& in) {
    const double n = static_cast<double>(in.n);
    const double p = static_cast<double>(in.p);
    const double cross = (n - 1.0) * in.tau_p * in.tau_p * std::pow(2.0 * in.mu_sup + in.sigma_sup, 2);
    const double diag = std::pow(in.kappa_p + 2.0 * in.tau_p * in.mu_sup, 2);
    return std::sqrt(n * (cross + diag)) / p;
}

struct ConcentrationPoint {
    std::size_t p = 0;
    double mse = 0.0;           // Monte-Carlo mean of ||M^delta - Theta||_F^2
    double mse_se = 0.0;
    double bound_sq = 0.0;      // Delta_P^2
    double row_bound_sq = 0.0;  // Delta_P^2 / N, the per-row bound
    std::vector<double> row_mse; // per-row Monte-Carlo mean of ||m_i - theta_i||^2
    double kappa_ratio = 0.0;   // kappa_P / P
    double tau_ratio = 0.0;     // tau_P / P
    BoundInputs inputs;
};

struct ConcentrationReport {
    std::vector<ConcentrationPoint> points;
    double slope = 0.0; // least-squares slope of log(mse) on log(P); NaN if undefined
    std::vector<int> components;
    std::string note;
};

inline constexpr const char* kRawDataNote =
    "raw (unstandardized) draws; standardization would change mu and Sigma and invalidate the closed-form Theta";

/// Monte-Carlo estimate of E||M^delta - Theta||^2 at one P, with the true
/// delta held fixed across replicates.
inline ConcentrationPoint concentration_at(const MixtureSpec& spec, std::span<const int> components, std::size_t reps) {
    const std::size_t n = components.size();
    const ThetaMatrix theta = theta_expectations(spec, components);
    const ClusterAssignment truth(components);
    ConcentrationPoint pt;
    pt.p = spec.n_features();
    pt.inputs = bound_inputs(spec, n);
    const double bound = lemma2_bound(pt.inputs);
    pt.bound_sq = bound * bound;
    pt.row_bound_sq = pt.bound_sq / static_cast<double>(n);
    pt.kappa_ratio = pt.inputs.kappa_p / static_cast<double>(pt.p);
    pt.tau_ratio = pt.inputs.tau_p / static_cast<double>(pt.p);
    pt.row_mse.assign(n, 0.0);

    double sum = 0.0, sum_sq = 0.0;
    for (std::size_t r = 0; r < reps; ++r) {
        const GramMatrix g = raw_gram(draw_features(spec, components, r));
        const Matrix diff = update_M_delta(g, truth).values - theta.row_means;
        const double err = diff.squaredNorm();
        sum += err;
        sum_sq += err * err;
        for (std::size_t i = 0; i < n; ++i) pt.row_mse[i] += diff.row(static_cast<Eigen::Index>(i)).squaredNorm();
    }
    const double reps_d = static_cast<double>(reps);
    pt.mse = sum / reps_d;
    const double var = reps > 1 ? std::max(0.0, (sum_sq - reps_d * pt.mse * pt.mse) / (reps_d - 1.0)) : 0.0;
    pt.mse_se = std::sqrt(var / reps_d);
    for (double& v : pt.row_mse) v /= reps_d;
    return pt;
}

inline double loglog_slope(std::span<const ConcentrationPoint> points) {
    std::vector<double> xs, ys;
    for (const auto& pt : points) {
        if (pt.mse <= 0.0) return std::nan("");
        xs.push_back(std::log(static_cast<double>(pt.p)));
        ys.push_back(std::log(pt.mse));
    }
    if (xs.size() < 2) return std::nan("");
    const double mx = std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
    const double my = std::accumulate(ys.begin(), ys.end(), 0.0) / static_cast<double>(ys.size());
    double sxy = 0.0, sxx = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        sxy += (xs[i] - mx) * (ys[i] - my);
        sxx += (xs[i] - mx) * (xs[i] - mx);
    }
    return sxx > 0.0 ? sxy / sxx : std::nan("");
}

/// Concentration of M^delta on Theta across a grid of feature counts.
inline ConcentrationReport empirical_concentration(const MixturePattern& pattern, std::size_t n,
                                                   std::span<const std::size_t> p_grid, std::size_t reps) {
    if (reps < 30) throw Error(ErrorCode::InvalidArgument, "empirical_concentration needs reps >= 30");
    if (n < 2) throw Error(ErrorCode::InvalidArgument, "need at least 2 objects");
    ConcentrationReport report;
    report.components = block_components(pattern.weights, n);
    report.note = kRawDataNote;
    for (std::size_t p : p_grid) report.points.push_back(concentration_at(pattern.at(p), report.components, reps));
    report.slope = loglog_slope(report.points);
    return report;
}

struct Lemma1Report {
    std::size_t n = 0;
    std::size_t p = 0;
    std::size_t reps = 0;
    Matrix mc_mean;   // N x (N+1)
    Matrix mc_se;     // N x (N+1)
    Matrix expected;  // Theta
    double max_standardized_deviation = 0.0;
    double max_cross_cluster_deviation = 0.0; // entries g_{i,j} with i, j in different clusters
    std::size_t n_entries = 0;
    std::vector<int> components;
    std::string note;
};

/// Entrywise Monte-Carlo mean of M^delta (true delta) against Theta, in units
/// of the Monte-Carlo standard error. With N(N+1) entries tested at once a
/// handful of 3-sigma excursions are expected; the max is what gets gated.
inline Lemma1Report lemma1_check(const MixtureSpec& spec, std::size_t n, std::size_t reps) {
    if (reps < 100) throw Error(ErrorCode::InvalidArgument, "lemma1_check needs reps >= 100");
    spec.validate();
    Lemma1Report report;
    report.n = n;
    report.p = spec.n_features();
    report.reps = reps;
    report.components = block_components(spec.weights, n);
    report.note = kRawDataNote;
    const ThetaMatrix theta = theta_expectations(spec, report.components);
    const ClusterAssignment truth(report.components);
    report.expected = theta.row_means;

    const auto rows = static_cast<Eigen::Index>(n);
    Matrix sum = Matrix::Zero(rows, rows + 1);
    Matrix sum_sq = Matrix::Zero(rows, rows + 1);
    for (std::size_t r = 0; r < reps; ++r) {
        const Matrix md = update_M_delta(raw_gram(draw_features(spec, report.components, r)), truth).values;
        sum += md;
        sum_sq += md.cwiseProduct(md);
    }
    const double reps_d = static_cast<double>(reps);
    report.mc_mean = sum / reps_d;
    const Matrix var =
        ((sum_sq - reps_d * report.mc_mean.cwiseProduct(report.mc_mean)) / (reps_d - 1.0)).cwiseMax(0.0);
    report.mc_se = (var / reps_d).cwiseSqrt();
    report.n_entries = static_cast<std::size_t>(rows * (rows + 1));

    for (Eigen::Index i = 0; i < rows; ++i) {
        for (Eigen::Index j = 0; j <= rows; ++j) {
            const double dev = std::abs(report.mc_mean(i, j) - report.expected(i, j));
            const double se = report.mc_se(i, j);
            const double z = se > 0.0 ? dev / se : (dev == 0.0 ? 0.0 : std::numeric_limits<double>::infinity());
            report.max_standardized_deviation = std::max(report.max_standardized_deviation, z);
            if (j < rows && report.components[static_cast<std::size_t>(i)] !=
                                report.components[static_cast<std::size_t>(j)]) {
                report.max_cross_cluster_deviation = std::max(report.max_cross_cluster_deviation, z);
            }
        }
    }
    return report;
}

} // namespace gmcluster
