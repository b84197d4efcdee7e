#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numbers>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Cholesky>

#include "gmcluster/assignment.hpp"
#include "gmcluster/data_core.hpp"
#include "gmcluster/error.hpp"
#include "gmcluster/gram_transform.hpp"

namespace gmcluster {

enum class CovModel { Diagonal, FullRidge };

inline constexpr double kVarianceFloor = 1e-8;
inline constexpr double kMinRidge = 1e-8;
inline constexpr double kDefaultRelativeRidge = 1e-6;

struct DiagonalCov {
    Vector variances;
    double log_det = 0.0;

    DiagonalCov() = default;
    explicit DiagonalCov(Vector v) : variances(std::move(v)), log_det(variances.array().log().sum()) {}
};

/// Scatter/n_k plus ridge * I, with its Cholesky factor cached.
struct FullRidgeCov {
    Matrix matrix;
    double ridge = 0.0;
    Eigen::LLT<Matrix> llt;
    double log_det = 0.0;

    FullRidgeCov() = default;
    FullRidgeCov(Matrix cov, double r) : matrix(std::move(cov)), ridge(r), llt(matrix) {
        if (llt.info() != Eigen::Success) {
            log_det = std::numeric_limits<double>::quiet_NaN();
            return;
        }
        log_det = 2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
    }
};

using Covariance = std::variant<DiagonalCov, FullRidgeCov>;

struct MixtureParams {
    std::vector<double> weights; // K
    Matrix means;                // K x D
    std::vector<Covariance> covariances;
    std::vector<std::size_t> counts;
    std::size_t floored_variances = 0; // diagonal entries raised to the floor

    std::size_t k() const noexcept { return weights.size(); }
};

struct FitOptions {
    CovModel model = CovModel::Diagonal;
    double relative_ridge = kDefaultRelativeRidge;
    int max_iter = 100;
};

/// log phi(row; mean, cov) with normalizing dimension D = row length.
inline double component_density_log(const Eigen::Ref<const Vector>& row, const Eigen::Ref<const Vector>& mean,
                                     const Covariance& cov) {
    const auto dim = static_cast<double>(row.size());
    const double log_2pi = std::log(2.0 * std::numbers::pi);
    return std::visit(
        [&](const auto& c) -> double {
            using T = std::decay_t<decltype(c)>;
            if constexpr (std::is_same_v<T, DiagonalCov>) {
                if (!std::isfinite(c.log_det)) throw Error(ErrorCode::SingularCovariance, "non-finite log determinant");
                const double quad = ((row - mean).array().square() / c.variances.array()).sum();
                return -0.5 * (dim * log_2pi + c.log_det + quad);
            } else {
                if (!std::isfinite(c.log_det)) throw Error(ErrorCode::SingularCovariance, "non-finite log determinant");
                const Vector z = c.llt.matrixL().solve(row - mean);
                return -0.5 * (dim * log_2pi + c.log_det + z.squaredNorm());
            }
        },
        cov);
}

namespace detail {

inline std::size_t count_components(std::span<const int> components, int k, std::vector<std::size_t>& counts) {
    counts.assign(static_cast<std::size_t>(k), 0);
    for (int c : components) {
        if (c < 1 || c > k) throw Error(ErrorCode::InvalidArgument, "component index out of range");
        ++counts[static_cast<std::size_t>(c - 1)];
    }
    return static_cast<std::size_t>(std::count(counts.begin(), counts.end(), std::size_t{0}));
}

} // namespace detail

/// Maximum-likelihood weights, means and covariances for a hard assignment.
/// `components` holds indices 1..k which need not be canonical.
inline MixtureParams mstep(const Matrix& m, std::span<const int> components, int k, const FitOptions& opt = {}) {
    if (static_cast<Eigen::Index>(components.size()) != m.rows()) {
        throw Error(ErrorCode::LengthMismatch, "one label per row required");
    }
    MixtureParams params;
    if (detail::count_components(components, k, params.counts) > 0) {
        throw Error(ErrorCode::EmptyCluster, "a cluster has no members");
    }
    const auto dim = m.cols();
    const auto n = static_cast<double>(m.rows());
    params.means = Matrix::Zero(k, dim);
    for (Eigen::Index i = 0; i < m.rows(); ++i) params.means.row(components[static_cast<std::size_t>(i)] - 1) += m.row(i);
    for (int c = 0; c < k; ++c) {
        const double nk = static_cast<double>(params.counts[static_cast<std::size_t>(c)]);
        params.means.row(c) /= nk;
        params.weights.push_back(nk / n);
    }

    for (int c = 0; c < k; ++c) {
        const double nk = static_cast<double>(params.counts[static_cast<std::size_t>(c)]);
        Matrix centered(static_cast<Eigen::Index>(params.counts[static_cast<std::size_t>(c)]), dim);
        Eigen::Index r = 0;
        for (Eigen::Index i = 0; i < m.rows(); ++i) {
            if (components[static_cast<std::size_t>(i)] == c + 1) centered.row(r++) = m.row(i) - params.means.row(c);
        }
        if (opt.model == CovModel::Diagonal) {
            Vector var = centered.array().square().colwise().sum().transpose() / nk;
            for (Eigen::Index d = 0; d < dim; ++d) {
                if (!(var(d) >= kVarianceFloor)) {
                    var(d) = kVarianceFloor;
                    ++params.floored_variances;
                }
            }
            params.covariances.emplace_back(DiagonalCov(std::move(var)));
        } else {
            Matrix scatter = centered.transpose() * centered / nk;
            scatter = 0.5 * (scatter + scatter.transpose()).eval();
            const double ridge = std::max(kMinRidge, opt.relative_ridge * scatter.trace() / static_cast<double>(dim));
            scatter.diagonal().array() += ridge;
            params.covariances.emplace_back(FullRidgeCov(std::move(scatter), ridge));
        }
    }
    return params;
}

inline MixtureParams mstep(const MMatrix& m, const ClusterAssignment& labels, const FitOptions& opt = {}) {
    return mstep(m.values, labels.labels(), labels.k(), opt);
}

namespace detail {

// Row-by-component table of log w_k + log phi(m_i; theta_k, Gamma_k).
inline Matrix joint_log_density(const Matrix& m, const MixtureParams& params) {
    const auto k = static_cast<Eigen::Index>(params.k());
    Matrix out(m.rows(), k);
    for (Eigen::Index c = 0; c < k; ++c) {
        const double log_w = std::log(params.weights[static_cast<std::size_t>(c)]);
        const Vector mean = params.means.row(c).transpose();
        for (Eigen::Index i = 0; i < m.rows(); ++i) {
            out(i, c) = log_w + component_density_log(m.row(i).transpose(), mean,
                                                       params.covariances[static_cast<std::size_t>(c)]);
        }
    }
    return out;
}

inline std::vector<int> argmax_rows(const Matrix& table) {
    std::vector<int> out(static_cast<std::size_t>(table.rows()));
    for (Eigen::Index i = 0; i < table.rows(); ++i) {
        Eigen::Index best = 0;
        for (Eigen::Index c = 1; c < table.cols(); ++c) {
            if (table(i, c) > table(i, best)) best = c;
        }
        out[static_cast<std::size_t>(i)] = static_cast<int>(best) + 1;
    }
    return out;
}

} // namespace detail

/// Hard assignment to argmax_k [log w_k + log phi]; ties go to the smaller k.
/// Returns raw component indices 1..K (not canonicalized).
inline std::vector<int> estep(const Matrix& m, const MixtureParams& params) {
    return detail::argmax_rows(detail::joint_log_density(m, params));
}

inline std::vector<int> estep(const MMatrix& m, const MixtureParams& params) { return estep(m.values, params); }

/// Sum_i log Sum_k w_k phi(m_i; theta_k, Gamma_k), evaluated with log-sum-exp.
inline double mixture_loglik(const Matrix& m, const MixtureParams& params) {
    const Matrix table = detail::joint_log_density(m, params);
    double total = 0.0;
    for (Eigen::Index i = 0; i < table.rows(); ++i) {
        const double peak = table.row(i).maxCoeff();
        total += peak + std::log((table.row(i).array() - peak).exp().sum());
    }
    return total;
}

/// Sum_i [log w_{delta_i} + log phi(m_i; theta_{delta_i}, Gamma_{delta_i})].
inline double classification_loglik(const Matrix& m, std::span<const int> components, const MixtureParams& params) {
    double total = 0.0;
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        const int c = components[static_cast<std::size_t>(i)] - 1;
        total += std::log(params.weights[static_cast<std::size_t>(c)]) +
                 component_density_log(m.row(i).transpose(), params.means.row(c).transpose(),
                                       params.covariances[static_cast<std::size_t>(c)]);
    }
    return total;
}

/// Number of free parameters of a K-component model on rows of length n+1.
inline long long num_params(int k, int n, CovModel model) {
    const long long kk = k;
    const long long dim = static_cast<long long>(n) + 1;
    const long long cov = model == CovModel::Diagonal ? dim : dim * (dim + 1) / 2;
    return (kk - 1) + kk * dim + kk * cov;
}

/// 2 * loglik - nu * ln(n); larger is better.
inline double bic(double loglik, long long nu, int n) {
    return 2.0 * loglik - static_cast<double>(nu) * std::log(static_cast<double>(n));
}

struct FitResult {
    ClusterAssignment labels;
    MixtureParams params;
    double loglik = -std::numeric_limits<double>::infinity();
    double bic = -std::numeric_limits<double>::infinity();
    int k = 0;
    int iterations = 0;
    bool converged = false;
    bool degenerate = false;
    std::string degenerate_reason;
};

/// Classification EM on the fixed matrix M, then scoring on M^delta-hat.
///
/// The loop alternates mstep/estep until the assignment repeats or
/// `opt.max_iter` sweeps have run. The final parameters are re-estimated on
/// M^delta-hat and the mixture log-likelihood there feeds the BIC.
///
/// A fit is degenerate (bic = -inf) when a cluster empties, or, for K >= 2,
/// when the final fit collapses: a component with fewer than two members, or
/// a diagonal variance that needed the floor.
inline FitResult cem_fit(const GramMatrix& g, const MMatrix& m, int k, const ClusterAssignment& init,
                         const FitOptions& opt = {}) {
    const auto n = static_cast<int>(m.n_objects());
    if (k < 1 || k > n) throw Error(ErrorCode::KOutOfRange, "k must lie in [1, N]");
    if (init.size() != m.n_objects()) throw Error(ErrorCode::LengthMismatch, "init must label every object");
    if (init.k() != k) throw Error(ErrorCode::InvalidArgument, "init must have exactly k clusters");
    if (opt.max_iter < 1) throw Error(ErrorCode::InvalidArgument, "max_iter must be >= 1");

    FitResult result;
    result.k = k;
    std::vector<int> current = init.labels();
    auto mark_degenerate = [&](std::string why) {
        result.degenerate = true;
        result.degenerate_reason = std::move(why);
        result.bic = -std::numeric_limits<double>::infinity();
        result.labels = ClusterAssignment(current);
        return result;
    };

    for (int it = 1; it <= opt.max_iter; ++it) {
        result.iterations = it;
        MixtureParams params;
        try {
            params = mstep(m.values, current, k, opt);
        } catch (const Error& e) {
            if (e.code() != ErrorCode::EmptyCluster) throw;
            return mark_degenerate("empty cluster");
        }
        std::vector<int> next = estep(m.values, params);
        if (next == current) {
            result.converged = true;
            break;
        }
        current = std::move(next);
        std::vector<std::size_t> counts;
        if (detail::count_components(current, k, counts) > 0) return mark_degenerate("empty cluster");
    }

    result.labels = ClusterAssignment(current);
    const MMatrix m_delta = update_M_delta(g, result.labels);
    // Canonical labels index the same clusters as `current`, just renumbered.
    result.params = mstep(m_delta.values, result.labels.labels(), k, opt);
    if (k >= 2) {
        for (std::size_t c : result.params.counts) {
            if (c < 2) return mark_degenerate("singleton cluster");
        }
        if (result.params.floored_variances > 0) return mark_degenerate("variance floor reached");
    }
    result.loglik = mixture_loglik(m_delta.values, result.params);
    result.bic = bic(result.loglik, num_params(k, n, opt.model), n);
    return result;
}

} // namespace gmcluster
