#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "gmcluster/error.hpp"

namespace gmcluster {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

namespace detail {

inline constexpr double kConstantColumnSd = 1e-12;
inline constexpr double kStandardizedMeanTol = 1e-10;
inline constexpr double kStandardizedSdTol = 1e-8;

inline void require_finite(const Matrix& values) {
    if (!values.allFinite()) {
        throw Error(ErrorCode::NonFiniteInput, "feature matrix contains NaN or Inf");
    }
}

inline double sample_sd(const Eigen::Ref<const Vector>& col, double center) {
    const auto n = static_cast<double>(col.size());
    return std::sqrt((col.array() - center).square().sum() / (n - 1.0));
}

inline double median(const Eigen::Ref<const Vector>& col) {
    std::vector<double> v(col.data(), col.data() + col.size());
    const std::size_t mid = v.size() / 2;
    std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
    double hi = v[mid];
    if (v.size() % 2 == 1) return hi;
    double lo = *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid));
    return 0.5 * (lo + hi);
}

struct StandardizeAccess;

} // namespace detail

/// N x P observed data. Rows are objects, columns are features.
class FeatureMatrix {
public:
    /// Raw (unstandardized) data. Throws NonFiniteInput / InvalidArgument.
    static FeatureMatrix raw(Matrix values) { return FeatureMatrix(std::move(values), false); }

    /// Wraps data the caller claims is already column-standardized. The claim
    /// is checked against the same tolerances standardize_columns guarantees.
    static FeatureMatrix assume_standardized(Matrix values) {
        FeatureMatrix out(std::move(values), false);
        const auto& x = out.values_;
        for (Eigen::Index p = 0; p < x.cols(); ++p) {
            const double mean = x.col(p).mean();
            const double sd = detail::sample_sd(x.col(p), mean);
            if (std::abs(mean) >= detail::kStandardizedMeanTol || std::abs(sd - 1.0) >= detail::kStandardizedSdTol) {
                throw Error(ErrorCode::NotStandardized,
                            "column " + std::to_string(p) + " has mean " + std::to_string(mean) + " and sd " +
                                std::to_string(sd));
            }
        }
        out.standardized_ = true;
        return out;
    }

    const Matrix& values() const noexcept { return values_; }
    std::size_t n_objects() const noexcept { return static_cast<std::size_t>(values_.rows()); }
    std::size_t n_features() const noexcept { return static_cast<std::size_t>(values_.cols()); }
    bool standardized() const noexcept { return standardized_; }

private:
    FeatureMatrix(Matrix values, bool standardized) : values_(std::move(values)), standardized_(standardized) {
        if (values_.rows() < 2) throw Error(ErrorCode::InvalidArgument, "need at least 2 objects");
        if (values_.cols() < 1) throw Error(ErrorCode::InvalidArgument, "need at least 1 feature");
        detail::require_finite(values_);
    }

    friend struct detail::StandardizeAccess;

    Matrix values_;
    bool standardized_ = false;
};

namespace detail {
struct StandardizeAccess {
    static FeatureMatrix make(Matrix values, bool standardized) { return FeatureMatrix(std::move(values), standardized); }
};
} // namespace detail

struct StandardizeResult {
    FeatureMatrix matrix;
    std::size_t dropped_columns = 0;
    std::vector<std::size_t> kept_columns;
};

struct PreprocessResult {
    FeatureMatrix matrix;
    std::size_t dropped_columns = 0;
    std::vector<std::size_t> kept_columns;
    bool log_applied = false;
};

namespace detail {

// Centers each column on `center(col)` and scales by its sample sd, dropping
// columns whose sd is below kConstantColumnSd.
template <typename CenterFn>
Matrix center_and_scale(const Matrix& x, CenterFn center, std::vector<std::size_t>& kept) {
    kept.clear();
    std::vector<double> centers, sds;
    for (Eigen::Index p = 0; p < x.cols(); ++p) {
        const double mean = x.col(p).mean();
        const double sd = sample_sd(x.col(p), mean);
        if (sd < kConstantColumnSd) continue;
        kept.push_back(static_cast<std::size_t>(p));
        centers.push_back(center(x.col(p), mean));
        sds.push_back(sd);
    }
    if (kept.empty()) throw Error(ErrorCode::AllColumnsConstant, "every column has zero variance");
    Matrix out(x.rows(), static_cast<Eigen::Index>(kept.size()));
    for (std::size_t c = 0; c < kept.size(); ++c) {
        out.col(static_cast<Eigen::Index>(c)) =
            (x.col(static_cast<Eigen::Index>(kept[c])).array() - centers[c]) / sds[c];
    }
    return out;
}

} // namespace detail

/// Column standardization to mean 0 and sample sd 1 (denominator N-1).
/// Constant columns are dropped and counted.
inline StandardizeResult standardize_columns(const FeatureMatrix& x) {
    std::vector<std::size_t> kept;
    Matrix out = detail::center_and_scale(
        x.values(), [](const Eigen::Ref<const Vector>&, double mean) { return mean; }, kept);
    const std::size_t dropped = x.n_features() - kept.size();
    return {detail::StandardizeAccess::make(std::move(out), true), dropped, std::move(kept)};
}

/// Log-if-all-positive, then median-center and sd-scale every column.
/// The result is not flagged standardized: its column means are not zero.
inline PreprocessResult preprocess_dataset(const FeatureMatrix& x) {
    Matrix values = x.values();
    const bool all_positive = (values.array() > 0.0).all();
    if (all_positive) values = values.array().log().matrix();
    std::vector<std::size_t> kept;
    Matrix out = detail::center_and_scale(
        values, [](const Eigen::Ref<const Vector>& col, double) { return detail::median(col); }, kept);
    const std::size_t dropped = x.n_features() - kept.size();
    return {detail::StandardizeAccess::make(std::move(out), false), dropped, std::move(kept), all_positive};
}

/// Normalized left Gram matrix G = X X^T / P, stored exactly symmetric.
class GramMatrix {
public:
    explicit GramMatrix(Matrix values) : values_(std::move(values)) {
        if (values_.rows() != values_.cols()) throw Error(ErrorCode::DimensionMismatch, "Gram matrix must be square");
        if (values_.rows() < 2) throw Error(ErrorCode::InvalidArgument, "need at least 2 objects");
        detail::require_finite(values_);
        Matrix sym = 0.5 * (values_ + values_.transpose());
        values_ = std::move(sym);
    }

    const Matrix& values() const noexcept { return values_; }
    std::size_t n_objects() const noexcept { return static_cast<std::size_t>(values_.rows()); }
    double operator()(std::size_t i, std::size_t j) const {
        return values_(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
    }

private:
    Matrix values_;
};

// G = X X^T / P without the standardization requirement. Used where the
// model is stated for raw data (the concentration harness).
inline GramMatrix raw_gram(const Matrix& x) {
    Matrix g(x.rows(), x.rows());
    g.setZero();
    g.selfadjointView<Eigen::Lower>().rankUpdate(x, 1.0 / static_cast<double>(x.cols()));
    g.triangularView<Eigen::StrictlyUpper>() = g.transpose();
    return GramMatrix(std::move(g));
}

/// Requires standardized input; the transforms downstream rely on zero
/// column sums.
inline GramMatrix gram(const FeatureMatrix& x) {
    if (!x.standardized()) throw Error(ErrorCode::NotStandardized, "gram() requires a column-standardized matrix");
    return raw_gram(x.values());
}

} // namespace gmcluster
