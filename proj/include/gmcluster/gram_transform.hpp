#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <vector>

#include "gmcluster/assignment.hpp"
#include "gmcluster/data_core.hpp"
#include "gmcluster/error.hpp"
#include "gmcluster/mixture_spec.hpp"

namespace gmcluster {

enum class MVariant { Initial, ClusterAware };

/// N x (N+1) transform of G. Off-diagonal entries are copied from G, the
/// diagonal of G moves to the last column, and each vacated slot (i,i) holds
/// an average of the other entries in column i.
struct MMatrix {
    Matrix values;
    MVariant variant = MVariant::Initial;
    std::optional<ClusterAssignment> labels; // set for ClusterAware

    std::size_t n_objects() const noexcept { return static_cast<std::size_t>(values.rows()); }
    std::size_t dim() const noexcept { return static_cast<std::size_t>(values.cols()); }
};

namespace detail {

inline Matrix m_skeleton(const GramMatrix& g) {
    const auto n = static_cast<Eigen::Index>(g.n_objects());
    Matrix m(n, n + 1);
    m.leftCols(n) = g.values();
    m.col(n) = g.values().diagonal();
    return m;
}

inline double off_diagonal_mean(const Matrix& gv, Eigen::Index i) {
    const auto n = gv.rows();
    double sum = 0.0;
    for (Eigen::Index j = 0; j < n; ++j) {
        if (j != i) sum += gv(j, i);
    }
    return sum / static_cast<double>(n - 1);
}

} // namespace detail

inline MMatrix build_M(const GramMatrix& g) {
    const Matrix& gv = g.values();
    Matrix m = detail::m_skeleton(g);
    for (Eigen::Index i = 0; i < gv.rows(); ++i) m(i, i) = detail::off_diagonal_mean(gv, i);
    return {std::move(m), MVariant::Initial, std::nullopt};
}

/// Slot (i,i) becomes the mean of g_{j,i} over the other members j of i's
/// cluster. A singleton falls back to the mean over all j != i.
inline MMatrix update_M_delta(const GramMatrix& g, const ClusterAssignment& labels) {
    const Matrix& gv = g.values();
    const auto n = gv.rows();
    if (static_cast<Eigen::Index>(labels.size()) != n) {
        throw Error(ErrorCode::LengthMismatch, "labels must have one entry per object");
    }
    Matrix m = detail::m_skeleton(g);
    for (Eigen::Index i = 0; i < n; ++i) {
        double sum = 0.0;
        int count = 0;
        for (Eigen::Index j = 0; j < n; ++j) {
            if (j != i && labels[static_cast<std::size_t>(j)] == labels[static_cast<std::size_t>(i)]) {
                sum += gv(j, i);
                ++count;
            }
        }
        m(i, i) = count > 0 ? sum / static_cast<double>(count) : detail::off_diagonal_mean(gv, i);
    }
    return {std::move(m), MVariant::ClusterAware, labels};
}

/// Expected value of M^delta under a mixture spec, for a fixed assignment of
/// objects to the spec's components.
struct ThetaMatrix {
    Matrix row_means; // N x (N+1)
    Matrix pairwise;  // K0 x K0, theta_{a,b} = mu_a . mu_b / P
    Vector diagonal;  // K0, theta_a = (mu_a . mu_a + sum_p var_{a,p}) / P
    std::vector<int> components; // 1-based component of each object

    /// The (N+1)-vector shared by every member of component `a` (1-based).
    Vector cluster_row(int a) const {
        const auto n = static_cast<Eigen::Index>(components.size());
        Vector row(n + 1);
        for (Eigen::Index j = 0; j < n; ++j) row(j) = pairwise(a - 1, components[static_cast<std::size_t>(j)] - 1);
        row(n) = diagonal(a - 1);
        return row;
    }
};

/// `components` are the generating component ids (1..K0), not canonicalized
/// labels, because Theta is indexed by the spec's clusters.
inline ThetaMatrix theta_expectations(const MixtureSpec& spec, std::span<const int> components) {
    if (spec.means.cols() != spec.variances.cols() || spec.means.rows() != spec.variances.rows()) {
        throw Error(ErrorCode::DimensionMismatch, "mean and variance vectors differ in length");
    }
    const auto k0 = spec.means.rows();
    const double p = static_cast<double>(spec.means.cols());
    ThetaMatrix theta;
    theta.pairwise = spec.means * spec.means.transpose() / p;
    theta.pairwise = 0.5 * (theta.pairwise + theta.pairwise.transpose()).eval();
    theta.diagonal.resize(k0);
    for (Eigen::Index a = 0; a < k0; ++a) {
        theta.diagonal(a) = theta.pairwise(a, a) + spec.variances.row(a).sum() / p;
    }
    theta.components.assign(components.begin(), components.end());
    for (int c : theta.components) {
        if (c < 1 || c > k0) throw Error(ErrorCode::InvalidArgument, "component label out of range");
    }
    const auto n = static_cast<Eigen::Index>(components.size());
    theta.row_means.resize(n, n + 1);
    for (Eigen::Index i = 0; i < n; ++i) {
        theta.row_means.row(i) = theta.cluster_row(theta.components[static_cast<std::size_t>(i)]).transpose();
    }
    return theta;
}

struct SeparabilityReport {
    double min_gap = std::numeric_limits<double>::infinity();
    int cluster_a = 0; // 1-based
    int cluster_b = 0;
};

/// Smallest Euclidean distance between the cluster rows of Theta. Purely a
/// diagnostic; no threshold is applied.
inline SeparabilityReport separability_diagnostic(const ThetaMatrix& theta) {
    const auto k0 = static_cast<int>(theta.diagonal.size());
    if (k0 < 2) throw Error(ErrorCode::SingleCluster, "separability needs at least two clusters");
    SeparabilityReport report;
    for (int a = 1; a <= k0; ++a) {
        const Vector ra = theta.cluster_row(a);
        for (int b = a + 1; b <= k0; ++b) {
            const double gap = (ra - theta.cluster_row(b)).norm();
            if (gap < report.min_gap) report = {gap, a, b};
        }
    }
    return report;
}

} // namespace gmcluster
