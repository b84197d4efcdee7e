#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <vector>

#include "gmcluster/assignment.hpp"
#include "gmcluster/error.hpp"

namespace gmcluster {

enum class AmiNormalization { Mean, Max };

struct ContingencyTable {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<long long> counts; // row-major rows x cols
    std::size_t n = 0;

    long long at(std::size_t r, std::size_t c) const { return counts[r * cols + c]; }

    std::vector<long long> row_sums() const {
        std::vector<long long> out(rows, 0);
        for (std::size_t r = 0; r < rows; ++r)
            for (std::size_t c = 0; c < cols; ++c) out[r] += at(r, c);
        return out;
    }
    std::vector<long long> col_sums() const {
        std::vector<long long> out(cols, 0);
        for (std::size_t r = 0; r < rows; ++r)
            for (std::size_t c = 0; c < cols; ++c) out[c] += at(r, c);
        return out;
    }
};

inline ContingencyTable contingency(const ClusterAssignment& u, const ClusterAssignment& v) {
    if (u.size() != v.size()) throw Error(ErrorCode::LengthMismatch, "labelings have different lengths");
    ContingencyTable t;
    t.rows = static_cast<std::size_t>(u.k());
    t.cols = static_cast<std::size_t>(v.k());
    t.n = u.size();
    t.counts.assign(t.rows * t.cols, 0);
    for (std::size_t i = 0; i < u.size(); ++i) {
        ++t.counts[static_cast<std::size_t>(u[i] - 1) * t.cols + static_cast<std::size_t>(v[i] - 1)];
    }
    return t;
}

namespace detail {

// Sums after sorting so the result does not depend on term order; this makes
// every quantity below exactly symmetric in its two labelings.
inline double ordered_sum(std::vector<double> terms) {
    std::sort(terms.begin(), terms.end());
    double total = 0.0;
    for (double t : terms) total += t;
    return total;
}

inline double entropy(const std::vector<long long>& sizes, double n) {
    std::vector<double> terms;
    for (long long s : sizes) {
        if (s > 0) {
            const double p = static_cast<double>(s) / n;
            terms.push_back(-p * std::log(p));
        }
    }
    return ordered_sum(std::move(terms));
}

} // namespace detail

/// Natural-log mutual information of the two labelings in `t`.
inline double mutual_information(const ContingencyTable& t) {
    const auto a = t.row_sums();
    const auto b = t.col_sums();
    const double n = static_cast<double>(t.n);
    std::vector<double> terms;
    for (std::size_t r = 0; r < t.rows; ++r) {
        for (std::size_t c = 0; c < t.cols; ++c) {
            const long long nij = t.at(r, c);
            if (nij == 0) continue;
            const double x = static_cast<double>(nij);
            terms.push_back(x / n * std::log(n * x / (static_cast<double>(a[r]) * static_cast<double>(b[c]))));
        }
    }
    return detail::ordered_sum(std::move(terms));
}

/// Exact E[MI] when both marginals are held fixed and objects are matched by
/// a uniformly random permutation (hypergeometric cell counts).
inline double expected_mutual_information(const std::vector<long long>& a, const std::vector<long long>& b,
                                          long long n) {
    const double nd = static_cast<double>(n);
    const double lg_n = std::lgamma(nd + 1.0);
    std::vector<double> terms;
    for (long long ai : a) {
        for (long long bj : b) {
            const long long lo = std::max<long long>(1, ai + bj - n);
            const long long hi = std::min(ai, bj);
            // Ordered operands keep the floating-point result symmetric in (a, b).
            const double fa = static_cast<double>(std::min(ai, bj));
            const double fb = static_cast<double>(std::max(ai, bj));
            const double log_const = std::lgamma(fa + 1.0) + std::lgamma(fb + 1.0) + std::lgamma(nd - fa + 1.0) +
                                     std::lgamma(nd - fb + 1.0) - lg_n;
            for (long long nij = lo; nij <= hi; ++nij) {
                const double x = static_cast<double>(nij);
                const double log_prob = log_const - std::lgamma(x + 1.0) - std::lgamma(fa - x + 1.0) -
                                        std::lgamma(fb - x + 1.0) - std::lgamma(nd - fa - fb + x + 1.0);
                terms.push_back(x / nd * std::log(nd * x / (fa * fb)) * std::exp(log_prob));
            }
        }
    }
    return detail::ordered_sum(std::move(terms));
}

/// Adjusted mutual information (MI - E[MI]) / (norm(H_u, H_v) - E[MI]).
///
/// When the denominator vanishes (e.g. both labelings put every object in one
/// cluster) the result is 1 for identical partitions and 0 otherwise.
inline double ami(const ClusterAssignment& u, const ClusterAssignment& v,
                  AmiNormalization norm = AmiNormalization::Mean) {
    if (u.size() != v.size()) throw Error(ErrorCode::LengthMismatch, "labelings have different lengths");
    if (u.size() < 2) throw Error(ErrorCode::InvalidArgument, "AMI needs at least 2 objects");
    const ContingencyTable t = contingency(u, v);
    const auto a = t.row_sums();
    const auto b = t.col_sums();
    const double n = static_cast<double>(t.n);
    const double mi = mutual_information(t);
    const double emi = expected_mutual_information(a, b, static_cast<long long>(t.n));
    const double hu = detail::entropy(a, n);
    const double hv = detail::entropy(b, n);
    const double scale = norm == AmiNormalization::Mean ? 0.5 * (hu + hv) : std::max(hu, hv);
    const double denom = scale - emi;
    if (std::abs(denom) <= 1e-12 * std::max(1.0, scale)) return u == v ? 1.0 : 0.0;
    return (mi - emi) / denom;
}

} // namespace gmcluster
