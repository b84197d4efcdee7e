#pragma once

// Brute-force reference computations used only by the tests. None of these
// call into the code paths they are used to check.

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <set>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace oracle {

/// MI of two raw label vectors by direct counting (natural log).
inline double mutual_information(const std::vector<int>& u, const std::vector<int>& v) {
    const double n = static_cast<double>(u.size());
    std::map<std::pair<int, int>, double> joint;
    std::map<int, double> pu, pv;
    for (std::size_t i = 0; i < u.size(); ++i) {
        joint[{u[i], v[i]}] += 1.0;
        pu[u[i]] += 1.0;
        pv[v[i]] += 1.0;
    }
    double mi = 0.0;
    for (const auto& [key, c] : joint) mi += c / n * std::log(c * n / (pu[key.first] * pv[key.second]));
    return mi;
}

inline double entropy(const std::vector<int>& u) {
    const double n = static_cast<double>(u.size());
    std::map<int, double> counts;
    for (int x : u) counts[x] += 1.0;
    double h = 0.0;
    for (const auto& [k, c] : counts) h -= c / n * std::log(c / n);
    return h;
}

/// E[MI] averaged over every rearrangement of v. Distinct rearrangements of a
/// multiset each stand for the same number of permutations, so averaging over
/// them equals averaging over all n! permutations.
inline double expected_mi_by_enumeration(const std::vector<int>& u, std::vector<int> v) {
    std::sort(v.begin(), v.end());
    double total = 0.0;
    long long count = 0;
    do {
        total += mutual_information(u, v);
        ++count;
    } while (std::next_permutation(v.begin(), v.end()));
    return total / static_cast<double>(count);
}

inline double ami_by_enumeration(const std::vector<int>& u, const std::vector<int>& v) {
    const double emi = expected_mi_by_enumeration(u, v);
    const double mi = mutual_information(u, v);
    return (mi - emi) / (0.5 * (entropy(u) + entropy(v)) - emi);
}

/// Total within-cluster sum of squares of a partition of the rows of x.
inline double within_ss(const Eigen::MatrixXd& x, const std::vector<std::vector<std::size_t>>& clusters) {
    double total = 0.0;
    for (const auto& members : clusters) {
        Eigen::RowVectorXd c = Eigen::RowVectorXd::Zero(x.cols());
        for (auto i : members) c += x.row(static_cast<Eigen::Index>(i));
        c /= static_cast<double>(members.size());
        for (auto i : members) total += (x.row(static_cast<Eigen::Index>(i)) - c).squaredNorm();
    }
    return total;
}

struct DirectMerge {
    std::size_t min_a, min_b; // smallest member of each merged cluster
    double cost;
};

/// Greedy Ward agglomeration that evaluates every candidate merge by
/// recomputing the within-cluster sum of squares from scratch.
inline std::vector<DirectMerge> direct_ward(const Eigen::MatrixXd& x) {
    std::vector<std::vector<std::size_t>> clusters;
    for (std::size_t i = 0; i < static_cast<std::size_t>(x.rows()); ++i) clusters.push_back({i});
    std::vector<DirectMerge> out;
    while (clusters.size() > 1) {
        const double base = within_ss(x, clusters);
        double best = std::numeric_limits<double>::infinity();
        std::size_t ba = 0, bb = 0;
        for (std::size_t a = 0; a < clusters.size(); ++a) {
            for (std::size_t b = a + 1; b < clusters.size(); ++b) {
                auto trial = clusters;
                trial[a].insert(trial[a].end(), trial[b].begin(), trial[b].end());
                trial.erase(trial.begin() + static_cast<std::ptrdiff_t>(b));
                const double cost = within_ss(x, trial) - base;
                if (cost < best) {
                    best = cost;
                    ba = a;
                    bb = b;
                }
            }
        }
        const auto ma = *std::min_element(clusters[ba].begin(), clusters[ba].end());
        const auto mb = *std::min_element(clusters[bb].begin(), clusters[bb].end());
        out.push_back({std::min(ma, mb), std::max(ma, mb), best});
        clusters[ba].insert(clusters[ba].end(), clusters[bb].begin(), clusters[bb].end());
        clusters.erase(clusters.begin() + static_cast<std::ptrdiff_t>(bb));
        // Keep clusters ordered by smallest member so scanning order matches
        // the (min, max) tie rule.
        std::sort(clusters.begin(), clusters.end(), [](const auto& l, const auto& r) {
            return *std::min_element(l.begin(), l.end()) < *std::min_element(r.begin(), r.end());
        });
    }
    return out;
}

/// Partition (as a set of sets) from a label vector.
inline std::set<std::set<std::size_t>> partition_of(const std::vector<int>& labels) {
    std::map<int, std::set<std::size_t>> groups;
    for (std::size_t i = 0; i < labels.size(); ++i) groups[labels[i]].insert(i);
    std::set<std::set<std::size_t>> out;
    for (auto& [k, s] : groups) out.insert(s);
    return out;
}

} // namespace oracle
