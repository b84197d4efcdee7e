#pragma once

#include <cstddef>
#include <limits>
#include <numeric>
#include <utility>
#include <vector>

#include "gmcluster/assignment.hpp"
#include "gmcluster/data_core.hpp"
#include "gmcluster/error.hpp"
#include "gmcluster/gram_transform.hpp"

namespace gmcluster {

struct Merge {
    // Cluster ids: 0..N-1 are the original objects, N+s is the cluster
    // created by merge step s.
    std::size_t a = 0;
    std::size_t b = 0;
    double cost = 0.0; // increase in total within-cluster sum of squares
    std::size_t size = 0;
};

struct Dendrogram {
    std::size_t n_objects = 0;
    std::vector<Merge> merges; // N-1 entries, in merge order
};

/// Ward agglomeration of the rows of `points` (Euclidean metric).
///
/// Works on the Ward cost d(A,B) = |A||B|/(|A|+|B|) * ||c_A - c_B||^2, which
/// starts at ||x_i - x_j||^2 / 2 for singletons and is updated with the
/// Lance-Williams recurrence
///   d(A+B, C) = ((|A|+|C|) d(A,C) + (|B|+|C|) d(B,C) - |C| d(A,B)) / (|A|+|B|+|C|).
/// Equal costs are resolved toward the pair whose (smaller, larger) minimum
/// member indices are lexicographically smallest.
inline Dendrogram ward_dendrogram(const Matrix& points) {
    const auto n = static_cast<std::size_t>(points.rows());
    if (n < 2) throw Error(ErrorCode::InvalidArgument, "need at least 2 points");

    std::vector<double> dist(n * n, 0.0);
    auto d = [&](std::size_t i, std::size_t j) -> double& { return dist[i * n + j]; };
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            const double sq =
                (points.row(static_cast<Eigen::Index>(i)) - points.row(static_cast<Eigen::Index>(j))).squaredNorm();
            d(i, j) = d(j, i) = 0.5 * sq;
        }
    }

    // Slot i holds the active cluster whose smallest member is object i.
    std::vector<bool> active(n, true);
    std::vector<std::size_t> size(n, 1);
    std::vector<std::size_t> node_id(n);
    std::iota(node_id.begin(), node_id.end(), std::size_t{0});

    Dendrogram tree;
    tree.n_objects = n;
    tree.merges.reserve(n - 1);
    for (std::size_t step = 0; step + 1 < n; ++step) {
        double best = std::numeric_limits<double>::infinity();
        std::size_t bi = 0, bj = 0;
        // Slots are scanned in increasing (i, j) order and only a strictly
        // smaller cost replaces the incumbent, which implements the tie rule.
        for (std::size_t i = 0; i < n; ++i) {
            if (!active[i]) continue;
            for (std::size_t j = i + 1; j < n; ++j) {
                if (active[j] && d(i, j) < best) {
                    best = d(i, j);
                    bi = i;
                    bj = j;
                }
            }
        }

        const double ni = static_cast<double>(size[bi]);
        const double nj = static_cast<double>(size[bj]);
        for (std::size_t k = 0; k < n; ++k) {
            if (!active[k] || k == bi || k == bj) continue;
            const double nk = static_cast<double>(size[k]);
            const double updated = ((ni + nk) * d(bi, k) + (nj + nk) * d(bj, k) - nk * best) / (ni + nj + nk);
            d(bi, k) = d(k, bi) = updated;
        }
        tree.merges.push_back({node_id[bi], node_id[bj], best, size[bi] + size[bj]});
        size[bi] += size[bj];
        node_id[bi] = n + step;
        active[bj] = false;
    }
    return tree;
}

inline Dendrogram ward_dendrogram(const MMatrix& m) { return ward_dendrogram(m.values); }

/// Partition left after applying the first N-k merges.
inline ClusterAssignment cut_tree(const Dendrogram& tree, int k) {
    const std::size_t n = tree.n_objects;
    if (k < 1 || static_cast<std::size_t>(k) > n) {
        throw Error(ErrorCode::KOutOfRange, "k must lie in [1, " + std::to_string(n) + "]");
    }
    std::vector<std::size_t> parent(2 * n - 1);
    std::iota(parent.begin(), parent.end(), std::size_t{0});
    auto find = [&](std::size_t x) {
        while (parent[x] != x) x = parent[x] = parent[parent[x]];
        return x;
    };
    const std::size_t applied = n - static_cast<std::size_t>(k);
    for (std::size_t s = 0; s < applied; ++s) {
        const auto& mg = tree.merges[s];
        parent[find(mg.a)] = n + s;
        parent[find(mg.b)] = n + s;
    }
    std::vector<int> raw(n);
    for (std::size_t i = 0; i < n; ++i) raw[i] = static_cast<int>(find(i));
    return ClusterAssignment(raw);
}

} // namespace gmcluster
