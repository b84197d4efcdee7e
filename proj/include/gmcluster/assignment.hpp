#pragma once

#include <algorithm>
#include <cstddef>
#include <map>
#include <span>
#include <vector>

#include "gmcluster/error.hpp"

namespace gmcluster {

/// Hard partition of N objects into K clusters with labels 1..K.
///
/// Labels are always canonical: object 0 is in cluster 1 and new cluster
/// numbers are handed out in order of first occurrence, so two assignments
/// describing the same partition compare equal.
class ClusterAssignment {
public:
    ClusterAssignment() = default;

    /// Accepts arbitrary integer labels and canonicalizes them.
    explicit ClusterAssignment(std::span<const int> raw) { assign(raw); }
    ClusterAssignment(std::initializer_list<int> raw) {
        std::vector<int> tmp(raw);
        assign(tmp);
    }

    static ClusterAssignment single(std::size_t n) { return ClusterAssignment(std::vector<int>(n, 1)); }

    std::size_t size() const noexcept { return labels_.size(); }
    int k() const noexcept { return k_; }
    int operator[](std::size_t i) const { return labels_[i]; }
    const std::vector<int>& labels() const noexcept { return labels_; }

    /// Cluster sizes indexed 0..K-1 (cluster label minus one).
    std::vector<std::size_t> sizes() const {
        std::vector<std::size_t> out(static_cast<std::size_t>(k_), 0);
        for (int l : labels_) ++out[static_cast<std::size_t>(l - 1)];
        return out;
    }

    friend bool operator==(const ClusterAssignment&, const ClusterAssignment&) = default;

private:
    void assign(std::span<const int> raw) {
        std::map<int, int> remap;
        labels_.clear();
        labels_.reserve(raw.size());
        for (int r : raw) {
            auto [it, inserted] = remap.try_emplace(r, static_cast<int>(remap.size()) + 1);
            labels_.push_back(it->second);
        }
        k_ = static_cast<int>(remap.size());
    }

    std::vector<int> labels_;
    int k_ = 0;
};

// Canonicalizes an ordered sequence of arbitrary keys (e.g. string class
// names read from a file) into a ClusterAssignment.
template <typename Key>
ClusterAssignment assignment_from_keys(std::span<const Key> keys) {
    std::map<Key, int> ids;
    std::vector<int> raw;
    raw.reserve(keys.size());
    for (const auto& key : keys) {
        auto [it, inserted] = ids.try_emplace(key, static_cast<int>(ids.size()) + 1);
        raw.push_back(it->second);
    }
    return ClusterAssignment(raw);
}

} // namespace gmcluster
