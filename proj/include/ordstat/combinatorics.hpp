// SPDX-License-Identifier: MIT
//
// Index-set machinery for the combinatorial summations over branch subsets.
// Every analytical expression in this library is a sum over (a) a choice of
// pivot branches, (b) k-element subsets of the remaining branches and
// (c) strictly increasing index tuples inside a contiguous range.  This
// header provides deterministic (lexicographic) enumeration of all three,
// plus a cost guard that refuses configurations whose total term count is
// intractable.

#pragma once

#include <algorithm>
#include <cstdint>
#include <string>
#include <vector>

#include "ordstat/common.hpp"

namespace ordstat {

/// An ordered set of distinct 1-based branch indices.
class IndexSet {
public:
    IndexSet() = default;

    /// Construct from arbitrary order; sorts and validates distinctness.
    explicit IndexSet(std::vector<int> members) : members_(std::move(members)) {
        std::sort(members_.begin(), members_.end());
        for (std::size_t i = 0; i < members_.size(); ++i) {
            if (members_[i] < 1)
                throw ConfigError("IndexSet: indices must be >= 1");
            if (i > 0 && members_[i] == members_[i - 1])
                throw ConfigError("IndexSet: duplicate index " +
                                  std::to_string(members_[i]));
        }
    }

    /// The full index set {1, 2, ..., N}.
    static IndexSet full(int N) {
        std::vector<int> v(static_cast<std::size_t>(std::max(N, 0)));
        for (int i = 0; i < N; ++i) v[static_cast<std::size_t>(i)] = i + 1;
        IndexSet s;
        s.members_ = std::move(v);
        return s;
    }

    const std::vector<int>& members() const { return members_; }
    std::size_t size() const { return members_.size(); }
    bool empty() const { return members_.empty(); }
    int operator[](std::size_t i) const { return members_[i]; }

    bool contains(int idx) const {
        return std::binary_search(members_.begin(), members_.end(), idx);
    }

    /// Set difference (this minus other), preserving order.
    IndexSet difference(const IndexSet& other) const {
        IndexSet out;
        out.members_.reserve(members_.size());
        std::set_difference(members_.begin(), members_.end(),
                            other.members_.begin(), other.members_.end(),
                            std::back_inserter(out.members_));
        return out;
    }

    bool operator==(const IndexSet& other) const {
        return members_ == other.members_;
    }

private:
    std::vector<int> members_;
};

/// A strictly increasing tuple j_1 < j_2 < ... < j_l drawn from the
/// contiguous range [n1, n2].  These drive the alternating-sign inner sums
/// of the product-expansion identities.
struct NestedIndexTuple {
    std::vector<int> indices;
};

/// Lexicographic enumerator of the k-element subsets of (universe \ excluded).
/// Single-consumer; instances are independent and may run in parallel.
class SubsetEnumerator {
public:
    SubsetEnumerator(IndexSet universe, const IndexSet& excluded, int k)
        : pool_(universe.difference(excluded)), k_(k) {
        if (k < 0 || static_cast<std::size_t>(k) > pool_.size())
            throw ConfigError(
                "SubsetEnumerator: cardinality " + std::to_string(k) +
                " not in [0, " + std::to_string(pool_.size()) + "]");
        positions_.resize(static_cast<std::size_t>(k));
        for (int i = 0; i < k; ++i) positions_[static_cast<std::size_t>(i)] = i;
    }

    /// Produce the next subset in lexicographic order.  Returns false once
    /// exhausted (out is left untouched).
    bool next(IndexSet& out) {
        if (done_) return false;
        std::vector<int> subset(static_cast<std::size_t>(k_));
        for (int i = 0; i < k_; ++i)
            subset[static_cast<std::size_t>(i)] =
                pool_[static_cast<std::size_t>(positions_[static_cast<std::size_t>(i)])];
        out = IndexSet(std::move(subset));
        advance();
        return true;
    }

private:
    void advance() {
        if (k_ == 0) { done_ = true; return; }
        const int n = static_cast<int>(pool_.size());
        int i = k_ - 1;
        while (i >= 0 && positions_[static_cast<std::size_t>(i)] == n - k_ + i) --i;
        if (i < 0) { done_ = true; return; }
        ++positions_[static_cast<std::size_t>(i)];
        for (int j = i + 1; j < k_; ++j)
            positions_[static_cast<std::size_t>(j)] =
                positions_[static_cast<std::size_t>(j - 1)] + 1;
    }

    IndexSet pool_;
    int k_;
    std::vector<int> positions_;
    bool done_ = false;
};

/// All k-subsets of (universe \ excluded), lexicographically.
inline std::vector<IndexSet> enumerate_subsets(const IndexSet& universe,
                                               const IndexSet& excluded,
                                               int k) {
    SubsetEnumerator en(universe, excluded, k);
    std::vector<IndexSet> out;
    IndexSet s;
    while (en.next(s)) out.push_back(s);
    return out;
}

/// All k-subsets of the whole universe.
inline std::vector<IndexSet> enumerate_subsets(const IndexSet& universe, int k) {
    return enumerate_subsets(universe, IndexSet{}, k);
}

/// All strictly increasing l-tuples from [n1, n2], lexicographically.
/// There are C(n2-n1+1, l) of them.
inline std::vector<NestedIndexTuple> enumerate_nested(int n1, int n2, int l) {
    if (n1 > n2) throw ConfigError("enumerate_nested: empty range");
    if (l < 1 || l > n2 - n1 + 1)
        throw ConfigError("enumerate_nested: depth " + std::to_string(l) +
                          " not in [1, " + std::to_string(n2 - n1 + 1) + "]");
    std::vector<int> range(static_cast<std::size_t>(n2 - n1 + 1));
    for (int i = n1; i <= n2; ++i) range[static_cast<std::size_t>(i - n1)] = i;
    auto subsets = enumerate_subsets(IndexSet(std::move(range)), IndexSet{}, l);
    std::vector<NestedIndexTuple> out;
    out.reserve(subsets.size());
    for (auto& s : subsets) out.push_back(NestedIndexTuple{s.members()});
    return out;
}

/// Exact binomial coefficient for the small arguments used here (n <= 64).
inline double binomial(int n, int k) {
    if (k < 0 || k > n) return 0.0;
    k = std::min(k, n - k);
    double r = 1.0;
    for (int i = 0; i < k; ++i) r = r * static_cast<double>(n - i) / static_cast<double>(i + 1);
    return r;
}

/// Result of the enumeration-cost check: either the configuration is
/// accepted (with its estimated term count) or refused.
struct GuardResult {
    bool ok;
    double estimated_terms;
};

/// Refuse configurations whose subset enumerations would explode.  The most
/// expensive evaluators touch on the order of N * C(N-1, floor((N-1)/2)) *
/// 2^N terms per point, which is tractable on a desktop only for modest N.
inline GuardResult complexity_guard(int N, int budget = 12) {
    const int half = (N - 1) / 2;
    const double terms =
        static_cast<double>(N) * binomial(N - 1, half) * std::pow(2.0, N);
    return GuardResult{N <= budget, terms};
}

} // namespace ordstat
