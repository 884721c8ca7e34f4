#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <limits>
#include <ostream>
#include <span>
#include <stdexcept>
#include <vector>

#include "knng/dataset.hpp"
#include "knng/graph.hpp"

namespace knng {

// Ground-truth exact K-NNG from exhaustive pairwise evaluation. Kept fully
// independent of the float kernels: distances accumulate in double and ties
// break on the lower id.
struct ExactGraph {
    std::uint32_t k = 0;
    std::uint32_t n = 0;
    std::vector<std::uint32_t> ids; // n*k, per node sorted by (distance, id)
    std::vector<double> dists;      // parallel to ids

    std::span<const std::uint32_t> row(std::uint32_t u) const {
        return {ids.data() + std::size_t(u) * k, k};
    }

    // same format as KnnGraph::export_csv; rows are already sorted
    void export_csv(std::ostream& os) const {
        os << "node,neighbor,distance\n";
        char buf[80];
        for (std::uint32_t u = 0; u < n; ++u) {
            for (std::uint32_t i = 0; i < k; ++i) {
                const std::size_t p = std::size_t(u) * k + i;
                const int len =
                    std::snprintf(buf, sizeof buf, "%u,%u,%.9g\n", u, ids[p], dists[p]);
                os.write(buf, len);
            }
        }
    }
};

inline constexpr std::uint32_t kBruteForceGuard = 100000;

namespace detail {

inline double l2_sq_double(const float* a, const float* b, std::uint32_t d) {
    double acc[8] = {};
    std::uint32_t j = 0;
    for (; j + 8 <= d; j += 8) {
        for (std::uint32_t l = 0; l < 8; ++l) {
            const double diff = double(a[j + l]) - double(b[j + l]);
            acc[l] += diff * diff;
        }
    }
    double tail = 0.0;
    for (; j < d; ++j) {
        const double diff = double(a[j]) - double(b[j]);
        tail += diff * diff;
    }
    return ((acc[0] + acc[1]) + (acc[2] + acc[3])) + ((acc[4] + acc[5]) + (acc[6] + acc[7])) +
           tail;
}

struct ExactCandidate {
    double dist;
    std::uint32_t id;

    bool operator<(const ExactCandidate& other) const {
        return dist != other.dist ? dist < other.dist : id < other.id;
    }
};

// Bounded sorted insert, list kept at k entries ordered by (dist, id).
inline void exact_insert(ExactCandidate* list, std::uint32_t k, ExactCandidate cand) {
    if (!(cand < list[k - 1])) return;
    std::uint32_t i = k - 1;
    while (i > 0 && cand < list[i - 1]) {
        list[i] = list[i - 1];
        --i;
    }
    list[i] = cand;
}

} // namespace detail

// Exact k nearest neighbors per node under squared L2. Guarded against
// accidental desk-melting sizes unless unguarded is set.
inline ExactGraph brute_force_knng(const Dataset& data, std::uint32_t k, bool unguarded = false) {
    const std::uint32_t n = data.n();
    const std::uint32_t d = data.d();
    if (k == 0 || k >= n) throw std::invalid_argument("brute_force_knng: need 0 < k < n");
    if (n > kBruteForceGuard && !unguarded)
        throw std::invalid_argument("brute_force_knng: n exceeds guard; pass unguarded to allow");

    std::vector<detail::ExactCandidate> best(
        std::size_t(n) * k, {std::numeric_limits<double>::infinity(), 0xffffffffu});

    // i-rows blocked so they stay cache-resident while j streams past once
    constexpr std::uint32_t kIBlock = 256;
    for (std::uint32_t ib = 0; ib < n; ib += kIBlock) {
        const std::uint32_t ie = std::min(ib + kIBlock, n);
        for (std::uint32_t j = ib + 1; j < n; ++j) {
            const float* rj = data.row(j);
            detail::ExactCandidate* bj = best.data() + std::size_t(j) * k;
            for (std::uint32_t i = ib; i < std::min(ie, j); ++i) {
                const double dist = detail::l2_sq_double(data.row(i), rj, d);
                detail::exact_insert(best.data() + std::size_t(i) * k, k, {dist, j});
                detail::exact_insert(bj, k, {dist, i});
            }
        }
    }

    ExactGraph out;
    out.k = k;
    out.n = n;
    out.ids.resize(std::size_t(n) * k);
    out.dists.resize(std::size_t(n) * k);
    for (std::size_t p = 0; p < out.ids.size(); ++p) {
        out.ids[p] = best[p].id;
        out.dists[p] = best[p].dist;
    }
    return out;
}

// Fraction of (node, neighbor-id) pairs of the exact graph present in the
// approximation; membership by id only.
inline double recall(const KnnGraph& approx, const ExactGraph& exact) {
    if (approx.n() != exact.n || approx.k() != exact.k)
        throw std::invalid_argument("recall: graph shapes differ");
    std::uint64_t hits = 0;
    std::vector<std::uint32_t> truth(exact.k);
    for (std::uint32_t u = 0; u < exact.n; ++u) {
        const auto row = exact.row(u);
        truth.assign(row.begin(), row.end());
        std::sort(truth.begin(), truth.end());
        for (const NeighborEntry& e : approx.row(u))
            hits += std::binary_search(truth.begin(), truth.end(), e.id);
    }
    return double(hits) / (double(exact.n) * exact.k);
}

// Least-squares slope of log(dist_evals) against log(n).
inline double scaling_exponent(std::span<const double> sizes, std::span<const double> evals) {
    if (sizes.size() != evals.size() || sizes.size() < 3)
        throw std::invalid_argument("scaling_exponent: need at least 3 matched points");
    for (std::size_t i = 0; i < sizes.size(); ++i) {
        if (sizes[i] <= 0 || evals[i] <= 0)
            throw std::invalid_argument("scaling_exponent: sizes and counts must be positive");
        if (i > 0 && sizes[i] <= sizes[i - 1])
            throw std::invalid_argument("scaling_exponent: sizes must be increasing");
    }
    const std::size_t m = sizes.size();
    double mean_x = 0.0, mean_y = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
        mean_x += std::log(sizes[i]);
        mean_y += std::log(evals[i]);
    }
    mean_x /= double(m);
    mean_y /= double(m);
    double sxy = 0.0, sxx = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
        const double dx = std::log(sizes[i]) - mean_x;
        sxy += dx * (std::log(evals[i]) - mean_y);
        sxx += dx * dx;
    }
    return sxy / sxx;
}

} // namespace knng
