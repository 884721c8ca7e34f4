#pragma once

#include <algorithm>
#include <cassert>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "knng/dataset.hpp"
#include "knng/graph.hpp"
#include "knng/permutation.hpp"

namespace knng {

// Greedy clustering heuristic. Starting from the identity, one pass over the
// graph assigns spot i+1 to the closest neighbor of the node occupying spot i
// that does not already hold an earlier spot, by swapping the permutation and
// its inverse in lockstep. Spots up to i are frozen once step i runs, so the
// walk consumes one recovered cluster after another and the leftovers pile up
// at the end.
template <typename GraphT = KnnGraph>
Permutation greedy_cluster(const GraphT& graph) {
    const std::uint32_t n = graph.n();
    const std::uint32_t k = graph.k();
    Permutation perm = Permutation::identity(n);
    std::vector<std::uint32_t>& sigma = perm.sigma;
    std::vector<std::uint32_t>& sigma_inv = perm.sigma_inv;

    std::vector<NeighborEntry> adj(k);
    for (std::uint32_t i = 0; i < n; ++i) {
        const auto r = graph.row(sigma_inv[i]);
        adj.assign(r.begin(), r.end());
        std::sort(adj.begin(), adj.end(), [](const NeighborEntry& a, const NeighborEntry& b) {
            return a.dist != b.dist ? a.dist < b.dist : a.id < b.id;
        });
        for (std::uint32_t j = 0; j < k; ++j) {
            const std::uint32_t node = adj[j].id;
            const std::uint32_t spot = sigma[node];
            if (spot < i + 1) continue;
            if (spot == i + 1) break;
            const std::uint32_t occupant = sigma_inv[i + 1];
            std::swap(sigma[node], sigma[occupant]);
            std::swap(sigma_inv[spot], sigma_inv[i + 1]);
            assert(sigma_inv[sigma[node]] == node && sigma_inv[sigma[occupant]] == occupant);
            break;
        }
    }
    return perm;
}

struct WindowFraction {
    std::uint32_t window_start;
    std::uint32_t cluster;
    double fraction;
};

// For a sliding window over permuted positions, the fraction of occupants
// belonging to each cluster. Window starts advance in strides of window/4;
// the final start n-window is always included.
inline std::vector<WindowFraction> window_cluster_fraction(const ClusterLabels& labels,
                                                           const Permutation& perm,
                                                           std::uint32_t window = 2000) {
    const std::uint32_t n = perm.size();
    if (labels.labels.size() != n)
        throw std::invalid_argument("window_cluster_fraction: labels/permutation size mismatch");
    if (window == 0 || n < window)
        throw std::invalid_argument("window_cluster_fraction: window larger than dataset");

    const std::uint32_t c = labels.cluster_count;
    const std::uint32_t stride = std::max(1u, window / 4);
    std::vector<WindowFraction> out;
    std::vector<std::uint32_t> counts(c);

    std::uint32_t p = 0;
    while (true) {
        std::fill(counts.begin(), counts.end(), 0u);
        for (std::uint32_t q = p; q < p + window; ++q)
            ++counts[labels.labels[perm.sigma_inv[q]]];
        for (std::uint32_t cl = 0; cl < c; ++cl)
            out.push_back({p, cl, double(counts[cl]) / window});
        if (p == n - window) break;
        p = std::min(p + stride, n - window);
    }
    return out;
}

// Upper bound on the probability that k uniformly sampled neighbors all miss
// the sampling node's own cluster, for c balanced clusters: ((c-1)/c)^k.
inline double cluster_miss_bound(std::uint32_t c, std::uint32_t k) {
    if (c < 2) throw std::invalid_argument("cluster_miss_bound: need at least 2 clusters");
    if (k < 1) throw std::invalid_argument("cluster_miss_bound: need at least 1 neighbor");
    return std::pow((c - 1.0) / c, static_cast<double>(k));
}

} // namespace knng
