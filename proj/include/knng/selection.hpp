#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "knng/graph.hpp"

namespace knng {

inline constexpr std::uint32_t kDefaultMaxCandidates = 50;

// Per-node sampled neighborhoods for one iteration, split into candidates that
// stem from new graph entries and ones that stem from already-joined entries.
// Each node owns one contiguous block of 2*cap ids (new list first, old list
// second) so duplicate checks touch a single region; the storage is reused
// across iterations.
class CandidateSet {
public:
    CandidateSet() = default;
    CandidateSet(std::uint32_t n, std::uint32_t cap) { reset(n, cap); }

    void reset(std::uint32_t n, std::uint32_t cap) {
        if (cap == 0) throw std::invalid_argument("CandidateSet: cap must be positive");
        n_ = n;
        cap_ = cap;
        ids_.resize(std::size_t(n) * 2 * cap);
        new_counts_.assign(n, 0);
        old_counts_.assign(n, 0);
    }

    void clear() {
        std::fill(new_counts_.begin(), new_counts_.end(), 0u);
        std::fill(old_counts_.begin(), old_counts_.end(), 0u);
    }

    std::uint32_t n() const { return n_; }
    std::uint32_t cap() const { return cap_; }

    std::span<const std::uint32_t> new_ids(std::uint32_t u) const {
        return {ids_.data() + std::size_t(u) * 2 * cap_, new_counts_[u]};
    }
    std::span<const std::uint32_t> old_ids(std::uint32_t u) const {
        return {ids_.data() + std::size_t(u) * 2 * cap_ + cap_, old_counts_[u]};
    }

    bool contains(std::uint32_t u, std::uint32_t id) const {
        const std::uint32_t* block = ids_.data() + std::size_t(u) * 2 * cap_;
        for (std::uint32_t i = 0; i < new_counts_[u]; ++i)
            if (block[i] == id) return true;
        for (std::uint32_t i = 0; i < old_counts_[u]; ++i)
            if (block[cap_ + i] == id) return true;
        return false;
    }

    // Unchecked append; the list must not be full.
    void append(std::uint32_t u, std::uint32_t id, bool is_new) {
        std::uint32_t* block = ids_.data() + std::size_t(u) * 2 * cap_;
        if (is_new)
            block[new_counts_[u]++] = id;
        else
            block[cap_ + old_counts_[u]++] = id;
    }

    std::uint32_t new_count(std::uint32_t u) const { return new_counts_[u]; }
    std::uint32_t old_count(std::uint32_t u) const { return old_counts_[u]; }

    std::uint32_t* new_data(std::uint32_t u) { return ids_.data() + std::size_t(u) * 2 * cap_; }
    std::uint32_t* old_data(std::uint32_t u) {
        return ids_.data() + std::size_t(u) * 2 * cap_ + cap_;
    }

    void set_counts(const std::vector<std::uint32_t>& new_counts,
                    const std::vector<std::uint32_t>& old_counts) {
        new_counts_ = new_counts;
        old_counts_ = old_counts;
    }

private:
    std::uint32_t n_ = 0;
    std::uint32_t cap_ = 0;
    std::vector<std::uint32_t> ids_;
    std::vector<std::uint32_t> new_counts_;
    std::vector<std::uint32_t> old_counts_;
};

enum class SelectionStrategy { naive, fused, turbo };

inline const char* to_string(SelectionStrategy s) {
    switch (s) {
        case SelectionStrategy::naive: return "naive";
        case SelectionStrategy::fused: return "fused";
        case SelectionStrategy::turbo: return "turbo";
    }
    return "?";
}

inline SelectionStrategy parse_strategy(std::string_view name) {
    if (name == "naive") return SelectionStrategy::naive;
    if (name == "fused") return SelectionStrategy::fused;
    if (name == "turbo") return SelectionStrategy::turbo;
    throw std::invalid_argument("unknown selection strategy: " + std::string(name));
}

namespace detail {

inline void check_selection_args(std::uint32_t graph_n, const CandidateSet& out) {
    if (out.n() != graph_n || out.cap() == 0)
        throw std::invalid_argument("selection: candidate set not sized for this graph");
}

// Uniform subset of size cap, partial Fisher-Yates over the gathered list.
inline void sample_down(std::vector<std::pair<std::uint32_t, bool>>& pool, std::uint32_t cap,
                        Rng& rng, bool take_new, CandidateSet& out, std::uint32_t u) {
    std::uint32_t count = 0;
    for (const auto& [id, is_new] : pool)
        if (is_new == take_new) ++count;
    if (count <= cap) {
        for (const auto& [id, is_new] : pool)
            if (is_new == take_new) out.append(u, id, take_new);
        return;
    }
    std::vector<std::uint32_t> ids;
    ids.reserve(count);
    for (const auto& [id, is_new] : pool)
        if (is_new == take_new) ids.push_back(id);
    for (std::uint32_t i = 0; i < cap; ++i) {
        std::uniform_int_distribution<std::uint32_t> pick(i, count - 1);
        std::swap(ids[i], ids[pick(rng)]);
        out.append(u, ids[i], take_new);
    }
}

// Bounded max-heap on weights over parallel (weight, id) arrays; keeps the
// cap smallest weights seen.
struct WeightHeap {
    float* weights;
    std::uint32_t* ids;
    std::uint32_t size;
    std::uint32_t cap;

    bool push(float w, std::uint32_t id) {
        if (size < cap) {
            std::uint32_t i = size++;
            weights[i] = w;
            ids[i] = id;
            while (i > 0) {
                const std::uint32_t parent = (i - 1) / 2;
                if (weights[parent] >= w) break;
                weights[i] = weights[parent];
                ids[i] = ids[parent];
                i = parent;
            }
            weights[i] = w;
            ids[i] = id;
            return true;
        }
        if (w >= weights[0]) return false;
        std::uint32_t i = 0;
        while (true) {
            const std::uint32_t left = 2 * i + 1;
            const std::uint32_t right = left + 1;
            std::uint32_t largest = i;
            float largest_w = w;
            if (left < cap && weights[left] > largest_w) {
                largest = left;
                largest_w = weights[left];
            }
            if (right < cap && weights[right] > largest_w) largest = right;
            if (largest == i) break;
            weights[i] = weights[largest];
            ids[i] = ids[largest];
            i = largest;
        }
        weights[i] = w;
        ids[i] = id;
        return true;
    }
};

} // namespace detail

// Reference selection, three passes over the graph with every intermediate
// result materialized in memory: the full reverse graph, then the full
// unioned neighborhood N(u) of every node, then a sampling pass down to the
// cap. Both intermediates are dynamically growing structures.
template <typename GraphT>
void select_naive(const GraphT& graph, std::uint64_t seed, CandidateSet& out) {
    detail::check_selection_args(graph.n(), out);
    out.clear();
    const std::uint32_t n = graph.n();
    const std::uint32_t k = graph.k();
    Rng rng(seed);

    // reverse
    std::vector<std::vector<std::pair<std::uint32_t, bool>>> reverse_adj(n);
    for (std::uint32_t u = 0; u < n; ++u) {
        for (std::uint32_t i = 0; i < k; ++i) {
            const NeighborEntry& e = graph.entry(u, i);
            reverse_adj[e.id].emplace_back(u, e.is_new);
        }
    }

    // union
    std::vector<std::vector<std::pair<std::uint32_t, bool>>> neighborhoods(n);
    for (std::uint32_t u = 0; u < n; ++u) {
        auto& pool = neighborhoods[u];
        auto add_unique = [&pool](std::uint32_t id, bool is_new) {
            for (const auto& [seen, flag] : pool)
                if (seen == id) return;
            pool.emplace_back(id, is_new);
        };
        for (std::uint32_t i = 0; i < k; ++i) {
            const NeighborEntry& e = graph.entry(u, i);
            add_unique(e.id, e.is_new);
        }
        for (const auto& [w, is_new] : reverse_adj[u]) add_unique(w, is_new);
    }

    // sample
    for (std::uint32_t u = 0; u < n; ++u) {
        detail::sample_down(neighborhoods[u], out.cap(), rng, true, out, u);
        detail::sample_down(neighborhoods[u], out.cap(), rng, false, out, u);
    }
}

// One pass over all n*k edges. Each edge draws one uniform weight; the target
// node keeps the cap candidates with the smallest weights, which is a uniform
// random subset of its neighborhood.
template <typename GraphT>
void select_fused(const GraphT& graph, std::uint64_t seed, CandidateSet& out) {
    detail::check_selection_args(graph.n(), out);
    out.clear();
    const std::uint32_t n = graph.n();
    const std::uint32_t k = graph.k();
    const std::uint32_t cap = out.cap();
    Rng rng(seed);
    std::uniform_real_distribution<float> unit(0.0f, 1.0f);

    std::vector<float> new_weights(std::size_t(n) * cap);
    std::vector<float> old_weights(std::size_t(n) * cap);
    std::vector<std::uint32_t> new_sizes(n, 0);
    std::vector<std::uint32_t> old_sizes(n, 0);

    auto offer = [&](std::uint32_t target, std::uint32_t id, bool is_new, float w) {
        const std::uint32_t limit = is_new ? new_sizes[target] : old_sizes[target];
        // duplicates across both lists are rejected, first offer wins
        for (std::uint32_t i = 0; i < new_sizes[target]; ++i)
            if (out.new_data(target)[i] == id) return;
        for (std::uint32_t i = 0; i < old_sizes[target]; ++i)
            if (out.old_data(target)[i] == id) return;
        detail::WeightHeap heap{is_new ? new_weights.data() + std::size_t(target) * cap
                                       : old_weights.data() + std::size_t(target) * cap,
                                is_new ? out.new_data(target) : out.old_data(target), limit, cap};
        if (heap.push(w, id)) {
            if (is_new)
                new_sizes[target] = heap.size;
            else
                old_sizes[target] = heap.size;
        }
    };

    for (std::uint32_t u = 0; u < n; ++u) {
        for (std::uint32_t i = 0; i < k; ++i) {
            const NeighborEntry& e = graph.entry(u, i);
            const float w = unit(rng);
            offer(u, e.id, e.is_new, w);
            offer(e.id, u, e.is_new, w);
        }
    }

    out.set_counts(new_sizes, old_sizes);
}

// Heapless one-pass sampling: an edge endpoint enters the target's flat list
// with probability cap / |N(target)|, which matches the fused sampling in
// expectation. A full list accepts by overwriting a uniformly random slot.
template <typename GraphT>
void select_turbo(const GraphT& graph, std::uint64_t seed, CandidateSet& out) {
    detail::check_selection_args(graph.n(), out);
    out.clear();
    const std::uint32_t n = graph.n();
    const std::uint32_t k = graph.k();
    const std::uint32_t cap = out.cap();
    Rng rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::uniform_int_distribution<std::uint32_t> slot(0, cap - 1);

    std::vector<std::uint32_t> new_sizes(n, 0);
    std::vector<std::uint32_t> old_sizes(n, 0);

    auto offer = [&](std::uint32_t target, std::uint32_t id, bool is_new) {
        const std::uint32_t degree = graph.reverse_degree(target);
        if (degree > cap && unit(rng) * degree >= cap) return;
        for (std::uint32_t i = 0; i < new_sizes[target]; ++i)
            if (out.new_data(target)[i] == id) return;
        for (std::uint32_t i = 0; i < old_sizes[target]; ++i)
            if (out.old_data(target)[i] == id) return;
        std::uint32_t* ids = is_new ? out.new_data(target) : out.old_data(target);
        std::uint32_t& size = is_new ? new_sizes[target] : old_sizes[target];
        if (size < cap)
            ids[size++] = id;
        else
            ids[slot(rng)] = id;
    };

    for (std::uint32_t u = 0; u < n; ++u) {
        for (std::uint32_t i = 0; i < k; ++i) {
            const NeighborEntry& e = graph.entry(u, i);
            offer(u, e.id, e.is_new);
            offer(e.id, u, e.is_new);
        }
    }

    out.set_counts(new_sizes, old_sizes);
}

inline void select_candidates(SelectionStrategy strategy, const KnnGraph& graph,
                              std::uint64_t seed, CandidateSet& out) {
    switch (strategy) {
        case SelectionStrategy::naive: select_naive(graph, seed, out); return;
        case SelectionStrategy::fused: select_fused(graph, seed, out); return;
        case SelectionStrategy::turbo: select_turbo(graph, seed, out); return;
    }
    throw std::invalid_argument("select_candidates: bad strategy");
}

} // namespace knng
