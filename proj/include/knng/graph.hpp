#pragma once

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <ostream>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

#include "knng/dataset.hpp"
#include "knng/distance.hpp"

namespace knng {

struct NeighborEntry {
    std::uint32_t id;
    float dist;   // squared distance
    bool is_new;  // not yet used in a join
};

// The mutable K-NNG approximation: one bounded max-heap of k entries per node,
// largest distance at the root, plus a per-node count of how large its
// neighborhood N(u) = adj(u) + reverse-adj(u) currently is. The neighborhood
// counts are maintained incrementally on every insert/evict because the
// heapless sampling strategy reads them on its single pass.
class KnnGraph {
public:
    KnnGraph() = default;

    // k distinct uniform random neighbors per node, true squared distances
    // computed through the counter, all entries flagged new.
    static KnnGraph init_random(const Dataset& data, std::uint32_t k, std::uint64_t seed,
                                EvalCounter& counter) {
        const std::uint32_t n = data.n();
        if (k < 2) throw std::invalid_argument("init_random: k must be at least 2");
        if (k >= n) throw std::invalid_argument("init_random: k must be smaller than n");

        KnnGraph g;
        g.k_ = k;
        g.n_ = n;
        g.entries_.resize(std::size_t(n) * k);
        g.reverse_degree_.assign(n, k); // forward edges
        g.row_max_.resize(n);

        Rng rng(seed);
        std::uniform_int_distribution<std::uint32_t> pick(0, n - 1);
        std::vector<std::uint32_t> chosen(k);
        for (std::uint32_t u = 0; u < n; ++u) {
            for (std::uint32_t i = 0; i < k; ++i) {
                std::uint32_t v;
                bool fresh;
                do {
                    v = pick(rng);
                    fresh = v != u;
                    for (std::uint32_t j = 0; fresh && j < i; ++j) fresh = chosen[j] != v;
                } while (!fresh);
                chosen[i] = v;
                const float dist = l2_sq(data.row(u), data.row(v), data.row_stride(), counter);
                g.entry_at(u, i) = NeighborEntry{v, dist, true};
                ++g.reverse_degree_[v];
            }
            g.heapify_row(u);
        }
        return g;
    }

    // Builds a graph from explicit per-node neighbor lists (CSV import, tests).
    static KnnGraph from_rows(std::uint32_t k, const std::vector<std::vector<NeighborEntry>>& rows) {
        const std::uint32_t n = static_cast<std::uint32_t>(rows.size());
        if (k < 2 || k >= n) throw std::invalid_argument("from_rows: need 2 <= k < n");
        KnnGraph g;
        g.k_ = k;
        g.n_ = n;
        g.entries_.resize(std::size_t(n) * k);
        g.reverse_degree_.assign(n, k);
        g.row_max_.resize(n);
        for (std::uint32_t u = 0; u < n; ++u) {
            if (rows[u].size() != k) throw std::invalid_argument("from_rows: row size != k");
            for (std::uint32_t i = 0; i < k; ++i) {
                const NeighborEntry& e = rows[u][i];
                if (e.id == u) throw std::invalid_argument("from_rows: self loop");
                if (e.id >= n) throw std::invalid_argument("from_rows: id out of range");
                for (std::uint32_t j = 0; j < i; ++j)
                    if (rows[u][j].id == e.id) throw std::invalid_argument("from_rows: duplicate id");
                g.entry_at(u, i) = e;
                ++g.reverse_degree_[e.id];
            }
            g.heapify_row(u);
        }
        return g;
    }

    std::uint32_t n() const { return n_; }
    std::uint32_t k() const { return k_; }

    std::span<const NeighborEntry> row(std::uint32_t u) const {
        return {entries_.data() + std::size_t(u) * k_, k_};
    }

    const NeighborEntry& entry(std::uint32_t u, std::uint32_t i) const {
        return entries_[std::size_t(u) * k_ + i];
    }

    // |N(u)| = k forward edges plus the number of heaps naming u.
    std::uint32_t reverse_degree(std::uint32_t u) const { return reverse_degree_[u]; }

    float max_dist(std::uint32_t u) const { return row_max_[u]; }

    // Inserts v into u's heap iff it strictly improves on the current worst
    // entry and is not already present. Evicts the worst entry and keeps the
    // neighborhood counts of both the evicted id and v current. The worst
    // distance per row is cached in a flat array so the common rejection never
    // touches the heap storage.
    bool try_insert(std::uint32_t u, std::uint32_t v, float dist) {
        if (dist >= row_max_[u] || u == v) return false;
        NeighborEntry* heap = entries_.data() + std::size_t(u) * k_;
        for (std::uint32_t i = 0; i < k_; ++i)
            if (heap[i].id == v) return false;

        --reverse_degree_[heap[0].id];
        ++reverse_degree_[v];
        heap[0] = NeighborEntry{v, dist, true};
        sift_down(heap, 0);
        row_max_[u] = heap[0].dist;
        ++changes_;
        return true;
    }

    // Marks the listed entries of u's heap as consumed; ids not present are
    // skipped, nothing else changes.
    void flag_consumed(std::uint32_t u, std::span<const std::uint32_t> sampled_new_ids) {
        NeighborEntry* heap = entries_.data() + std::size_t(u) * k_;
        for (const std::uint32_t id : sampled_new_ids) {
            for (std::uint32_t i = 0; i < k_; ++i) {
                if (heap[i].id == id) {
                    heap[i].is_new = false;
                    break;
                }
            }
        }
    }

    std::uint64_t changes_in_last_pass() const { return changes_; }
    void reset_change_count() { changes_ = 0; }

    // Moves row u to row sigma[u] and renames every stored id v to sigma[v].
    // Heap order is keyed on distances only, so it survives the renaming.
    void remap(std::span<const std::uint32_t> sigma) {
        if (sigma.size() != n_) throw std::invalid_argument("remap: permutation size mismatch");
        std::vector<NeighborEntry> remapped(entries_.size());
        std::vector<std::uint32_t> degrees(n_);
        std::vector<float> maxima(n_);
        for (std::uint32_t u = 0; u < n_; ++u) {
            NeighborEntry* dst = remapped.data() + std::size_t(sigma[u]) * k_;
            const NeighborEntry* src = entries_.data() + std::size_t(u) * k_;
            for (std::uint32_t i = 0; i < k_; ++i)
                dst[i] = NeighborEntry{sigma[src[i].id], src[i].dist, src[i].is_new};
            degrees[sigma[u]] = reverse_degree_[u];
            maxima[sigma[u]] = row_max_[u];
        }
        entries_ = std::move(remapped);
        reverse_degree_ = std::move(degrees);
        row_max_ = std::move(maxima);
    }

    // Lines "node,neighbor,distance" sorted by node then ascending distance.
    void export_csv(std::ostream& os) const {
        os << "node,neighbor,distance\n";
        std::vector<NeighborEntry> sorted(k_);
        for (std::uint32_t u = 0; u < n_; ++u) {
            const auto r = row(u);
            sorted.assign(r.begin(), r.end());
            std::sort(sorted.begin(), sorted.end(), [](const NeighborEntry& a, const NeighborEntry& b) {
                return a.dist != b.dist ? a.dist < b.dist : a.id < b.id;
            });
            for (const NeighborEntry& e : sorted) {
                char buf[64];
                const int len = std::snprintf(buf, sizeof buf, "%u,%u,%.9g\n", u, e.id, e.dist);
                os.write(buf, len);
            }
        }
    }

private:
    NeighborEntry& entry_at(std::uint32_t u, std::uint32_t i) {
        return entries_[std::size_t(u) * k_ + i];
    }

    void heapify_row(std::uint32_t u) {
        NeighborEntry* heap = entries_.data() + std::size_t(u) * k_;
        for (std::uint32_t i = k_ / 2; i-- > 0;) sift_down(heap, i);
        row_max_[u] = heap[0].dist;
    }

    void sift_down(NeighborEntry* heap, std::uint32_t i) {
        const NeighborEntry moving = heap[i];
        while (true) {
            std::uint32_t largest = i;
            const std::uint32_t left = 2 * i + 1;
            const std::uint32_t right = left + 1;
            float largest_dist = moving.dist;
            if (left < k_ && heap[left].dist > largest_dist) {
                largest = left;
                largest_dist = heap[left].dist;
            }
            if (right < k_ && heap[right].dist > largest_dist) largest = right;
            if (largest == i) break;
            heap[i] = heap[largest];
            i = largest;
        }
        heap[i] = moving;
    }

    std::uint32_t k_ = 0;
    std::uint32_t n_ = 0;
    std::vector<NeighborEntry> entries_;
    std::vector<std::uint32_t> reverse_degree_;
    std::vector<float> row_max_; // cached heap root distance per row
    std::uint64_t changes_ = 0;
};

} // namespace knng
