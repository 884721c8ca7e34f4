#pragma once

#include <chrono>
#include <cstdint>
#include <functional>
#include <optional>
#include <ostream>
#include <vector>

#include "knng/dataset.hpp"
#include "knng/distance.hpp"
#include "knng/graph.hpp"
#include "knng/reorder.hpp"
#include "knng/selection.hpp"

namespace knng {

struct RunParams {
    std::uint32_t k = 20;
    std::uint32_t max_candidates = kDefaultMaxCandidates;
    double termination_delta = 0.001;
    std::uint32_t max_iterations = 30;
    SelectionStrategy strategy = SelectionStrategy::turbo;
    bool blocked_compute = true; // false: per-pair joins, kept for benchmarking
    bool reorder = false;
    std::uint32_t reorder_after_iteration = 1;
    std::uint64_t seed = 0;

    void validate() const {
        if (k < 2) throw std::invalid_argument("RunParams: k must be at least 2");
        if (max_candidates < k)
            throw std::invalid_argument("RunParams: max_candidates must be at least k");
        if (!(termination_delta > 0.0 && termination_delta < 1.0))
            throw std::invalid_argument("RunParams: termination_delta must be in (0,1)");
    }
};

struct IterationMetrics {
    std::uint32_t iteration; // 0 is the random initialization
    double wall_time_s;
    std::uint64_t dist_evals;
    std::uint64_t changes;
};

struct RunMetrics {
    std::vector<IterationMetrics> iterations;
    double total_wall_time_s = 0.0;
    std::uint64_t total_dist_evals = 0;
    std::uint64_t total_changes = 0;
    std::optional<double> final_recall;

    // `iteration,wall_time_s,dist_evals,changes` rows plus a totals row.
    void write_csv(std::ostream& os) const {
        os << "iteration,wall_time_s,dist_evals,changes\n";
        char buf[128];
        for (const IterationMetrics& it : iterations) {
            const int len = std::snprintf(buf, sizeof buf, "%u,%.6f,%llu,%llu\n", it.iteration,
                                          it.wall_time_s,
                                          static_cast<unsigned long long>(it.dist_evals),
                                          static_cast<unsigned long long>(it.changes));
            os.write(buf, len);
        }
        const int len = std::snprintf(buf, sizeof buf, "total,%.6f,%llu,%llu\n", total_wall_time_s,
                                      static_cast<unsigned long long>(total_dist_evals),
                                      static_cast<unsigned long long>(total_changes));
        os.write(buf, len);
    }
};

struct RunResult {
    KnnGraph graph;
    RunMetrics metrics;
    std::optional<Permutation> permutation;
};

// Local join over one node's candidates: all new x new unordered pairs plus
// all new x old pairs, distances through the blocked kernels, each distance
// offered to both endpoints. The candidates' current worst distances are
// gathered once per node, so the common rejection compares against a local
// copy; the copies can only be stale upwards and try_insert re-checks.
// Returns the number of successful inserts.
inline std::uint64_t compute_step(KnnGraph& graph, const CandidateSet& cands,
                                  const Dataset& data, EvalCounter& counter) {
    std::uint64_t changes = 0;
    const std::uint32_t stride = data.row_stride();
    std::vector<const float*> new_rows;
    std::vector<const float*> old_rows;
    std::vector<float> new_max;
    std::vector<float> old_max;
    float tile[kBlockRows * kBlockRows];

    for (std::uint32_t u = 0; u < graph.n(); ++u) {
        const auto new_ids = cands.new_ids(u);
        if (new_ids.empty()) continue;
        const auto old_ids = cands.old_ids(u);

        new_rows.clear();
        new_max.clear();
        for (const std::uint32_t id : new_ids) {
            new_rows.push_back(data.row(id));
            new_max.push_back(graph.max_dist(id));
        }

        if (new_ids.size() >= 2) {
            mutual_block_distances(
                std::span<const float* const>(new_rows), stride, counter,
                [&](std::uint32_t i, std::uint32_t j, float dist) {
                    if (dist < new_max[i] && graph.try_insert(new_ids[i], new_ids[j], dist)) {
                        new_max[i] = graph.max_dist(new_ids[i]);
                        ++changes;
                    }
                    if (dist < new_max[j] && graph.try_insert(new_ids[j], new_ids[i], dist)) {
                        new_max[j] = graph.max_dist(new_ids[j]);
                        ++changes;
                    }
                });
        }

        if (old_ids.empty()) continue;
        old_rows.clear();
        old_max.clear();
        for (const std::uint32_t id : old_ids) {
            old_rows.push_back(data.row(id));
            old_max.push_back(graph.max_dist(id));
        }

        for (std::size_t i0 = 0; i0 < new_ids.size(); i0 += kBlockRows) {
            const std::size_t na = std::min(kBlockRows, new_ids.size() - i0);
            for (std::size_t j0 = 0; j0 < old_ids.size(); j0 += kBlockRows) {
                const std::size_t nb = std::min(kBlockRows, old_ids.size() - j0);
                block_l2_sq(std::span<const float* const>(new_rows).subspan(i0, na),
                            std::span<const float* const>(old_rows).subspan(j0, nb), stride,
                            tile, counter);
                for (std::size_t a = 0; a < na; ++a) {
                    for (std::size_t b = 0; b < nb; ++b) {
                        const std::uint32_t x = new_ids[i0 + a];
                        const std::uint32_t y = old_ids[j0 + b];
                        const float dist = tile[a * nb + b];
                        if (dist < new_max[i0 + a] && graph.try_insert(x, y, dist)) {
                            new_max[i0 + a] = graph.max_dist(x);
                            ++changes;
                        }
                        if (dist < old_max[j0 + b] && graph.try_insert(y, x, dist)) {
                            old_max[j0 + b] = graph.max_dist(y);
                            ++changes;
                        }
                    }
                }
            }
        }
    }
    return changes;
}

// The same join without blocking: every pair costs its own kernel call, so
// each row is re-read once per distance instead of once per tile. Retained as
// the baseline for benchmarking the blocked path; the resulting graphs agree
// because bounded insertion is order-invariant for distinct distances.
inline std::uint64_t compute_step_flat(KnnGraph& graph, const CandidateSet& cands,
                                       const Dataset& data, EvalCounter& counter) {
    std::uint64_t changes = 0;
    const std::uint32_t stride = data.row_stride();
    for (std::uint32_t u = 0; u < graph.n(); ++u) {
        const auto new_ids = cands.new_ids(u);
        if (new_ids.empty()) continue;
        const auto old_ids = cands.old_ids(u);
        for (std::size_t i = 0; i < new_ids.size(); ++i) {
            for (std::size_t j = i + 1; j < new_ids.size(); ++j) {
                const float dist =
                    l2_sq(data.row(new_ids[i]), data.row(new_ids[j]), stride, counter);
                changes += graph.try_insert(new_ids[i], new_ids[j], dist);
                changes += graph.try_insert(new_ids[j], new_ids[i], dist);
            }
            for (const std::uint32_t old_id : old_ids) {
                const float dist = l2_sq(data.row(new_ids[i]), data.row(old_id), stride, counter);
                changes += graph.try_insert(new_ids[i], old_id, dist);
                changes += graph.try_insert(old_id, new_ids[i], dist);
            }
        }
    }
    return changes;
}

using IterationObserver = std::function<void(std::uint32_t iteration, const KnnGraph&)>;

// Full NN-Descent run: random initialization, then selection + local join
// until the change count falls below termination_delta*n*k or the iteration
// cap is reached. With reordering enabled, the greedy heuristic runs once
// after the configured iteration and the remaining iterations operate on the
// permuted layout; the returned graph is always expressed in original ids.
// The observer, when set, sees the graph after each iteration in the run's
// current internal labeling.
inline RunResult run(const Dataset& data, const RunParams& params,
                     const IterationObserver& observer = {}) {
    using clock = std::chrono::steady_clock;
    params.validate();
    if (data.n() <= params.k) throw std::invalid_argument("run: need n > k");

    RunResult result;
    EvalCounter counter;
    Rng master(params.seed);

    auto t0 = clock::now();
    const std::uint64_t init_seed = master();
    KnnGraph graph = KnnGraph::init_random(data, params.k, init_seed, counter);
    auto t1 = clock::now();
    result.metrics.iterations.push_back(
        {0, std::chrono::duration<double>(t1 - t0).count(), counter.dist_evals, 0});

    Dataset permuted_data;
    const Dataset* active = &data;
    std::optional<Permutation> layout;

    CandidateSet cands(data.n(), params.max_candidates);
    const double change_threshold =
        params.termination_delta * static_cast<double>(data.n()) * params.k;
    std::uint64_t evals_before = counter.dist_evals;

    for (std::uint32_t iter = 1; iter <= params.max_iterations; ++iter) {
        t0 = clock::now();
        const std::uint64_t iter_seed = master();
        graph.reset_change_count();

        select_candidates(params.strategy, graph, iter_seed, cands);
        for (std::uint32_t u = 0; u < graph.n(); ++u) graph.flag_consumed(u, cands.new_ids(u));
        const std::uint64_t changes = params.blocked_compute
                                          ? compute_step(graph, cands, *active, counter)
                                          : compute_step_flat(graph, cands, *active, counter);

        if (params.reorder && !layout && iter == params.reorder_after_iteration) {
            layout = greedy_cluster(graph);
            permuted_data = apply_permutation(*active, *layout);
            active = &permuted_data;
            graph.remap(layout->sigma);
        }

        t1 = clock::now();
        result.metrics.iterations.push_back({iter, std::chrono::duration<double>(t1 - t0).count(),
                                             counter.dist_evals - evals_before, changes});
        evals_before = counter.dist_evals;
        if (observer) observer(iter, graph);
        if (static_cast<double>(changes) < change_threshold) break;
    }

    if (layout) graph.remap(layout->sigma_inv);

    for (const IterationMetrics& it : result.metrics.iterations) {
        result.metrics.total_wall_time_s += it.wall_time_s;
        result.metrics.total_dist_evals += it.dist_evals;
        result.metrics.total_changes += it.changes;
    }
    result.graph = std::move(graph);
    result.permutation = std::move(layout);
    return result;
}

} // namespace knng
