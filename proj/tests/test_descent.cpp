#include <cmath>
#include <sstream>
#include <vector>

#include "doctest.h"
#include "knng/descent.hpp"
#include "knng/oracle.hpp"
#include "test_helpers.hpp"

using namespace knng;

TEST_CASE("run parameters are validated") {
    const Dataset data = gen_gaussian(30, 8, true, 1);
    RunParams params;
    params.k = 1;
    CHECK_THROWS_AS(run(data, params), std::invalid_argument);
    params = RunParams{};
    params.termination_delta = 0.0;
    CHECK_THROWS_AS(run(data, params), std::invalid_argument);
    params = RunParams{};
    params.max_candidates = params.k - 1;
    CHECK_THROWS_AS(run(data, params), std::invalid_argument);
    params = RunParams{};
    params.k = 30; // n must exceed k
    params.max_candidates = 50;
    CHECK_THROWS_AS(run(data, params), std::invalid_argument);
}

TEST_CASE("compute_step on empty candidate sets does nothing") {
    const Dataset data = gen_gaussian(20, 8, true, 2);
    EvalCounter counter;
    KnnGraph g = KnnGraph::init_random(data, 4, 1, counter);
    const std::uint64_t evals_before = counter.dist_evals;
    CandidateSet empty(20, 10);
    CHECK(compute_step(g, empty, data, counter) == 0);
    CHECK(counter.dist_evals == evals_before);
}

TEST_CASE("three nodes converge to the exact graph in one step") {
    const Dataset data = gen_gaussian(3, 8, true, 3);
    RunParams params;
    params.k = 2;
    params.max_candidates = 2;
    params.seed = 5;
    const RunResult result = run(data, params);
    const ExactGraph exact = brute_force_knng(data, 2);
    CHECK(recall(result.graph, exact) == 1.0);
}

TEST_CASE("small instance converges to high recall for every strategy") {
    const Dataset data = gen_gaussian(30, 8, true, 4);
    const ExactGraph exact = brute_force_knng(data, 10);
    for (const SelectionStrategy strategy :
         {SelectionStrategy::naive, SelectionStrategy::fused, SelectionStrategy::turbo}) {
        RunParams params;
        params.k = 10;
        params.strategy = strategy;
        params.seed = 11;
        const RunResult result = run(data, params);
        CHECK(recall(result.graph, exact) >= 0.99);
    }
}

TEST_CASE("blocked and flat joins produce the same graph from the same state") {
    const Dataset data = gen_gaussian(400, 24, true, 19);
    EvalCounter c1, c2;
    KnnGraph blocked_graph = KnnGraph::init_random(data, 8, 7, c1);
    KnnGraph flat_graph = KnnGraph::init_random(data, 8, 7, c2);

    CandidateSet cands(400, 15);
    select_turbo(blocked_graph, 5, cands);
    compute_step(blocked_graph, cands, data, c1);
    compute_step_flat(flat_graph, cands, data, c2);

    CHECK(c1.dist_evals == c2.dist_evals);
    // bounded insertion is order-invariant, so the two paths agree up to
    // accumulation-order rounding of the kernels (an ulp or two per distance)
    std::size_t id_mismatches = 0;
    for (std::uint32_t u = 0; u < 400; ++u) {
        std::vector<std::pair<float, std::uint32_t>> a, b;
        for (const NeighborEntry& e : blocked_graph.row(u)) a.emplace_back(e.dist, e.id);
        for (const NeighborEntry& e : flat_graph.row(u)) b.emplace_back(e.dist, e.id);
        auto by_id = [](const auto& x, const auto& y) { return x.second < y.second; };
        std::sort(a.begin(), a.end(), by_id);
        std::sort(b.begin(), b.end(), by_id);
        for (std::size_t i = 0, j = 0; i < a.size() && j < b.size();) {
            if (a[i].second == b[j].second) {
                CHECK(std::abs(a[i].first - b[j].first) <= 1e-5f * a[i].first);
                ++i, ++j;
            } else {
                ++id_mismatches;
                a[i].second < b[j].second ? ++i : ++j;
            }
        }
    }
    CHECK(id_mismatches <= 3); // only heap-boundary entries within rounding may swap
}

TEST_CASE("zero iterations returns the random initialization") {
    const Dataset data = gen_gaussian(100, 8, true, 6);
    RunParams params;
    params.k = 5;
    params.max_iterations = 0;
    params.seed = 9;
    const RunResult result = run(data, params);
    REQUIRE(result.metrics.iterations.size() == 1);
    CHECK(result.metrics.iterations[0].iteration == 0);
    CHECK(result.metrics.total_dist_evals == 100 * 5);
    CHECK(result.metrics.total_changes == 0);
    CHECK_FALSE(result.permutation.has_value());
}

TEST_CASE("runs are deterministic given the seed") {
    const Dataset data = gen_gaussian(300, 8, true, 7);
    RunParams params;
    params.k = 8;
    params.seed = 31;
    const RunResult a = run(data, params);
    const RunResult b = run(data, params);
    params.seed = 32;
    const RunResult c = run(data, params);

    REQUIRE(a.metrics.iterations.size() == b.metrics.iterations.size());
    for (std::size_t i = 0; i < a.metrics.iterations.size(); ++i) {
        CHECK(a.metrics.iterations[i].dist_evals == b.metrics.iterations[i].dist_evals);
        CHECK(a.metrics.iterations[i].changes == b.metrics.iterations[i].changes);
    }
    bool identical = true;
    for (std::uint32_t u = 0; u < a.graph.n(); ++u)
        for (std::uint32_t i = 0; i < a.graph.k(); ++i)
            identical &= a.graph.entry(u, i).id == b.graph.entry(u, i).id &&
                         a.graph.entry(u, i).dist == b.graph.entry(u, i).dist;
    CHECK(identical);
    CHECK(a.metrics.total_dist_evals != c.metrics.total_dist_evals);
}

TEST_CASE("metrics totals equal per-iteration sums and runs terminate") {
    const Dataset data = gen_gaussian(500, 8, true, 8);
    RunParams params;
    params.k = 10;
    params.seed = 13;
    const RunResult result = run(data, params);
    REQUIRE(result.metrics.iterations.size() <= params.max_iterations + 1);

    double wall = 0.0;
    std::uint64_t evals = 0, changes = 0;
    for (const IterationMetrics& it : result.metrics.iterations) {
        wall += it.wall_time_s;
        evals += it.dist_evals;
        changes += it.changes;
    }
    CHECK(result.metrics.total_wall_time_s == doctest::Approx(wall));
    CHECK(result.metrics.total_dist_evals == evals);
    CHECK(result.metrics.total_changes == changes);

    // converged: the last iteration fell below delta*n*k or hit the cap
    const IterationMetrics& last = result.metrics.iterations.back();
    const bool converged = double(last.changes) < params.termination_delta * 500 * 10;
    const bool capped = result.metrics.iterations.size() == params.max_iterations + 1;
    CHECK((converged || capped));
}

TEST_CASE("change counts decrease over early iterations") {
    for (const std::uint64_t seed : {101ull, 102ull, 103ull}) {
        const Dataset data = gen_gaussian(500, 8, true, seed);
        RunParams params;
        params.k = 10;
        params.seed = seed;
        const RunResult result = run(data, params);
        const auto& rows = result.metrics.iterations;
        REQUIRE(rows.size() >= 4);
        CHECK(rows[1].changes >= rows[2].changes);
        CHECK(rows[2].changes >= rows[3].changes);
    }
}

TEST_CASE("recall never decreases across iterations") {
    const Dataset data = gen_gaussian(500, 8, true, 10);
    const ExactGraph exact = brute_force_knng(data, 10);
    RunParams params;
    params.k = 10;
    params.seed = 21;
    std::vector<double> recalls;
    run(data, params, [&](std::uint32_t, const KnnGraph& g) {
        recalls.push_back(recall(g, exact));
    });
    REQUIRE(recalls.size() >= 2);
    for (std::size_t i = 1; i < recalls.size(); ++i) CHECK(recalls[i] >= recalls[i - 1]);
    CHECK(recalls.back() >= 0.99);
}

TEST_CASE("reordered runs return the graph in original ids") {
    const auto [data, labels] = gen_clustered(600, 8, 4, 12);
    RunParams params;
    params.k = 6;
    params.seed = 3;
    params.reorder = true;
    const RunResult result = run(data, params);
    REQUIRE(result.permutation.has_value());
    CHECK(result.permutation->is_valid());

    // every stored distance must match the original rows of the two endpoints
    for (std::uint32_t u = 0; u < result.graph.n(); ++u) {
        for (const NeighborEntry& e : result.graph.row(u)) {
            EvalCounter scratch;
            CHECK(e.dist == l2_sq(data.row(u), data.row(e.id), data.row_stride(), scratch));
        }
    }
}

TEST_CASE("reordering changes the trajectory but not the quality") {
    const auto [data, labels] = gen_clustered(2000, 8, 8, 14);
    const ExactGraph exact = brute_force_knng(data, 20);
    RunParams params;
    params.k = 20;
    params.seed = 17;
    params.reorder = false;
    const double plain = recall(run(data, params).graph, exact);
    params.reorder = true;
    const double reordered = recall(run(data, params).graph, exact);
    CHECK(std::abs(plain - reordered) <= 0.01);
    CHECK(plain >= 0.99);
    CHECK(reordered >= 0.99);
}

TEST_CASE("metrics csv has the documented schema") {
    const Dataset data = gen_gaussian(100, 8, true, 15);
    RunParams params;
    params.k = 5;
    params.seed = 1;
    const RunResult result = run(data, params);
    std::ostringstream os;
    result.metrics.write_csv(os);
    std::istringstream is(os.str());
    std::string line;
    REQUIRE(std::getline(is, line));
    CHECK(line == "iteration,wall_time_s,dist_evals,changes");
    std::size_t rows = 0;
    std::string last;
    while (std::getline(is, line))
        if (!line.empty()) {
            ++rows;
            last = line;
        }
    CHECK(rows == result.metrics.iterations.size() + 1);
    CHECK(last.starts_with("total,"));
}
