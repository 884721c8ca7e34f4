// Command-line front end: dataset generation, graph construction, recall
// measurement and reordering evaluation, all emitting CSV for external
// plotting. Every subcommand takes an explicit seed and is deterministic
// given identical flags (timings excluded).

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "knng/knng.hpp"

namespace {

void write_labels_csv(const knng::ClusterLabels& labels, const std::string& path) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot open " + path);
    os << "point,label\n";
    for (std::size_t i = 0; i < labels.labels.size(); ++i)
        os << i << ',' << labels.labels[i] << '\n';
    if (!os) throw std::runtime_error("write failed for " + path);
}

knng::ClusterLabels read_labels_csv(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("cannot open " + path);
    knng::ClusterLabels labels;
    std::string line;
    if (!std::getline(is, line) || line != "point,label")
        throw std::runtime_error("bad labels header in " + path);
    std::uint32_t max_label = 0;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        const auto comma = line.find(',');
        if (comma == std::string::npos) throw std::runtime_error("bad labels row in " + path);
        const std::uint32_t label = std::stoul(line.substr(comma + 1));
        labels.labels.push_back(label);
        max_label = std::max(max_label, label);
    }
    labels.cluster_count = max_label + 1;
    return labels;
}

knng::KnnGraph read_graph_csv(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("cannot open " + path);
    std::string line;
    if (!std::getline(is, line) || line != "node,neighbor,distance")
        throw std::runtime_error("bad graph header in " + path);
    std::vector<std::vector<knng::NeighborEntry>> rows;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        std::uint32_t node, neighbor;
        float dist;
        if (std::sscanf(line.c_str(), "%u,%u,%f", &node, &neighbor, &dist) != 3)
            throw std::runtime_error("bad graph row in " + path);
        if (node >= rows.size()) rows.resize(node + 1);
        rows[node].push_back({neighbor, dist, false});
    }
    if (rows.empty()) throw std::runtime_error("empty graph in " + path);
    const std::uint32_t k = static_cast<std::uint32_t>(rows[0].size());
    return knng::KnnGraph::from_rows(k, rows);
}

void write_file(const std::string& path, const std::function<void(std::ostream&)>& emit) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot open " + path);
    emit(os);
    if (!os) throw std::runtime_error("write failed for " + path);
}

struct BuildFlags {
    std::string dataset;
    std::uint32_t k = 20;
    std::string strategy = "turbo";
    std::string compute = "blocked";
    bool reorder = false;
    std::uint32_t max_candidates = knng::kDefaultMaxCandidates;
    std::uint32_t max_iterations = 30;
    double delta = 0.001;
    std::uint64_t seed = 0;
};

knng::RunParams to_params(const BuildFlags& flags) {
    knng::RunParams params;
    params.k = flags.k;
    params.max_candidates = flags.max_candidates;
    params.max_iterations = flags.max_iterations;
    params.termination_delta = flags.delta;
    params.strategy = knng::parse_strategy(flags.strategy);
    params.blocked_compute = flags.compute == "blocked";
    params.reorder = flags.reorder;
    params.seed = flags.seed;
    return params;
}

void print_summary(const knng::Dataset& data, const knng::RunMetrics& metrics) {
    std::printf("n=%u d=%u iters=%zu dist_evals=%llu total_s=%.3f\n", data.n(), data.d(),
                metrics.iterations.size() - 1,
                static_cast<unsigned long long>(metrics.total_dist_evals),
                metrics.total_wall_time_s);
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Approximate K-nearest-neighbor graph construction (NN-Descent)"};
    app.require_subcommand(1);

    // generate
    std::string gen_kind = "gaussian";
    std::uint32_t gen_n = 0, gen_d = 0, gen_c = 8;
    std::uint64_t gen_seed = 0;
    std::string gen_out, gen_labels_out;
    auto* generate = app.add_subcommand("generate", "Generate a synthetic dataset");
    generate->add_option("--kind", gen_kind, "gaussian | gaussian-single | clustered")
        ->check(CLI::IsMember({"gaussian", "gaussian-single", "clustered"}));
    generate->add_option("--n", gen_n, "number of points")->required();
    generate->add_option("--d", gen_d, "dimensions")->required();
    generate->add_option("--c", gen_c, "clusters (clustered kind only)");
    generate->add_option("--seed", gen_seed, "rng seed")->required();
    generate->add_option("--out", gen_out, "output dataset path")->required();
    generate->add_option("--labels-out", gen_labels_out,
                         "labels CSV path (default: <out>.labels.csv)");

    // build
    BuildFlags build_flags;
    std::string build_graph_out, build_metrics_out;
    auto* build = app.add_subcommand("build", "Build an approximate K-NNG");
    build->add_option("--dataset", build_flags.dataset, "input dataset path")->required();
    build->add_option("--k", build_flags.k, "neighbors per node");
    build->add_option("--strategy", build_flags.strategy, "naive | fused | turbo")
        ->check(CLI::IsMember({"naive", "fused", "turbo"}));
    build->add_option("--compute", build_flags.compute, "blocked | flat distance joins")
        ->check(CLI::IsMember({"blocked", "flat"}));
    build->add_flag("--reorder", build_flags.reorder, "enable greedy memory reordering");
    build->add_option("--max-candidates", build_flags.max_candidates, "candidate cap per node");
    build->add_option("--max-iterations", build_flags.max_iterations, "iteration cap");
    build->add_option("--delta", build_flags.delta, "termination threshold fraction");
    build->add_option("--seed", build_flags.seed, "rng seed")->required();
    build->add_option("--graph-out", build_graph_out, "graph CSV path");
    build->add_option("--metrics-out", build_metrics_out, "metrics CSV path");

    // recall
    std::string recall_graph, recall_dataset;
    std::uint32_t recall_k = 20;
    auto* recall_cmd = app.add_subcommand("recall", "Recall of a graph CSV vs brute force");
    recall_cmd->add_option("--graph", recall_graph, "graph CSV path")->required();
    recall_cmd->add_option("--dataset", recall_dataset, "dataset path")->required();
    recall_cmd->add_option("--k", recall_k, "neighbors per node");

    // reorder-eval
    std::string re_dataset, re_labels, re_out;
    std::uint32_t re_k = 20, re_window = 2000;
    std::uint64_t re_seed = 0;
    auto* reorder_eval = app.add_subcommand(
        "reorder-eval", "Window cluster fractions of the greedy reordering");
    reorder_eval->add_option("--dataset", re_dataset, "dataset path")->required();
    reorder_eval->add_option("--labels", re_labels, "labels CSV path")->required();
    reorder_eval->add_option("--k", re_k, "neighbors per node");
    reorder_eval->add_option("--window", re_window, "window size");
    reorder_eval->add_option("--seed", re_seed, "rng seed")->required();
    reorder_eval->add_option("--out", re_out, "output CSV path")->required();

    // sweep
    BuildFlags sweep_flags;
    std::string sweep_kind = "gaussian";
    std::vector<std::uint32_t> sweep_ns, sweep_ds;
    std::uint32_t sweep_c = 8;
    std::string sweep_out;
    auto* sweep = app.add_subcommand("sweep", "Run build over an n or d grid");
    sweep->add_option("--kind", sweep_kind, "gaussian | gaussian-single | clustered")
        ->check(CLI::IsMember({"gaussian", "gaussian-single", "clustered"}));
    sweep->add_option("--n", sweep_ns, "grid of point counts")->required();
    sweep->add_option("--d", sweep_ds, "grid of dimensions")->required();
    sweep->add_option("--c", sweep_c, "clusters (clustered kind only)");
    sweep->add_option("--k", sweep_flags.k, "neighbors per node");
    sweep->add_option("--strategy", sweep_flags.strategy, "naive | fused | turbo")
        ->check(CLI::IsMember({"naive", "fused", "turbo"}));
    sweep->add_option("--compute", sweep_flags.compute, "blocked | flat distance joins")
        ->check(CLI::IsMember({"blocked", "flat"}));
    sweep->add_flag("--reorder", sweep_flags.reorder, "enable greedy memory reordering");
    sweep->add_option("--seed", sweep_flags.seed, "rng seed")->required();
    sweep->add_option("--out", sweep_out, "concatenated metrics CSV path")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (generate->parsed()) {
            if (gen_kind != "clustered" && generate->count("--c") > 0)
                throw std::runtime_error("--c only applies to --kind clustered");
            if (gen_kind != "clustered" && !gen_labels_out.empty())
                throw std::runtime_error("--labels-out only applies to --kind clustered");
            if (gen_kind == "clustered") {
                auto [data, labels] = knng::gen_clustered(gen_n, gen_d, gen_c, gen_seed);
                knng::save_binary(data, gen_out);
                write_labels_csv(labels,
                                 gen_labels_out.empty() ? gen_out + ".labels.csv" : gen_labels_out);
            } else {
                knng::save_binary(
                    knng::gen_gaussian(gen_n, gen_d, gen_kind == "gaussian-single", gen_seed),
                    gen_out);
            }
        } else if (build->parsed()) {
            const knng::Dataset data = knng::load_binary(build_flags.dataset);
            const knng::RunResult result = knng::run(data, to_params(build_flags));
            if (!build_graph_out.empty())
                write_file(build_graph_out, [&](std::ostream& os) { result.graph.export_csv(os); });
            if (!build_metrics_out.empty())
                write_file(build_metrics_out,
                           [&](std::ostream& os) { result.metrics.write_csv(os); });
            print_summary(data, result.metrics);
        } else if (recall_cmd->parsed()) {
            const knng::Dataset data = knng::load_binary(recall_dataset);
            const knng::KnnGraph graph = read_graph_csv(recall_graph);
            if (graph.k() != recall_k)
                throw std::runtime_error("graph k does not match --k");
            const knng::ExactGraph exact = knng::brute_force_knng(data, recall_k);
            std::printf("recall=%.6f\n", knng::recall(graph, exact));
        } else if (reorder_eval->parsed()) {
            const knng::Dataset data = knng::load_binary(re_dataset);
            const knng::ClusterLabels labels = read_labels_csv(re_labels);
            knng::RunParams params;
            params.k = re_k;
            params.seed = re_seed;
            params.reorder = true;
            params.reorder_after_iteration = 1;
            params.max_iterations = 1;
            const knng::RunResult result = knng::run(data, params);
            if (!result.permutation)
                throw std::runtime_error("reordering did not run");
            const auto curves =
                knng::window_cluster_fraction(labels, *result.permutation, re_window);
            write_file(re_out, [&](std::ostream& os) {
                os << "window_start,cluster_id,fraction\n";
                for (const auto& row : curves)
                    os << row.window_start << ',' << row.cluster << ',' << row.fraction << '\n';
            });
        } else if (sweep->parsed()) {
            std::ofstream os(sweep_out);
            if (!os) throw std::runtime_error("cannot open " + sweep_out);
            os << "n,d,iteration,wall_time_s,dist_evals,changes\n";
            std::vector<double> sizes, evals;
            for (const std::uint32_t d : sweep_ds) {
                for (const std::uint32_t n : sweep_ns) {
                    knng::Dataset data =
                        sweep_kind == "clustered"
                            ? knng::gen_clustered(n, d, sweep_c, sweep_flags.seed).first
                            : knng::gen_gaussian(n, d, sweep_kind == "gaussian-single",
                                                 sweep_flags.seed);
                    const knng::RunResult result = knng::run(data, to_params(sweep_flags));
                    for (const auto& it : result.metrics.iterations)
                        os << n << ',' << d << ',' << it.iteration << ',' << it.wall_time_s << ','
                           << it.dist_evals << ',' << it.changes << '\n';
                    os << n << ',' << d << ",total," << result.metrics.total_wall_time_s << ','
                       << result.metrics.total_dist_evals << ',' << result.metrics.total_changes
                       << '\n';
                    print_summary(data, result.metrics);
                    sizes.push_back(n);
                    evals.push_back(double(result.metrics.total_dist_evals));
                }
            }
            if (!os) throw std::runtime_error("write failed for " + sweep_out);
            if (sweep_ds.size() == 1 && sizes.size() >= 3)
                std::printf("scaling_exponent=%.4f\n",
                            knng::scaling_exponent(sizes, evals));
        }
    } catch (const std::exception& ex) {
        std::cerr << "error: " << ex.what() << "\n";
        return 1;
    }
    return 0;
}
