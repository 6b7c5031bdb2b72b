#include <benchmark/benchmark.h>

#include <map>
#include <numeric>
#include <random>
#include <vector>

#include "cste/experiment.hpp"

namespace {

using namespace cste;

Topology bench_topology() {
    TopologyConfig config;
    config.terminals = 50;
    config.edge_devices = 10;
    return build_random_topology(config, 7);
}

struct TrainingFixture {
    GnnModel model;
    GnnGraph graph;
    std::vector<std::vector<double>> embeddings;
    std::vector<int> batch;
};

TrainingFixture training_fixture() {
    const Topology topo = bench_topology();
    const auto records = run_workload(topo, 2000, 100, 7);
    const InteractionGraph graph = build_graph(records, 0.6, 0.4);
    std::map<DeviceId, DeviceKind> kinds;
    for (const Device& d : topo.devices) kinds[d.id] = d.kind;

    GnnHyper hyper;
    hyper.dims = {32, 16, 24, 16};
    hyper.head_hidden = 16;

    TrainingFixture f;
    f.graph = compile_graph(graph, kinds, hyper.bins);
    f.model = init_model(hyper, 7);
    f.embeddings = index_embeddings(f.graph, gaussian_embeddings(graph.nodes, 32, 7));
    f.batch.resize(std::min<std::size_t>(128, f.graph.labeled_edges.size()));
    std::iota(f.batch.begin(), f.batch.end(), 0);
    return f;
}

TrustedTopology planning_fixture(int n_nodes) {
    std::mt19937_64 rng(99);
    std::uniform_real_distribution<double> trust(0.05, 1.0);
    std::uniform_real_distribution<double> coin(0.0, 1.0);

    TrustedTopology t;
    std::vector<DeviceId> all;
    for (int i = 0; i < n_nodes; ++i) {
        const bool is_ec = i >= n_nodes - 2;
        DeviceId node{(is_ec ? "e" : "t") + std::to_string(100 + i)};
        all.push_back(node);
        t.kinds[node] = is_ec ? DeviceKind::Edge : DeviceKind::Terminal;
        if (i > 0) t.trust[node] = trust(rng);
    }
    t.initiator = all[0];
    t.nodes = all;
    std::sort(t.nodes.begin(), t.nodes.end());
    for (int i = 0; i < n_nodes; ++i)
        for (int j = i + 1; j < n_nodes; ++j) {
            if (t.kinds[all[i]] == DeviceKind::Edge && t.kinds[all[j]] == DeviceKind::Edge)
                continue;
            if (coin(rng) < 0.4) t.links.emplace_back(std::min(all[i], all[j]),
                                                      std::max(all[i], all[j]));
        }
    std::sort(t.links.begin(), t.links.end());
    t.links.erase(std::unique(t.links.begin(), t.links.end()), t.links.end());
    return t;
}

void bm_workload(benchmark::State& state) {
    const Topology topo = bench_topology();
    for (auto _ : state) {
        auto records = run_workload(topo, static_cast<int>(state.range(0)), 100, 7);
        benchmark::DoNotOptimize(records);
    }
}
BENCHMARK(bm_workload)->Arg(500)->Arg(2000);

void bm_build_graph(benchmark::State& state) {
    const Topology topo = bench_topology();
    const auto records = run_workload(topo, 2000, 100, 7);
    for (auto _ : state) {
        auto graph = build_graph(records, 0.6, 0.4);
        benchmark::DoNotOptimize(graph);
    }
}
BENCHMARK(bm_build_graph);

void bm_forward_batch(benchmark::State& state) {
    const TrainingFixture f = training_fixture();
    for (auto _ : state) {
        double value = batch_loss(f.model, f.graph, f.embeddings, f.batch);
        benchmark::DoNotOptimize(value);
    }
}
BENCHMARK(bm_forward_batch);

void bm_gradients_batch(benchmark::State& state) {
    const TrainingFixture f = training_fixture();
    for (auto _ : state) {
        auto grads = batch_gradients(f.model, f.graph, f.embeddings, f.batch);
        benchmark::DoNotOptimize(grads);
    }
}
BENCHMARK(bm_gradients_batch);

void bm_astar(benchmark::State& state) {
    const TrustedTopology t = planning_fixture(static_cast<int>(state.range(0)));
    for (auto _ : state) {
        auto path = astar_plan(t);
        benchmark::DoNotOptimize(path);
    }
}
BENCHMARK(bm_astar)->Arg(12)->Arg(30);

void bm_oracle(benchmark::State& state) {
    const TrustedTopology t = planning_fixture(static_cast<int>(state.range(0)));
    for (auto _ : state) {
        auto path = brute_force_best(t, 14);
        benchmark::DoNotOptimize(path);
    }
}
BENCHMARK(bm_oracle)->Arg(10)->Arg(12)->Arg(14);

}  // namespace

BENCHMARK_MAIN();
