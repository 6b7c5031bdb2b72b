#include <cstdint>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "cste/csvio.hpp"
#include "cste/experiment.hpp"
#include "cste/rng.hpp"

namespace fs = std::filesystem;
using namespace cste;

namespace {

struct CommonOpts {
    std::string config_path;
    std::string out_dir = "out";
    std::optional<std::uint64_t> seed;
};

void add_common(CLI::App* cmd, CommonOpts& opts) {
    cmd->add_option("--config", opts.config_path, "experiment config JSON");
    cmd->add_option("--out", opts.out_dir, "output directory")->capture_default_str();
    cmd->add_option("--seed", opts.seed, "override the config seed");
}

std::string resolve_in(const std::string& explicit_path, const CommonOpts& opts,
                       const char* artifact) {
    if (!explicit_path.empty()) return explicit_path;
    return (fs::path(opts.out_dir) / artifact).string();
}

ExperimentConfig resolve_config(const CommonOpts& opts) {
    ExperimentConfig config;
    if (!opts.config_path.empty()) config = load_config(opts.config_path);
    if (opts.seed) config.seed = *opts.seed;
    validate_config(config);
    return config;
}

std::string read_text(const fs::path& path) {
    std::string text;
    for (const auto& line : read_lines(path)) {
        text += line;
        text += '\n';
    }
    return text;
}

int run_topology(const CommonOpts& opts) {
    const ExperimentConfig config = resolve_config(opts);
    const Topology topology =
        build_random_topology(config.topology, derive_seed(config.seed, "topology"));
    save_topology(topology, fs::path(opts.out_dir) / "topology.json");
    std::cout << "topology: " << topology.devices.size() << " devices, "
              << topology.links.size() << " links -> " << opts.out_dir << "/topology.json\n";
    return 0;
}

int run_simulate(const CommonOpts& opts, const std::string& topology_path) {
    const ExperimentConfig config = resolve_config(opts);
    const Topology topology = load_topology(resolve_in(topology_path, opts, "topology.json"));
    const auto records = run_workload(topology, config.n_tasks, config.packets_per_task,
                                      derive_seed(config.seed, "workload"));
    persist_records(records, fs::path(opts.out_dir) / "records.csv");
    std::cout << "simulate: " << records.size() << " records -> " << opts.out_dir
              << "/records.csv\n";
    return 0;
}

int run_build_graph(const CommonOpts& opts, const std::string& records_path) {
    const ExperimentConfig config = resolve_config(opts);
    const auto records = load_records(resolve_in(records_path, opts, "records.csv"));
    const InteractionGraph graph =
        build_graph(records, config.alpha_plr, config.alpha_tfsr,
                    [](const std::string& w) { std::cerr << "warning: " << w << "\n"; });
    export_graph_csv(graph, fs::path(opts.out_dir) / "graph.csv");
    std::cout << "build-graph: " << graph.nodes.size() << " nodes, " << graph.edges.size()
              << " edges -> " << opts.out_dir << "/graph.csv\n";
    return 0;
}

int run_embed(const CommonOpts& opts, const std::string& graph_path) {
    const ExperimentConfig config = resolve_config(opts);
    const InteractionGraph graph = load_graph_csv(resolve_in(graph_path, opts, "graph.csv"));
    EmbeddingTable table;
    if (config.embedding_method == "gaussian") {
        table = gaussian_embeddings(graph.nodes, config.walk.dim,
                                    derive_seed(config.seed, "embedding"));
    } else {
        table = init_embeddings(graph, config.walk, derive_seed(config.seed, "embedding"),
                                [](const std::string& w) { std::cerr << "warning: " << w << "\n"; });
    }
    write_text_file(fs::path(opts.out_dir) / "embeddings.csv", embeddings_to_csv(table));
    std::cout << "embed: " << table.vectors.size() << " vectors of dim " << table.dim << " -> "
              << opts.out_dir << "/embeddings.csv\n";
    return 0;
}

int run_train(const CommonOpts& opts, const std::string& topology_path,
              const std::string& graph_path, const std::string& embeddings_path) {
    const ExperimentConfig config = resolve_config(opts);
    const Topology topology = load_topology(resolve_in(topology_path, opts, "topology.json"));
    const InteractionGraph graph = load_graph_csv(resolve_in(graph_path, opts, "graph.csv"));
    const EmbeddingTable table =
        embeddings_from_csv(read_text(resolve_in(embeddings_path, opts, "embeddings.csv")));
    std::map<DeviceId, DeviceKind> kinds;
    for (const Device& d : topology.devices) kinds[d.id] = d.kind;
    const TrainResult result =
        train(graph, kinds, table, config.gnn, derive_seed(config.seed, "training"));
    const fs::path out(opts.out_dir);
    write_text_file(out / "checkpoint.json", model_to_json(result.model));
    write_text_file(out / "metrics.csv", metrics_to_csv(result.metrics));
    write_text_file(out / "trust.csv", trust_to_csv(result.trust));
    const EpochMetrics& last = result.metrics.back();
    std::cout << "train: epoch " << last.epoch << " test_loss " << format_double(last.test_loss)
              << " test_acc " << format_double(last.test_acc) << " -> " << opts.out_dir
              << "/{checkpoint.json,metrics.csv,trust.csv}\n";
    return 0;
}

int run_plan(const CommonOpts& opts, const std::string& topology_path,
             const std::string& trust_path, const std::string& initiator,
             const std::string& planner) {
    const ExperimentConfig config = resolve_config(opts);
    const Topology topology = load_topology(resolve_in(topology_path, opts, "topology.json"));
    const TrainedTrust trust = trust_from_csv(read_text(resolve_in(trust_path, opts, "trust.csv")));

    const DeviceId init_id{initiator};
    const Device& init = topology.at(init_id);
    if (init.kind != DeviceKind::Terminal)
        throw std::runtime_error("initiator " + initiator + " is not a terminal");
    Task task;
    task.initiator = init_id;
    task.processing_density = config.processing_density;
    task.size_bits = config.task_size_mb * kBitsPerMegabyte;
    task.tf_threshold = config.tf_threshold;
    task.ec_threshold = config.ec_threshold;

    std::map<DeviceId, double> composite;
    for (const Device& d : topology.devices) {
        if (d.id == init_id) continue;
        int gate;
        if (d.kind == DeviceKind::Terminal) {
            gate = resource_trust_tf(d, task, max_link_distance(topology, d.id), config.radio);
        } else {
            gate = resource_trust_ec(d, task, config.cpu_epsilon);
        }
        auto it = trust.values.find({init_id, d.id});
        composite[d.id] = composite_trust(it == trust.values.end() ? 0.0 : it->second, gate);
    }

    TrustedTopology trusted;
    try {
        trusted = filter_trusted(topology, composite, task);
    } catch (const NoTrustedEcError& e) {
        std::cerr << "plan: " << e.what() << "\n";
        return 1;
    }
    trusted = local_trusted(trusted, config.planner_cap);

    std::optional<PathResult> result;
    if (planner == "cste")
        result = astar_plan(trusted);
    else if (planner == "greedy")
        result = greedy_plan(trusted);
    else
        result = brute_force_best(reduce_trusted(trusted, config.oracle_cap), config.oracle_cap);
    if (!result) {
        std::cerr << "plan: no path from " << initiator << " to a trusted edge device\n";
        return 1;
    }

    write_text_file(fs::path(opts.out_dir) / "path.json", path_result_to_json(*result));
    std::cout << "plan:";
    for (const DeviceId& id : result->path) std::cout << " " << id.value;
    std::cout << "\navg trust: " << format_double(result->avg_trust) << "\n";
    return 0;
}

int run_full_pipeline(const CommonOpts& opts) {
    const ExperimentConfig config = resolve_config(opts);
    save_config(config, fs::path(opts.out_dir) / "config.json");
    const PipelineArtifacts artifacts = run_pipeline(config, opts.out_dir);
    int succeeded = 0;
    for (const TaskOutcome& row : artifacts.summary) succeeded += row.success;
    std::cout << "pipeline: " << succeeded << "/" << artifacts.summary.size()
              << " evaluation tasks planned -> " << opts.out_dir << "\n";
    return 0;
}

int run_sweep_cmd(const CommonOpts& opts, const std::string& variable) {
    const ExperimentConfig config = resolve_config(opts);
    save_config(config, fs::path(opts.out_dir) / "config.json");
    const auto rows = variable == "plr" ? sweep_plr(config, opts.out_dir)
                                        : sweep_tfsr(config, opts.out_dir);
    std::cout << "sweep-" << variable << ": " << rows.size() << " rows -> " << opts.out_dir
              << "/sweep_" << variable << ".csv\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"trust-aware collaboration path planning for edge networks"};
    app.require_subcommand(1);

    CommonOpts opts;
    std::string topology_path, records_path, graph_path, embeddings_path, trust_path;
    std::string initiator;
    std::string planner = "cste";

    CLI::App* topology = app.add_subcommand("topology", "generate a random deployment");
    add_common(topology, opts);

    CLI::App* simulate = app.add_subcommand("simulate", "run the synthetic workload");
    add_common(simulate, opts);
    simulate->add_option("--topology", topology_path, "topology JSON (default <out>/topology.json)");

    CLI::App* build_graph_cmd =
        app.add_subcommand("build-graph", "extract the direct-trust graph from records");
    add_common(build_graph_cmd, opts);
    build_graph_cmd->add_option("--records", records_path,
                                "interaction records CSV (default <out>/records.csv)");

    CLI::App* embed = app.add_subcommand("embed", "compute node embeddings");
    add_common(embed, opts);
    embed->add_option("--graph", graph_path, "trust graph CSV (default <out>/graph.csv)");

    CLI::App* train_cmd = app.add_subcommand("train", "train the trust prediction model");
    add_common(train_cmd, opts);
    train_cmd->add_option("--topology", topology_path,
                          "topology JSON (default <out>/topology.json)");
    train_cmd->add_option("--graph", graph_path, "trust graph CSV (default <out>/graph.csv)");
    train_cmd->add_option("--embeddings", embeddings_path,
                          "embeddings CSV (default <out>/embeddings.csv)");

    CLI::App* plan = app.add_subcommand("plan", "plan a collaboration path for one task");
    add_common(plan, opts);
    plan->add_option("--topology", topology_path,
                     "topology JSON (default <out>/topology.json)");
    plan->add_option("--trust", trust_path, "predicted trust CSV (default <out>/trust.csv)");
    plan->add_option("--initiator", initiator, "initiating terminal id")->required();
    plan->add_option("--planner", planner, "cste, greedy or oracle")
        ->check(CLI::IsMember({"cste", "greedy", "oracle"}))
        ->capture_default_str();

    CLI::App* pipeline = app.add_subcommand("pipeline", "run the full evaluation pipeline");
    add_common(pipeline, opts);

    CLI::App* sp = app.add_subcommand("sweep-plr", "trust vs injected packet loss rate");
    add_common(sp, opts);

    CLI::App* st = app.add_subcommand("sweep-tfsr", "trust vs injected forwarding success rate");
    add_common(st, opts);

    CLI11_PARSE(app, argc, argv);

    const auto parsed = app.get_subcommands();
    const std::string stage = parsed.empty() ? "error" : parsed.front()->get_name();
    try {
        if (topology->parsed()) return run_topology(opts);
        if (simulate->parsed()) return run_simulate(opts, topology_path);
        if (build_graph_cmd->parsed()) return run_build_graph(opts, records_path);
        if (embed->parsed()) return run_embed(opts, graph_path);
        if (train_cmd->parsed())
            return run_train(opts, topology_path, graph_path, embeddings_path);
        if (plan->parsed()) return run_plan(opts, topology_path, trust_path, initiator, planner);
        if (pipeline->parsed()) return run_full_pipeline(opts);
        if (sp->parsed()) return run_sweep_cmd(opts, "plr");
        if (st->parsed()) return run_sweep_cmd(opts, "tfsr");
    } catch (const std::exception& e) {
        std::cerr << stage << ": " << e.what() << "\n";
        return 1;
    }
    return 0;
}
