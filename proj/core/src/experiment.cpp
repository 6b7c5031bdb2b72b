#include "cste/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <set>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "cste/csvio.hpp"
#include "cste/rng.hpp"

namespace cste {

namespace {

namespace fs = std::filesystem;

template <typename F>
auto stage(const char* name, F&& f) {
    try {
        return f();
    } catch (const std::exception& e) {
        throw std::runtime_error(std::string("stage ") + name + ": " + e.what());
    }
}

nlohmann::json range_to_json(const ValueRange& r) {
    return nlohmann::json{{"lo", r.lo}, {"hi", r.hi}};
}

ValueRange range_from_json(const nlohmann::json& j) {
    return ValueRange{j.at("lo").get<double>(), j.at("hi").get<double>()};
}

std::vector<DeviceId> terminal_ids(const Topology& topology) {
    std::vector<DeviceId> out;
    for (const Device& d : topology.devices)
        if (d.kind == DeviceKind::Terminal) out.push_back(d.id);
    return out;
}

/// Seeded fixed subset of terminals whose behavior the sweep overrides.
std::vector<DeviceId> affected_terminals(const Topology& topology, double fraction,
                                         std::uint64_t seed) {
    std::vector<DeviceId> terminals = terminal_ids(topology);
    Rng rng = make_rng(derive_seed(seed, "affected"));
    std::shuffle(terminals.begin(), terminals.end(), rng);
    const auto k = static_cast<std::size_t>(
        std::lround(fraction * static_cast<double>(terminals.size())));
    terminals.resize(std::min(k, terminals.size()));
    std::sort(terminals.begin(), terminals.end());
    return terminals;
}

EmbeddingTable make_embeddings(const ExperimentConfig& config, const InteractionGraph& graph,
                               std::uint64_t seed) {
    if (config.embedding_method == "gaussian")
        return gaussian_embeddings(graph.nodes, config.walk.dim, seed);
    return init_embeddings(graph, config.walk, seed);
}

Task make_eval_task(const ExperimentConfig& config, const DeviceId& initiator) {
    Task task;
    task.initiator = initiator;
    task.processing_density = config.processing_density;
    task.size_bits = config.task_size_mb * kBitsPerMegabyte;
    task.tf_threshold = config.tf_threshold;
    task.ec_threshold = config.ec_threshold;
    return task;
}

void failure_rows(std::vector<TaskOutcome>& rows, int task, const std::string& note,
                  bool all_planners) {
    rows.push_back(TaskOutcome{task, "cste", 0, 0.0, 0, note});
    if (all_planners) {
        rows.push_back(TaskOutcome{task, "greedy", 0, 0.0, 0, note});
        rows.push_back(TaskOutcome{task, "oracle", 0, 0.0, 0, note});
    }
}

TaskOutcome outcome_from(int task, const std::string& planner,
                         const std::optional<PathResult>& result, const std::string& extra) {
    TaskOutcome row;
    row.task = task;
    row.planner = planner;
    if (result) {
        row.path_len = static_cast<int>(result->path.size());
        row.avg_trust = result->avg_trust;
        row.success = 1;
        row.note = extra;
    } else {
        row.success = 0;
        row.note = extra.empty() ? "no path" : extra + "; no path";
    }
    return row;
}

/// Plans the evaluation batch against one trained model. Each task draws a
/// fresh initiator; resource gates use the device's longest topology link as
/// the unknown next-hop distance.
std::vector<TaskOutcome> evaluate_tasks(const ExperimentConfig& config,
                                        const Topology& topology, const TrainedTrust& trust,
                                        std::uint64_t seed, bool all_planners) {
    const std::vector<DeviceId> terminals = terminal_ids(topology);
    if (terminals.empty()) throw std::invalid_argument("evaluation: topology has no terminals");

    std::vector<TaskOutcome> rows;
    for (int t = 0; t < config.eval_tasks; ++t) {
        Rng rng = make_rng(derive_seed(seed, "task:" + std::to_string(t)));
        std::uniform_int_distribution<std::size_t> pick(0, terminals.size() - 1);
        const DeviceId initiator = terminals[pick(rng)];
        const Task task = make_eval_task(config, initiator);

        std::map<DeviceId, double> composite;
        for (const Device& d : topology.devices) {
            if (d.id == initiator) continue;
            int gate;
            if (d.kind == DeviceKind::Terminal) {
                gate = resource_trust_tf(d, task, max_link_distance(topology, d.id),
                                         config.radio);
            } else {
                gate = resource_trust_ec(d, task, config.cpu_epsilon);
            }
            auto it = trust.values.find({initiator, d.id});
            const double t_his = it == trust.values.end() ? 0.0 : it->second;
            composite[d.id] = composite_trust(t_his, gate);
        }

        TrustedTopology trusted;
        try {
            trusted = filter_trusted(topology, composite, task);
        } catch (const NoTrustedEcError&) {
            failure_rows(rows, t, "no trusted EC", all_planners);
            continue;
        }
        trusted = local_trusted(trusted, config.planner_cap);

        rows.push_back(outcome_from(t, "cste", astar_plan(trusted), ""));
        if (all_planners) {
            rows.push_back(outcome_from(t, "greedy", greedy_plan(trusted), ""));
            const TrustedTopology reduced = reduce_trusted(trusted, config.oracle_cap);
            const bool was_reduced = reduced.nodes.size() < trusted.nodes.size();
            rows.push_back(outcome_from(t, "oracle",
                                        brute_force_best(reduced, config.oracle_cap),
                                        was_reduced ? "reduced" : ""));
        }
    }
    return rows;
}

struct TrainedPoint {
    InteractionGraph graph;
    TrainResult trained;
};

/// Workload, direct-trust extraction, embedding, and training for one
/// behavior configuration.
TrainedPoint train_on_topology(const ExperimentConfig& config, const Topology& topology,
                               std::uint64_t seed) {
    TrainedPoint point;
    const auto records = stage("workload", [&] {
        return run_workload(topology, config.n_tasks, config.packets_per_task,
                            derive_seed(seed, "workload"));
    });
    point.graph = stage("trust-graph", [&] {
        return build_graph(records, config.alpha_plr, config.alpha_tfsr);
    });
    const auto embeddings = stage("embedding", [&] {
        return make_embeddings(config, point.graph, derive_seed(seed, "embedding"));
    });
    std::map<DeviceId, DeviceKind> kinds;
    for (const Device& d : topology.devices) kinds[d.id] = d.kind;
    point.trained = stage("training", [&] {
        return train(point.graph, kinds, embeddings, config.gnn, derive_seed(seed, "training"));
    });
    return point;
}

double mean_of(const std::vector<double>& xs) {
    double s = 0.0;
    for (double x : xs) s += x;
    return s / static_cast<double>(xs.size());
}

double std_of(const std::vector<double>& xs, double mean) {
    double s = 0.0;
    for (double x : xs) s += (x - mean) * (x - mean);
    return std::sqrt(s / static_cast<double>(xs.size()));
}

std::vector<SweepRow> run_sweep(const ExperimentConfig& config, const fs::path& out_dir,
                                const std::string& variable, const std::vector<double>& grid) {
    validate_config(config);
    const Topology base = stage("topology", [&] {
        return build_random_topology(config.topology, derive_seed(config.seed, "topology"));
    });
    const std::vector<DeviceId> affected =
        affected_terminals(base, config.sweep.affected_fraction, config.seed);

    const std::vector<std::string> planners{"cste", "greedy", "oracle"};
    std::vector<SweepRow> rows;
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const double x = grid[i];
        Topology topology = base;
        for (Device& d : topology.devices) {
            if (!std::binary_search(affected.begin(), affected.end(), d.id)) continue;
            if (variable == "plr")
                d.behavior.true_plr = x;
            else
                d.behavior.true_tfsr = x;
        }
        // common random numbers: every grid point replays the same workload,
        // init, and evaluation streams, so the curve isolates the behavior
        // change instead of resampling noise
        const TrainedPoint point = train_on_topology(config, topology, config.seed);
        const auto outcomes = stage("planning", [&] {
            return evaluate_tasks(config, topology, point.trained.trust,
                                  derive_seed(config.seed, "evaluation"), true);
        });
        for (const std::string& planner : planners) {
            std::vector<double> values;
            for (const TaskOutcome& row : outcomes)
                if (row.planner == planner) values.push_back(row.avg_trust);
            SweepRow out;
            out.x = x;
            out.planner = planner;
            out.mean_avg_trust = mean_of(values);
            out.std_dev = std_of(values, out.mean_avg_trust);
            rows.push_back(std::move(out));
        }
    }
    write_text_file(out_dir / ("sweep_" + variable + ".csv"), sweep_to_csv(variable, rows));
    return rows;
}

}  // namespace

std::vector<double> default_plr_grid() {
    std::vector<double> grid;
    for (int i = 0; i <= 8; ++i) grid.push_back(static_cast<double>(i) * 0.02);
    return grid;
}

std::vector<double> default_tfsr_grid() {
    std::vector<double> grid;
    for (int i = 0; i <= 10; ++i) grid.push_back(0.5 + static_cast<double>(i) * 0.05);
    return grid;
}

GnnHyper experiment_gnn_defaults() {
    GnnHyper hyper;
    hyper.trust_mode = TrustMode::ExpectedBin;
    return hyper;
}

void validate_config(const ExperimentConfig& config) {
    if (config.n_tasks < 1) throw std::invalid_argument("config: n_tasks must be >= 1");
    if (config.packets_per_task < 1)
        throw std::invalid_argument("config: packets_per_task must be >= 1");
    if (config.alpha_plr < 0.0 || config.alpha_plr > 1.0 || config.alpha_tfsr < 0.0 ||
        config.alpha_tfsr > 1.0 ||
        std::abs(config.alpha_plr + config.alpha_tfsr - 1.0) > 1e-9)
        throw std::invalid_argument("config: trust weights must be in [0,1] and sum to 1");
    if (config.embedding_method != "node2vec" && config.embedding_method != "gaussian")
        throw std::invalid_argument("config: unknown embedding method " +
                                    config.embedding_method);
    if (config.walk.dim != config.gnn.dims.front())
        throw std::invalid_argument("config: embedding dim must match the model input dim");
    if (config.processing_density <= 0.0 || config.task_size_mb <= 0.0)
        throw std::invalid_argument("config: task size and density must be positive");
    if (config.tf_threshold < 0.0 || config.ec_threshold < 0.0)
        throw std::invalid_argument("config: thresholds must be >= 0");
    if (config.eval_tasks < 1) throw std::invalid_argument("config: eval_tasks must be >= 1");
    if (config.planner_cap < 2)
        throw std::invalid_argument("config: planner_cap must be >= 2");
    if (config.oracle_cap < 2) throw std::invalid_argument("config: oracle_cap must be >= 2");
    if (config.sweep.variable != "plr" && config.sweep.variable != "tfsr")
        throw std::invalid_argument("config: sweep variable must be plr or tfsr");
    for (double x : config.sweep.grid)
        if (x < 0.0 || x > 1.0)
            throw std::invalid_argument("config: sweep grid values must be in [0,1]");
    if (config.sweep.affected_fraction < 0.0 || config.sweep.affected_fraction > 1.0)
        throw std::invalid_argument("config: affected fraction must be in [0,1]");
}

std::string experiment_config_to_json(const ExperimentConfig& c) {
    nlohmann::json j;
    j["seed"] = c.seed;
    j["topology"] = {{"terminals", c.topology.terminals},
                     {"edge_devices", c.topology.edge_devices},
                     {"area_width", c.topology.area_width},
                     {"area_height", c.topology.area_height},
                     {"radius", c.topology.radius},
                     {"max_retries", c.topology.max_retries},
                     {"terminal_energy", range_to_json(c.topology.terminal_energy)},
                     {"edge_energy", range_to_json(c.topology.edge_energy)},
                     {"terminal_storage", range_to_json(c.topology.terminal_storage)},
                     {"edge_storage", range_to_json(c.topology.edge_storage)},
                     {"edge_cpu_ghz", range_to_json(c.topology.edge_cpu_ghz)},
                     {"idle_prob", c.topology.idle_prob},
                     {"plr", range_to_json(c.topology.plr)},
                     {"tfsr", range_to_json(c.topology.tfsr)},
                     {"exec_success", range_to_json(c.topology.exec_success)}};
    j["workload"] = {{"n_tasks", c.n_tasks}, {"packets_per_task", c.packets_per_task}};
    j["trust"] = {{"alpha_plr", c.alpha_plr}, {"alpha_tfsr", c.alpha_tfsr}};
    j["embedding"] = {{"method", c.embedding_method},
                      {"dim", c.walk.dim},
                      {"p", c.walk.p},
                      {"q", c.walk.q},
                      {"walk_length", c.walk.walk_length},
                      {"walks_per_node", c.walk.walks_per_node},
                      {"window", c.walk.window},
                      {"negatives", c.walk.negatives},
                      {"epochs", c.walk.epochs},
                      {"learning_rate", c.walk.learning_rate}};
    j["gnn"] = {{"dims", c.gnn.dims},
                {"bins", c.gnn.bins},
                {"head_hidden", c.gnn.head_hidden},
                {"learning_rate", c.gnn.learning_rate},
                {"l2", c.gnn.l2},
                {"dropout", c.gnn.dropout},
                {"epochs", c.gnn.epochs},
                {"batch_size", c.gnn.batch_size},
                {"train_fraction", c.gnn.train_fraction},
                {"trust_mode", to_string(c.gnn.trust_mode)}};
    j["task"] = {{"processing_density", c.processing_density},
                 {"size_mb", c.task_size_mb},
                 {"tf_threshold", c.tf_threshold},
                 {"ec_threshold", c.ec_threshold}};
    j["resources"] = {{"e_elec", c.radio.e_elec},
                      {"e_amp", c.radio.e_amp},
                      {"cpu_epsilon", c.cpu_epsilon}};
    j["evaluation"] = {{"n_tasks", c.eval_tasks},
                       {"planner_cap", c.planner_cap},
                       {"oracle_cap", c.oracle_cap}};
    j["sweep"] = {{"variable", c.sweep.variable},
                  {"grid", c.sweep.grid},
                  {"affected_fraction", c.sweep.affected_fraction}};
    return j.dump(2) + "\n";
}

ExperimentConfig experiment_config_from_json(const std::string& text) {
    const nlohmann::json j = nlohmann::json::parse(text);
    ExperimentConfig c;
    c.seed = j.at("seed").get<std::uint64_t>();
    const auto& t = j.at("topology");
    c.topology.terminals = t.at("terminals").get<int>();
    c.topology.edge_devices = t.at("edge_devices").get<int>();
    c.topology.area_width = t.at("area_width").get<double>();
    c.topology.area_height = t.at("area_height").get<double>();
    c.topology.radius = t.at("radius").get<double>();
    c.topology.max_retries = t.at("max_retries").get<int>();
    c.topology.terminal_energy = range_from_json(t.at("terminal_energy"));
    c.topology.edge_energy = range_from_json(t.at("edge_energy"));
    c.topology.terminal_storage = range_from_json(t.at("terminal_storage"));
    c.topology.edge_storage = range_from_json(t.at("edge_storage"));
    c.topology.edge_cpu_ghz = range_from_json(t.at("edge_cpu_ghz"));
    c.topology.idle_prob = t.at("idle_prob").get<double>();
    c.topology.plr = range_from_json(t.at("plr"));
    c.topology.tfsr = range_from_json(t.at("tfsr"));
    c.topology.exec_success = range_from_json(t.at("exec_success"));
    const auto& w = j.at("workload");
    c.n_tasks = w.at("n_tasks").get<int>();
    c.packets_per_task = w.at("packets_per_task").get<int>();
    const auto& tr = j.at("trust");
    c.alpha_plr = tr.at("alpha_plr").get<double>();
    c.alpha_tfsr = tr.at("alpha_tfsr").get<double>();
    const auto& e = j.at("embedding");
    c.embedding_method = e.at("method").get<std::string>();
    c.walk.dim = e.at("dim").get<int>();
    c.walk.p = e.at("p").get<double>();
    c.walk.q = e.at("q").get<double>();
    c.walk.walk_length = e.at("walk_length").get<int>();
    c.walk.walks_per_node = e.at("walks_per_node").get<int>();
    c.walk.window = e.at("window").get<int>();
    c.walk.negatives = e.at("negatives").get<int>();
    c.walk.epochs = e.at("epochs").get<int>();
    c.walk.learning_rate = e.at("learning_rate").get<double>();
    const auto& g = j.at("gnn");
    c.gnn.dims = g.at("dims").get<std::vector<int>>();
    c.gnn.bins = g.at("bins").get<int>();
    c.gnn.head_hidden = g.at("head_hidden").get<int>();
    c.gnn.learning_rate = g.at("learning_rate").get<double>();
    c.gnn.l2 = g.at("l2").get<double>();
    c.gnn.dropout = g.at("dropout").get<double>();
    c.gnn.epochs = g.at("epochs").get<int>();
    c.gnn.batch_size = g.at("batch_size").get<int>();
    c.gnn.train_fraction = g.at("train_fraction").get<double>();
    c.gnn.trust_mode = trust_mode_from_string(g.at("trust_mode").get<std::string>());
    const auto& task = j.at("task");
    c.processing_density = task.at("processing_density").get<double>();
    c.task_size_mb = task.at("size_mb").get<double>();
    c.tf_threshold = task.at("tf_threshold").get<double>();
    c.ec_threshold = task.at("ec_threshold").get<double>();
    const auto& r = j.at("resources");
    c.radio.e_elec = r.at("e_elec").get<double>();
    c.radio.e_amp = r.at("e_amp").get<double>();
    c.cpu_epsilon = r.at("cpu_epsilon").get<double>();
    const auto& ev = j.at("evaluation");
    c.eval_tasks = ev.at("n_tasks").get<int>();
    c.planner_cap = ev.at("planner_cap").get<int>();
    c.oracle_cap = ev.at("oracle_cap").get<int>();
    const auto& s = j.at("sweep");
    c.sweep.variable = s.at("variable").get<std::string>();
    c.sweep.grid = s.at("grid").get<std::vector<double>>();
    c.sweep.affected_fraction = s.at("affected_fraction").get<double>();
    validate_config(c);
    return c;
}

void save_config(const ExperimentConfig& config, const std::filesystem::path& path) {
    write_text_file(path, experiment_config_to_json(config));
}

ExperimentConfig load_config(const std::filesystem::path& path) {
    try {
        const auto lines = read_lines(path);
        std::string text;
        for (const auto& line : lines) {
            text += line;
            text += '\n';
        }
        return experiment_config_from_json(text);
    } catch (const std::exception& e) {
        throw std::runtime_error("config: " + path.string() + ": " + e.what());
    }
}

const char* const kSummaryCsvHeader = "task,planner,path_len,avg_trust,success,note";

std::string summary_to_csv(const std::vector<TaskOutcome>& rows) {
    std::ostringstream os;
    os << kSummaryCsvHeader << "\n";
    for (const TaskOutcome& row : rows) {
        os << row.task << ',' << row.planner << ',' << row.path_len << ','
           << format_double(row.avg_trust) << ',' << row.success << ',' << row.note << "\n";
    }
    return os.str();
}

PipelineArtifacts run_pipeline(const ExperimentConfig& config, const fs::path& out_dir) {
    validate_config(config);
    PipelineArtifacts artifacts;

    artifacts.topology = stage("topology", [&] {
        return build_random_topology(config.topology, derive_seed(config.seed, "topology"));
    });
    save_topology(artifacts.topology, out_dir / "topology.json");

    const auto records = stage("workload", [&] {
        return run_workload(artifacts.topology, config.n_tasks, config.packets_per_task,
                            derive_seed(config.seed, "workload"));
    });
    persist_records(records, out_dir / "records.csv");

    artifacts.graph = stage("trust-graph", [&] {
        return build_graph(records, config.alpha_plr, config.alpha_tfsr);
    });
    export_graph_csv(artifacts.graph, out_dir / "graph.csv");

    const auto embeddings = stage("embedding", [&] {
        return make_embeddings(config, artifacts.graph, derive_seed(config.seed, "embedding"));
    });
    write_text_file(out_dir / "embeddings.csv", embeddings_to_csv(embeddings));

    std::map<DeviceId, DeviceKind> kinds;
    for (const Device& d : artifacts.topology.devices) kinds[d.id] = d.kind;
    artifacts.trained = stage("training", [&] {
        return train(artifacts.graph, kinds, embeddings, config.gnn,
                     derive_seed(config.seed, "training"));
    });
    write_text_file(out_dir / "checkpoint.json", model_to_json(artifacts.trained.model));
    write_text_file(out_dir / "metrics.csv", metrics_to_csv(artifacts.trained.metrics));
    write_text_file(out_dir / "trust.csv", trust_to_csv(artifacts.trained.trust));

    artifacts.summary = stage("planning", [&] {
        return evaluate_tasks(config, artifacts.topology, artifacts.trained.trust,
                              derive_seed(config.seed, "evaluation"), false);
    });
    write_text_file(out_dir / "summary.csv", summary_to_csv(artifacts.summary));
    return artifacts;
}

namespace {

TrustedTopology induced(const TrustedTopology& trusted, const std::set<DeviceId>& kept) {
    TrustedTopology out;
    out.initiator = trusted.initiator;
    out.nodes.assign(kept.begin(), kept.end());
    for (const DeviceId& id : out.nodes) {
        out.kinds[id] = trusted.kinds.at(id);
        if (id != trusted.initiator) out.trust[id] = trusted.trust.at(id);
    }
    for (const auto& link : trusted.links)
        if (kept.count(link.first) && kept.count(link.second)) out.links.push_back(link);
    return out;
}

}  // namespace

TrustedTopology reduce_trusted(const TrustedTopology& trusted, int node_cap) {
    if (static_cast<int>(trusted.nodes.size()) <= node_cap) return trusted;

    auto by_trust = [&](const DeviceId& a, const DeviceId& b) {
        const double ta = trusted.trust.at(a);
        const double tb = trusted.trust.at(b);
        if (ta != tb) return ta > tb;
        return a < b;
    };
    std::vector<DeviceId> ecs, terminals;
    for (const DeviceId& id : trusted.nodes) {
        if (id == trusted.initiator) continue;
        (trusted.kinds.at(id) == DeviceKind::Edge ? ecs : terminals).push_back(id);
    }
    std::sort(ecs.begin(), ecs.end(), by_trust);
    std::sort(terminals.begin(), terminals.end(), by_trust);

    std::size_t budget = static_cast<std::size_t>(node_cap) - 1;
    std::set<DeviceId> kept{trusted.initiator};
    for (const DeviceId& id : ecs) {
        if (kept.size() - 1 >= budget) break;
        kept.insert(id);
    }
    for (const DeviceId& id : terminals) {
        if (kept.size() - 1 >= budget) break;
        kept.insert(id);
    }
    return induced(trusted, kept);
}

TrustedTopology local_trusted(const TrustedTopology& trusted, int node_cap) {
    if (static_cast<int>(trusted.nodes.size()) <= node_cap) return trusted;

    auto by_trust = [&](const DeviceId& a, const DeviceId& b) {
        const double ta = trusted.trust.at(a);
        const double tb = trusted.trust.at(b);
        if (ta != tb) return ta > tb;
        return a < b;
    };

    const auto adj = trusted.adjacency();
    std::set<DeviceId> kept{trusted.initiator};
    bool has_ec = false;
    std::vector<DeviceId> ring{trusted.initiator};
    while (!ring.empty() && static_cast<int>(kept.size()) < node_cap) {
        std::set<DeviceId> frontier;
        for (const DeviceId& id : ring)
            for (const DeviceId& nbr : adj.at(id))
                if (!kept.count(nbr)) frontier.insert(nbr);
        std::vector<DeviceId> next(frontier.begin(), frontier.end());
        std::sort(next.begin(), next.end(), by_trust);
        ring.clear();
        for (const DeviceId& id : next) {
            if (static_cast<int>(kept.size()) >= node_cap) break;
            kept.insert(id);
            ring.push_back(id);
            has_ec |= trusted.kinds.at(id) == DeviceKind::Edge;
        }
    }
    if (has_ec) return induced(trusted, kept);

    // trusted routes can be long, so the ball may fill up on terminals; splice
    // in the hop-shortest route to the strongest reachable edge device and
    // evict the weakest spare terminals to stay at the cap
    std::map<DeviceId, DeviceId> parent;
    std::vector<DeviceId> layer{trusted.initiator}, ecs_found;
    std::set<DeviceId> seen{trusted.initiator};
    while (!layer.empty() && ecs_found.empty()) {
        std::sort(layer.begin(), layer.end(), by_trust);
        std::vector<DeviceId> next;
        for (const DeviceId& id : layer)
            for (const DeviceId& nbr : adj.at(id))
                if (seen.insert(nbr).second) {
                    parent.emplace(nbr, id);
                    next.push_back(nbr);
                    if (trusted.kinds.at(nbr) == DeviceKind::Edge) ecs_found.push_back(nbr);
                }
        layer = std::move(next);
    }
    if (ecs_found.empty()) return induced(trusted, kept);  // genuinely unreachable

    std::sort(ecs_found.begin(), ecs_found.end(), by_trust);
    std::vector<DeviceId> route;
    for (DeviceId id = ecs_found.front(); id != trusted.initiator; id = parent.at(id))
        route.push_back(id);
    kept.insert(route.begin(), route.end());

    std::vector<DeviceId> spare;
    for (const DeviceId& id : kept)
        if (id != trusted.initiator &&
            std::find(route.begin(), route.end(), id) == route.end())
            spare.push_back(id);
    std::sort(spare.begin(), spare.end(), by_trust);
    while (static_cast<int>(kept.size()) > node_cap && !spare.empty()) {
        kept.erase(spare.back());
        spare.pop_back();
    }
    // when the minimal route alone exceeds the cap it is kept whole anyway
    return induced(trusted, kept);
}

std::string sweep_to_csv(const std::string& x_name, const std::vector<SweepRow>& rows) {
    std::ostringstream os;
    os << x_name << ",planner,mean_avg_trust,std\n";
    for (const SweepRow& row : rows) {
        os << format_double(row.x) << ',' << row.planner << ','
           << format_double(row.mean_avg_trust) << ',' << format_double(row.std_dev) << "\n";
    }
    return os.str();
}

std::vector<SweepRow> sweep_plr(const ExperimentConfig& config, const fs::path& out_dir) {
    const std::vector<double> grid =
        config.sweep.variable == "plr" && !config.sweep.grid.empty() ? config.sweep.grid
                                                                     : default_plr_grid();
    return run_sweep(config, out_dir, "plr", grid);
}

std::vector<SweepRow> sweep_tfsr(const ExperimentConfig& config, const fs::path& out_dir) {
    const std::vector<double> grid =
        config.sweep.variable == "tfsr" && !config.sweep.grid.empty() ? config.sweep.grid
                                                                      : default_tfsr_grid();
    return run_sweep(config, out_dir, "tfsr", grid);
}

}  // namespace cste
