#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "cste/domain.hpp"
#include "cste/embedding.hpp"
#include "cste/gnn.hpp"
#include "cste/netsim.hpp"
#include "cste/planner.hpp"
#include "cste/resource_trust.hpp"
#include "cste/trustgraph.hpp"

namespace cste {

struct SweepSpec {
    std::string variable = "plr";  // behavior knob: "plr" or "tfsr"
    std::vector<double> grid;      // empty: subcommand default grid
    double affected_fraction = 2.0 / 3.0;
};

std::vector<double> default_plr_grid();   // 0 to 0.16 step 0.02
std::vector<double> default_tfsr_grid();  // 0.5 to 1.0 step 0.05

/// Experiments reduce class distributions with the probability-weighted bin
/// midpoint so predicted trust spans the full scale.
GnnHyper experiment_gnn_defaults();

struct ExperimentConfig {
    std::uint64_t seed = 42;
    TopologyConfig topology;

    int n_tasks = 5000;
    int packets_per_task = 100;

    double alpha_plr = 0.6;
    double alpha_tfsr = 0.4;

    std::string embedding_method = "node2vec";  // or "gaussian"
    WalkParams walk;
    GnnHyper gnn = experiment_gnn_defaults();

    double processing_density = 2339.0;  // cycles/bit
    double task_size_mb = 50.0;
    double tf_threshold = 0.4;
    double ec_threshold = 0.3;

    RadioModel radio;
    double cpu_epsilon = kDefaultCpuEpsilon;

    int eval_tasks = 30;
    // best-first search over a dense trusted set can enumerate exponentially
    // many paths; keep only the planner_cap highest-trust devices when the
    // filtered set is larger
    int planner_cap = 20;
    int oracle_cap = 14;
    SweepSpec sweep;
};

void validate_config(const ExperimentConfig& config);

std::string experiment_config_to_json(const ExperimentConfig& config);
ExperimentConfig experiment_config_from_json(const std::string& text);
void save_config(const ExperimentConfig& config, const std::filesystem::path& path);
ExperimentConfig load_config(const std::filesystem::path& path);

struct TaskOutcome {
    int task = 0;
    std::string planner;
    int path_len = 0;     // devices on the path, 0 on failure
    double avg_trust = 0.0;
    int success = 0;
    std::string note;     // "", "no trusted EC", "no path", "reduced", ...
};

extern const char* const kSummaryCsvHeader;  // "task,planner,path_len,avg_trust,success,note"
std::string summary_to_csv(const std::vector<TaskOutcome>& rows);

struct PipelineArtifacts {
    Topology topology;
    InteractionGraph graph;
    TrainResult trained;
    std::vector<TaskOutcome> summary;
};

/// Full chain: deployment, workload, direct-trust graph, embeddings,
/// training, then per-task gating/filtering/planning. Writes every
/// intermediate artifact plus summary.csv under out_dir; one summary row per
/// evaluation task. Errors carry the failing stage's name.
PipelineArtifacts run_pipeline(const ExperimentConfig& config,
                               const std::filesystem::path& out_dir);

/// Caps a trusted topology at node_cap devices: the initiator, the
/// highest-trust edge devices, and the highest-trust terminals, induced links
/// only. Bounds the exhaustive oracle.
TrustedTopology reduce_trusted(const TrustedTopology& trusted, int node_cap);

/// Planner view of a large trusted set: a breadth-first ball around the
/// initiator, higher-trust devices admitted first within each ring, induced
/// links only. Unlike a pure trust ranking this keeps the kept set connected
/// to the initiator.
TrustedTopology local_trusted(const TrustedTopology& trusted, int node_cap);

struct SweepRow {
    double x = 0.0;  // injected behavior value
    std::string planner;
    double mean_avg_trust = 0.0;
    double std_dev = 0.0;
};

std::string sweep_to_csv(const std::string& x_name, const std::vector<SweepRow>& rows);

/// Injects the grid's packet loss rate into a fixed random subset of
/// terminals, reruns workload + training per point, and compares planners
/// over the evaluation tasks (a failed task counts as trust 0). Writes
/// sweep_plr.csv under out_dir.
std::vector<SweepRow> sweep_plr(const ExperimentConfig& config,
                                const std::filesystem::path& out_dir);

/// Same design over forwarding success rates; writes sweep_tfsr.csv.
std::vector<SweepRow> sweep_tfsr(const ExperimentConfig& config,
                                 const std::filesystem::path& out_dir);

}  // namespace cste
