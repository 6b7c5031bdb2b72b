#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "cste/csvio.hpp"
#include "cste/experiment.hpp"

using namespace cste;

namespace {

namespace fs = std::filesystem;

// Small but end-to-end meaningful configuration.
ExperimentConfig small_config() {
    ExperimentConfig c;
    c.seed = 7;
    c.topology.terminals = 12;
    c.topology.edge_devices = 4;
    c.topology.radius = 180.0;
    c.n_tasks = 300;
    c.packets_per_task = 40;
    c.embedding_method = "gaussian";
    c.walk.dim = 12;
    c.gnn = experiment_gnn_defaults();
    c.gnn.dims = {12, 8, 8};
    c.gnn.head_hidden = 8;
    c.gnn.epochs = 6;
    c.gnn.batch_size = 32;
    c.eval_tasks = 5;
    return c;
}

std::string slurp(const fs::path& path) {
    std::ostringstream os;
    os << std::ifstream(path).rdbuf();
    return os.str();
}

struct TempDir {
    fs::path path;
    explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / name) {
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

}  // namespace

TEST_SUITE("experiment") {

TEST_CASE("default grids") {
    const auto plr = default_plr_grid();
    REQUIRE(plr.size() == 9);
    CHECK(plr.front() == 0.0);
    CHECK(plr.back() == doctest::Approx(0.16));

    const auto tfsr = default_tfsr_grid();
    REQUIRE(tfsr.size() == 11);
    CHECK(tfsr.front() == 0.5);
    CHECK(tfsr.back() == doctest::Approx(1.0));
}

TEST_CASE("config validation") {
    CHECK_NOTHROW(validate_config(ExperimentConfig{}));
    CHECK_NOTHROW(validate_config(small_config()));

    ExperimentConfig bad = small_config();
    bad.alpha_plr = 0.7;  // weights no longer sum to 1
    CHECK_THROWS(validate_config(bad));

    bad = small_config();
    bad.embedding_method = "magic";
    CHECK_THROWS(validate_config(bad));

    bad = small_config();
    bad.walk.dim = 99;  // disagrees with gnn input dim
    CHECK_THROWS(validate_config(bad));

    bad = small_config();
    bad.sweep.grid = {0.5, 1.5};
    CHECK_THROWS(validate_config(bad));

    bad = small_config();
    bad.sweep.variable = "jitter";
    CHECK_THROWS(validate_config(bad));
}

TEST_CASE("config JSON round-trip") {
    ExperimentConfig c = small_config();
    c.sweep.grid = {0.0, 0.08, 0.16};
    c.sweep.affected_fraction = 0.5;
    c.gnn.trust_mode = TrustMode::MaxProb;
    const ExperimentConfig back = experiment_config_from_json(experiment_config_to_json(c));
    CHECK(experiment_config_to_json(back) == experiment_config_to_json(c));
    CHECK(back.seed == 7);
    CHECK(back.topology.terminals == 12);
    CHECK(back.gnn.trust_mode == TrustMode::MaxProb);
    CHECK(back.sweep.grid == c.sweep.grid);
}

TEST_CASE("summary CSV format") {
    std::vector<TaskOutcome> rows{{0, "cste", 3, 0.75, 1, ""},
                                  {1, "cste", 0, 0.0, 0, "no trusted EC"}};
    const std::string csv = summary_to_csv(rows);
    const auto lines = split_lines(csv);
    REQUIRE(lines.size() == 3);
    CHECK(lines[0] == kSummaryCsvHeader);
    CHECK(lines[1] == "0,cste,3,0.75,1,");
    CHECK(lines[2] == "1,cste,0,0,0,no trusted EC");
}

TEST_CASE("pipeline writes every artifact and is deterministic") {
    TempDir dir_a("cste_exp_a"), dir_b("cste_exp_b");
    const ExperimentConfig config = small_config();
    const PipelineArtifacts artifacts = run_pipeline(config, dir_a.path);

    for (const char* name : {"topology.json", "records.csv", "graph.csv", "embeddings.csv",
                             "checkpoint.json", "metrics.csv", "trust.csv", "summary.csv"})
        CHECK(fs::exists(dir_a.path / name));

    CHECK(artifacts.summary.size() == 5);  // one row per evaluation task
    for (const TaskOutcome& row : artifacts.summary) {
        CHECK(row.planner == "cste");
        if (row.success) {
            CHECK(row.avg_trust > 0.0);
            CHECK(row.avg_trust <= 1.0);
            CHECK(row.path_len >= 2);
        }
    }

    run_pipeline(config, dir_b.path);
    for (const auto& entry : fs::directory_iterator(dir_a.path)) {
        const auto name = entry.path().filename();
        CHECK(slurp(entry.path()) == slurp(dir_b.path / name));
    }
}

TEST_CASE("impossible thresholds fail every task explicitly") {
    TempDir dir("cste_exp_hard");
    ExperimentConfig config = small_config();
    config.tf_threshold = 1.01;
    config.ec_threshold = 1.01;
    const PipelineArtifacts artifacts = run_pipeline(config, dir.path);
    REQUIRE(artifacts.summary.size() == 5);
    for (const TaskOutcome& row : artifacts.summary) {
        CHECK(row.success == 0);
        CHECK(row.note == "no trusted EC");
    }
}

TEST_CASE("oracle reduction keeps the initiator and the strongest devices") {
    TrustedTopology t;
    t.initiator = DeviceId{"t000"};
    t.nodes = {DeviceId{"e000"}, DeviceId{"e001"}, DeviceId{"t000"}, DeviceId{"t001"},
               DeviceId{"t002"}, DeviceId{"t003"}};
    t.kinds = {{DeviceId{"e000"}, DeviceKind::Edge},     {DeviceId{"e001"}, DeviceKind::Edge},
               {DeviceId{"t000"}, DeviceKind::Terminal}, {DeviceId{"t001"}, DeviceKind::Terminal},
               {DeviceId{"t002"}, DeviceKind::Terminal}, {DeviceId{"t003"}, DeviceKind::Terminal}};
    t.trust = {{DeviceId{"e000"}, 0.9}, {DeviceId{"e001"}, 0.4}, {DeviceId{"t001"}, 0.8},
               {DeviceId{"t002"}, 0.6}, {DeviceId{"t003"}, 0.7}};
    t.links = {{DeviceId{"e000"}, DeviceId{"t001"}},
               {DeviceId{"e001"}, DeviceId{"t002"}},
               {DeviceId{"t000"}, DeviceId{"t001"}},
               {DeviceId{"t000"}, DeviceId{"t002"}},
               {DeviceId{"t002"}, DeviceId{"t003"}}};

    const TrustedTopology same = reduce_trusted(t, 6);
    CHECK(same.nodes == t.nodes);

    const TrustedTopology cut = reduce_trusted(t, 4);
    REQUIRE(cut.nodes.size() == 4);
    // initiator plus both edge devices, then the strongest terminal
    CHECK(std::find(cut.nodes.begin(), cut.nodes.end(), t.initiator) != cut.nodes.end());
    CHECK(cut.kinds.count(DeviceId{"e000"}) == 1);
    CHECK(cut.kinds.count(DeviceId{"e001"}) == 1);
    CHECK(cut.kinds.count(DeviceId{"t001"}) == 1);
    CHECK(cut.kinds.count(DeviceId{"t002"}) == 0);
    // only links between surviving nodes remain
    for (const auto& [a, b] : cut.links) {
        CHECK(cut.kinds.count(a) == 1);
        CHECK(cut.kinds.count(b) == 1);
    }
}

TEST_CASE("planner view keeps the initiator's neighborhood connected") {
    // a weak local route and a strong but unreachable remote cluster
    TrustedTopology t;
    t.initiator = DeviceId{"t000"};
    t.nodes = {DeviceId{"e000"}, DeviceId{"e001"}, DeviceId{"t000"}, DeviceId{"t001"},
               DeviceId{"t002"}, DeviceId{"t003"}};
    t.kinds = {{DeviceId{"e000"}, DeviceKind::Edge},     {DeviceId{"e001"}, DeviceKind::Edge},
               {DeviceId{"t000"}, DeviceKind::Terminal}, {DeviceId{"t001"}, DeviceKind::Terminal},
               {DeviceId{"t002"}, DeviceKind::Terminal}, {DeviceId{"t003"}, DeviceKind::Terminal}};
    t.trust = {{DeviceId{"e000"}, 0.6},  {DeviceId{"e001"}, 0.99}, {DeviceId{"t001"}, 0.5},
               {DeviceId{"t002"}, 0.9},  {DeviceId{"t003"}, 0.95}};
    t.links = {{DeviceId{"t000"}, DeviceId{"t001"}},
               {DeviceId{"e000"}, DeviceId{"t001"}},
               {DeviceId{"t002"}, DeviceId{"t003"}},
               {DeviceId{"e001"}, DeviceId{"t003"}},
               {DeviceId{"e001"}, DeviceId{"t002"}}};

    CHECK(local_trusted(t, 6).nodes == t.nodes);

    // a pure trust ranking strands the initiator entirely
    CHECK(!astar_plan(reduce_trusted(t, 4)).has_value());

    // the ball stops at the reachable component: t000 -> t001 -> e000
    const TrustedTopology ball = local_trusted(t, 4);
    const std::vector<DeviceId> expect{DeviceId{"e000"}, DeviceId{"t000"}, DeviceId{"t001"}};
    CHECK(ball.nodes == expect);
    const auto plan = astar_plan(ball);
    REQUIRE(plan.has_value());
    CHECK(plan->avg_trust == doctest::Approx(0.55));
}

TEST_CASE("planner view prefers trust within a ring but never loses every edge device") {
    TrustedTopology t;
    t.initiator = DeviceId{"t000"};
    t.nodes = {DeviceId{"e000"}, DeviceId{"t000"}, DeviceId{"t001"}, DeviceId{"t002"},
               DeviceId{"t003"}};
    t.kinds = {{DeviceId{"e000"}, DeviceKind::Edge},     {DeviceId{"t000"}, DeviceKind::Terminal},
               {DeviceId{"t001"}, DeviceKind::Terminal}, {DeviceId{"t002"}, DeviceKind::Terminal},
               {DeviceId{"t003"}, DeviceKind::Terminal}};
    t.trust = {{DeviceId{"e000"}, 0.2}, {DeviceId{"t001"}, 0.7}, {DeviceId{"t002"}, 0.9},
               {DeviceId{"t003"}, 0.8}};
    t.links = {{DeviceId{"t000"}, DeviceId{"t001"}},
               {DeviceId{"t000"}, DeviceId{"t002"}},
               {DeviceId{"t000"}, DeviceId{"t003"}},
               {DeviceId{"e000"}, DeviceId{"t000"}},
               {DeviceId{"e000"}, DeviceId{"t002"}}};

    // the two strongest terminals fill the ball, so the low-trust edge device
    // is spliced back in and the weakest spare terminal makes room for it
    const TrustedTopology ball = local_trusted(t, 3);
    const std::vector<DeviceId> expect{DeviceId{"e000"}, DeviceId{"t000"}, DeviceId{"t002"}};
    CHECK(ball.nodes == expect);
    REQUIRE(astar_plan(ball).has_value());
}

TEST_CASE("sweep rows cover the grid for all planners") {
    TempDir dir("cste_exp_sweep");
    ExperimentConfig config = small_config();
    config.eval_tasks = 4;
    config.sweep.variable = "plr";
    config.sweep.grid = {0.0, 0.16};
    const auto rows = sweep_plr(config, dir.path);
    REQUIRE(rows.size() == 6);  // 2 grid points x 3 planners
    CHECK(rows[0].x == 0.0);
    CHECK(rows[0].planner == "cste");
    CHECK(rows[1].planner == "greedy");
    CHECK(rows[2].planner == "oracle");
    CHECK(rows[3].x == doctest::Approx(0.16));
    for (const SweepRow& row : rows) {
        CHECK(row.mean_avg_trust >= 0.0);
        CHECK(row.mean_avg_trust <= 1.0);
        CHECK(row.std_dev >= 0.0);
    }

    const std::string csv = slurp(dir.path / "sweep_plr.csv");
    CHECK(split_lines(csv).size() == 7);
    CHECK(csv.rfind("plr,planner,mean_avg_trust,std\n", 0) == 0);
    CHECK(sweep_to_csv("plr", rows) == csv);
}

}
