#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <map>

#include "cste/netsim.hpp"

using namespace cste;

namespace {

Topology two_node_topology(double plr, double exec_success) {
    Topology t;
    Device term;
    term.id = DeviceId{"t000"};
    term.kind = DeviceKind::Terminal;
    term.behavior.true_plr = plr;
    Device ec;
    ec.id = DeviceId{"e000"};
    ec.kind = DeviceKind::Edge;
    ec.x = 10.0;
    ec.cpu_freq_ghz = 2.0;
    ec.behavior.exec_success = exec_success;
    t.devices = {ec, term};
    std::sort(t.devices.begin(), t.devices.end(),
              [](const Device& a, const Device& b) { return a.id < b.id; });
    t.links = {{DeviceId{"e000"}, DeviceId{"t000"}}};
    return t;
}

}  // namespace

TEST_SUITE("netsim") {

TEST_CASE("direct hop task yields a single compute record") {
    const Topology t = two_node_topology(0.0, 1.0);
    const auto records = run_workload(t, 1, 100, 4);
    REQUIRE(records.size() == 1);
    CHECK(records[0].kind == InteractionKind::Compute);
    CHECK(records[0].outcome == 1);
    CHECK(records[0].trustor == DeviceId{"t000"});
    CHECK(records[0].trustee == DeviceId{"e000"});
}

TEST_CASE("total loss forces empty receipt counters") {
    TopologyConfig config;
    config.terminals = 6;
    config.edge_devices = 2;
    config.plr = {1.0, 1.0};
    Topology t = build_random_topology(config, 11);
    const auto records = run_workload(t, 50, 40, 12);
    bool saw_forward = false;
    for (const auto& r : records) {
        if (r.kind != InteractionKind::Forward) continue;
        saw_forward = true;
        CHECK(r.p_rec == 0);
        CHECK(r.p_lost == r.p_tot);
    }
    CHECK(saw_forward);
}

TEST_CASE("records satisfy counter invariants and determinism") {
    TopologyConfig config;
    config.terminals = 15;
    config.edge_devices = 4;
    const Topology t = build_random_topology(config, 21);
    const auto a = run_workload(t, 300, 50, 9);
    const auto b = run_workload(t, 300, 50, 9);
    CHECK(a == b);
    for (const auto& r : a) CHECK_NOTHROW(validate_record(r, "t"));
    CHECK(run_workload(t, 300, 50, 10) != a);
}

TEST_CASE("observed loss rates track the configured profile") {
    // law-of-large-numbers: per-device loss fraction within 0.02 of true_plr
    TopologyConfig config;
    config.terminals = 50;
    config.edge_devices = 10;
    const Topology t = build_random_topology(config, 7);
    const auto records = run_workload(t, 5000, 100, 7);

    std::map<DeviceId, std::pair<std::int64_t, std::int64_t>> counts;  // lost, total
    for (const auto& r : records) {
        if (r.kind != InteractionKind::Forward) continue;
        counts[r.trustee].first += r.p_lost;
        counts[r.trustee].second += r.p_tot;
    }
    int checked = 0;
    for (const auto& [id, c] : counts) {
        if (c.second < 5000) continue;  // skip rarely-visited devices
        const double observed = static_cast<double>(c.first) / static_cast<double>(c.second);
        CHECK(std::abs(observed - t.at(id).behavior.true_plr) < 0.02);
        ++checked;
    }
    CHECK(checked > 10);
}

TEST_CASE("record CSV round-trip") {
    const Topology t = two_node_topology(0.1, 0.9);
    const auto records = run_workload(t, 200, 25, 3);
    const auto path = std::filesystem::temp_directory_path() / "cste_netsim_records.csv";
    persist_records(records, path);
    CHECK(load_records(path) == records);

    persist_records({}, path);
    CHECK(load_records(path).empty());
    std::filesystem::remove(path);
}

TEST_CASE("malformed rows are rejected by row number") {
    const auto path = std::filesystem::temp_directory_path() / "cste_netsim_bad.csv";
    // p_lost > p_tot on the second data row
    const std::string text =
        "task,trustor,trustee,kind,p_tot,p_lost,p_rec,p_tra,outcome\n"
        "0,a,b,forward,10,1,9,9,0\n"
        "1,a,b,forward,10,11,0,0,0\n";
    {
        std::ofstream out(path);
        out << text;
    }
    CHECK_THROWS_WITH_AS(load_records(path), doctest::Contains("row 3"), std::runtime_error);
    std::filesystem::remove(path);
}

}
