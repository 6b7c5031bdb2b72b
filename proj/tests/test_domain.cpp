#include <doctest.h>

#include <cmath>
#include <set>

#include "cste/domain.hpp"

using namespace cste;

namespace {

// Union-find-free connectivity check over the undirected link list.
bool connected(const Topology& t) {
    if (t.devices.empty()) return true;
    const auto adj = t.adjacency();
    std::set<DeviceId> seen{t.devices.front().id};
    std::vector<DeviceId> stack{t.devices.front().id};
    while (!stack.empty()) {
        const DeviceId cur = stack.back();
        stack.pop_back();
        for (const DeviceId& nbr : adj.at(cur))
            if (seen.insert(nbr).second) stack.push_back(nbr);
    }
    return seen.size() == t.devices.size();
}

}  // namespace

TEST_SUITE("domain") {

TEST_CASE("random topology is deterministic and connected") {
    TopologyConfig config;
    config.terminals = 20;
    config.edge_devices = 5;
    const Topology a = build_random_topology(config, 99);
    const Topology b = build_random_topology(config, 99);
    CHECK(a == b);
    CHECK(a.devices.size() == 25);
    CHECK(connected(a));

    const Topology c = build_random_topology(config, 100);
    CHECK(a.devices != c.devices);
}

TEST_CASE("links respect the connection radius") {
    TopologyConfig config;
    config.terminals = 30;
    config.edge_devices = 6;
    config.radius = 120.0;
    const Topology t = build_random_topology(config, 5);
    for (const auto& [fst, snd] : t.links) {
        CHECK(fst < snd);
        CHECK(device_distance(t.at(fst), t.at(snd)) <= config.radius);
    }
}

TEST_CASE("device attributes fall in the configured ranges") {
    TopologyConfig config;
    const Topology t = build_random_topology(config, 17);
    int terminals = 0, edges = 0;
    for (const Device& d : t.devices) {
        if (d.kind == DeviceKind::Terminal) {
            ++terminals;
            CHECK(d.energy_j >= config.terminal_energy.lo);
            CHECK(d.energy_j <= config.terminal_energy.hi);
            CHECK(d.cpu_freq_ghz == 0.0);
        } else {
            ++edges;
            CHECK(d.cpu_freq_ghz >= config.edge_cpu_ghz.lo);
            CHECK(d.cpu_freq_ghz <= config.edge_cpu_ghz.hi);
        }
        CHECK(d.x >= 0.0);
        CHECK(d.x <= config.area_width);
        CHECK(d.behavior.true_plr >= config.plr.lo);
        CHECK(d.behavior.true_plr <= config.plr.hi);
    }
    CHECK(terminals == config.terminals);
    CHECK(edges == config.edge_devices);
}

TEST_CASE("topology JSON round-trip") {
    TopologyConfig config;
    config.terminals = 8;
    config.edge_devices = 3;
    const Topology t = build_random_topology(config, 3);
    CHECK(topology_from_json(topology_to_json(t)) == t);
}

TEST_CASE("task validation") {
    Task task;
    task.initiator = DeviceId{"t000"};
    task.processing_density = 2339.0;
    task.size_bits = 50 * kBitsPerMegabyte;
    task.tf_threshold = 0.4;
    task.ec_threshold = 0.3;
    CHECK_NOTHROW(validate_task(task));

    task.size_bits = 0.0;
    CHECK_THROWS(validate_task(task));
    task.size_bits = 1.0;
    task.tf_threshold = -0.1;
    CHECK_THROWS(validate_task(task));
    // thresholds above 1 are allowed, just unsatisfiable
    task.tf_threshold = 1.01;
    CHECK_NOTHROW(validate_task(task));
}

TEST_CASE("distance is euclidean") {
    Device a, b;
    a.x = 0.0;
    a.y = 0.0;
    b.x = 3.0;
    b.y = 4.0;
    CHECK(device_distance(a, b) == 5.0);
}

}
