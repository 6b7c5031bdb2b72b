#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <random>

#include "cste/netsim.hpp"
#include "cste/trustgraph.hpp"

using namespace cste;

namespace {

InteractionRecord forward(const char* from, const char* to, std::int64_t tot,
                          std::int64_t lost, std::int64_t tra) {
    InteractionRecord r;
    r.trustor = DeviceId{from};
    r.trustee = DeviceId{to};
    r.kind = InteractionKind::Forward;
    r.p_tot = tot;
    r.p_lost = lost;
    r.p_rec = tot - lost;
    r.p_tra = tra;
    return r;
}

InteractionRecord compute(const char* from, const char* to, int outcome) {
    InteractionRecord r;
    r.trustor = DeviceId{from};
    r.trustee = DeviceId{to};
    r.kind = InteractionKind::Compute;
    r.outcome = outcome;
    return r;
}

}  // namespace

TEST_SUITE("trustgraph") {

TEST_CASE("packet loss trust") {
    CHECK(plr_trust(std::vector{forward("a", "b", 10, 0, 10)}) == 1.0);
    // loss fractions 0.1 and 0.3 -> mean survival 0.8
    const std::vector recs{forward("a", "b", 10, 1, 9), forward("a", "b", 10, 3, 7)};
    CHECK(plr_trust(recs) == doctest::Approx(0.8).epsilon(1e-12));
    CHECK(plr_trust(std::vector{forward("a", "b", 5, 5, 0)}) == 0.0);
    CHECK_THROWS(plr_trust({}));
}

TEST_CASE("forwarding success trust") {
    CHECK(tfsr_trust(std::vector{forward("a", "b", 10, 0, 10)}) == 1.0);
    // ratios 0.5 and 1.0 -> 0.75
    const std::vector recs{forward("a", "b", 10, 0, 5), forward("a", "b", 10, 0, 10)};
    CHECK(tfsr_trust(recs) == doctest::Approx(0.75).epsilon(1e-12));
    CHECK(tfsr_trust(std::vector{forward("a", "b", 10, 2, 0)}) == 0.0);
    // records with nothing received are skipped
    const std::vector mixed{forward("a", "b", 10, 10, 0), forward("a", "b", 10, 0, 10)};
    CHECK(tfsr_trust(mixed) == 1.0);
    CHECK_THROWS(tfsr_trust(std::vector{forward("a", "b", 10, 10, 0)}));
}

TEST_CASE("weighted combination") {
    CHECK(direct_trust_tf(1.0, 1.0, 0.6, 0.4) == 1.0);
    CHECK(direct_trust_tf(0.8, 0.9, 0.6, 0.4) == doctest::Approx(0.84).epsilon(1e-12));
    CHECK(direct_trust_tf(0.0, 0.0, 0.5, 0.5) == 0.0);
    CHECK_THROWS(direct_trust_tf(0.5, 0.5, 0.6, 0.6));
    CHECK_THROWS(direct_trust_tf(0.5, 0.5, -0.2, 1.2));
}

TEST_CASE("execution success trust") {
    const std::vector recs{compute("a", "e", 1), compute("a", "e", 1), compute("a", "e", 1),
                           compute("a", "e", 0)};
    CHECK(direct_trust_ec(recs) == 0.75);
    CHECK(direct_trust_ec(std::vector{compute("a", "e", 1)}) == 1.0);
    CHECK(direct_trust_ec(std::vector{compute("a", "e", 0)}) == 0.0);
    CHECK_THROWS(direct_trust_ec({}));
}

TEST_CASE("graph construction") {
    std::vector<InteractionRecord> recs{forward("a1", "a2", 10, 1, 9),
                                        compute("a1", "b1", 1)};
    const InteractionGraph g = build_graph(recs, 0.6, 0.4);
    CHECK(g.nodes.size() == 3);
    REQUIRE(g.edges.size() == 2);
    CHECK(g.find_edge(DeviceId{"a1"}, DeviceId{"a2"}) != nullptr);
    CHECK(g.find_edge(DeviceId{"a1"}, DeviceId{"b1"}) != nullptr);
    CHECK(g.find_edge(DeviceId{"a2"}, DeviceId{"a1"}) == nullptr);

    CHECK(build_graph({}, 0.6, 0.4).edges.empty());
}

TEST_CASE("graph construction is order-invariant") {
    TopologyConfig config;
    config.terminals = 12;
    config.edge_devices = 3;
    const Topology t = build_random_topology(config, 31);
    auto records = run_workload(t, 500, 50, 31);
    const InteractionGraph g1 = build_graph(records, 0.6, 0.4);

    std::shuffle(records.begin(), records.end(), std::mt19937_64(77));
    CHECK(build_graph(records, 0.6, 0.4) == g1);

    for (const TrustEdge& e : g1.edges) {
        CHECK(e.direct_trust >= 0.0);
        CHECK(e.direct_trust <= 1.0);
        CHECK(e.n_interactions >= 1);
    }
}

TEST_CASE("edge devices never appear as trustors") {
    TopologyConfig config;
    config.terminals = 10;
    config.edge_devices = 4;
    const Topology t = build_random_topology(config, 8);
    const auto records = run_workload(t, 400, 50, 8);
    const InteractionGraph g = build_graph(records, 0.6, 0.4);
    for (const TrustEdge& e : g.edges) CHECK(t.at(e.trustor).kind == DeviceKind::Terminal);
}

TEST_CASE("all-loss edges fall back to zero forwarding trust with a warning") {
    std::vector<InteractionRecord> recs{forward("a1", "a2", 10, 10, 0)};
    int warnings = 0;
    const InteractionGraph g =
        build_graph(recs, 0.6, 0.4, [&](const std::string&) { ++warnings; });
    CHECK(warnings == 1);
    // plr contributes 0, tfsr falls back to 0
    CHECK(g.edges.at(0).direct_trust == 0.0);
}

TEST_CASE("discretize") {
    CHECK(trust_code_bits(10) == 4);
    CHECK(trust_code_bits(2) == 1);

    const TrustClass zero = discretize(0.0, 10);
    CHECK(zero.class_index == 0);
    CHECK(zero.code == std::vector<std::uint8_t>{0, 0, 0, 0});

    // 1.0 clamps into the top bin; 9 is 1001, stored LSB first
    const TrustClass one = discretize(1.0, 10);
    CHECK(one.class_index == 9);
    CHECK(one.code == std::vector<std::uint8_t>{1, 0, 0, 1});

    const TrustClass mid = discretize(0.84, 10);
    CHECK(mid.class_index == 8);
    CHECK(mid.code == std::vector<std::uint8_t>{0, 0, 0, 1});

    CHECK_THROWS(discretize(-0.1, 10));
    CHECK_THROWS(discretize(0.5, 1));
}

TEST_CASE("discretize bin bounds hold across the unit interval") {
    for (int i = 0; i <= 1000; ++i) {
        const double t = static_cast<double>(i) / 1000.0;
        const TrustClass c = discretize(t, 10);
        if (t == 1.0) {
            CHECK(c.class_index == 9);
        } else {
            CHECK(c.class_index / 10.0 <= t);
            CHECK(t < (c.class_index + 1) / 10.0);
        }
    }
}

TEST_CASE("graph CSV round-trip") {
    std::vector<InteractionRecord> recs{forward("a1", "a2", 10, 1, 9), compute("a1", "b1", 1),
                                        compute("a2", "b1", 0)};
    const InteractionGraph g = build_graph(recs, 0.6, 0.4);
    const auto path = std::filesystem::temp_directory_path() / "cste_graph_test.csv";
    export_graph_csv(g, path);
    CHECK(load_graph_csv(path) == g);
    std::filesystem::remove(path);
}

}
