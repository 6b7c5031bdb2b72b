#pragma once

#include <compare>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <utility>
#include <vector>

namespace cste {

struct DeviceId {
    std::string value;

    auto operator<=>(const DeviceId&) const = default;
};

enum class DeviceKind { Terminal, Edge };

std::string to_string(DeviceKind kind);
DeviceKind device_kind_from_string(const std::string& s);

/// Ground-truth per-device behavior driving the synthetic workload generator.
struct BehaviorProfile {
    double true_plr = 0.0;       // per-packet loss probability on inbound links
    double true_tfsr = 1.0;      // per-packet forwarding success probability
    double exec_success = 1.0;   // task-level execution success (Edge only)

    bool operator==(const BehaviorProfile&) const = default;
};

struct Device {
    DeviceId id;
    DeviceKind kind = DeviceKind::Terminal;
    double x = 0.0;              // meters
    double y = 0.0;
    double cpu_freq_ghz = 0.0;   // Edge only
    double energy_j = 0.0;
    double storage_bits = 0.0;
    bool idle = true;
    BehaviorProfile behavior;

    bool operator==(const Device&) const = default;
};

/// Offloadable task: processing density (cycles/bit), payload size (bits) and
/// the minimum trust the initiator demands from forwarding / computing devices.
/// Thresholds above 1 are accepted; they are simply unsatisfiable.
struct Task {
    DeviceId initiator;
    double processing_density = 0.0;  // cycles/bit
    double size_bits = 0.0;
    double tf_threshold = 0.0;
    double ec_threshold = 0.0;
};

constexpr double kBitsPerMegabyte = 8e6;  // 1 MB = 10^6 bytes

void validate_task(const Task& task);

struct Topology {
    std::vector<Device> devices;                        // sorted by id
    std::vector<std::pair<DeviceId, DeviceId>> links;   // normalized first<second, sorted

    const Device* find(const DeviceId& id) const;
    const Device& at(const DeviceId& id) const;

    /// Adjacency as sorted neighbor lists; deterministic iteration order.
    std::map<DeviceId, std::vector<DeviceId>> adjacency() const;

    bool operator==(const Topology&) const = default;
};

double device_distance(const Device& a, const Device& b);

struct ValueRange {
    double lo = 0.0;
    double hi = 0.0;

    bool operator==(const ValueRange&) const = default;
};

struct TopologyConfig {
    int terminals = 50;
    int edge_devices = 10;
    double area_width = 500.0;    // meters
    double area_height = 500.0;
    double radius = 150.0;        // max link distance
    int max_retries = 64;

    ValueRange terminal_energy{1000.0, 5000.0};   // joules
    ValueRange edge_energy{100.0, 500.0};
    ValueRange terminal_storage{4.2e8, 2e9};      // bits
    ValueRange edge_storage{8e8, 4e9};
    ValueRange edge_cpu_ghz{1.5, 3.0};
    double idle_prob = 0.95;

    ValueRange plr{0.0, 0.2};
    ValueRange tfsr{0.7, 1.0};
    ValueRange exec_success{0.7, 1.0};
};

/// Random geometric deployment: devices placed uniformly in the area, links
/// between every pair within `radius`. Placement is retried (up to
/// max_retries) until the topology is connected; throws if that never
/// happens. Deterministic under (config, seed).
Topology build_random_topology(const TopologyConfig& config, std::uint64_t seed);

std::string topology_to_json(const Topology& topology);
Topology topology_from_json(const std::string& text);
void save_topology(const Topology& topology, const std::filesystem::path& path);
Topology load_topology(const std::filesystem::path& path);

}  // namespace cste
