#pragma once

#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "cste/domain.hpp"

namespace cste {

/// Product of predicted historical trust and the binary resource gate.
double composite_trust(double t_his, int t_res);

/// Induced subgraph of the deployment containing the initiator plus every
/// device whose composite trust clears the task's threshold, with per-device
/// trust values from the initiator's perspective.
struct TrustedTopology {
    DeviceId initiator;
    std::vector<DeviceId> nodes;                       // sorted, includes initiator
    std::vector<std::pair<DeviceId, DeviceId>> links;  // normalized first<second, sorted
    std::map<DeviceId, DeviceKind> kinds;              // every node
    std::map<DeviceId, double> trust;                  // every node except the initiator

    std::map<DeviceId, std::vector<DeviceId>> adjacency() const;
};

class NoTrustedEcError : public std::runtime_error {
public:
    NoTrustedEcError() : std::runtime_error("no trusted edge-computing device") {}
};

/// Keeps terminals with trust >= tf_threshold and edge devices with trust >=
/// ec_threshold, plus the initiator. Throws NoTrustedEcError when no edge
/// device qualifies.
TrustedTopology filter_trusted(const Topology& topology,
                               const std::map<DeviceId, double>& trust, const Task& task);

/// A collaboration path: initiator first, edge-computing device last,
/// terminals in between. avg_trust averages the non-initiator devices.
struct PathResult {
    std::string planner;
    std::vector<DeviceId> path;
    std::vector<double> per_device_trust;  // aligned with path[1..]
    double avg_trust = 0.0;
};

/// One search agent per trusted edge device, working from its device toward
/// the initiator. A candidate step is scored f = f1 + f2 where f1 is the
/// average trust of the partial path and f2 the average trust of the
/// candidate's remaining trusted neighbors; the agent accepts the first path
/// that reaches the initiator, and the best agent result wins.
std::optional<PathResult> astar_plan(const TrustedTopology& trusted);

/// Exhaustive enumeration of simple initiator-to-edge-device paths, with
/// branch-and-bound pruning. Refuses topologies above node_cap.
std::optional<PathResult> brute_force_best(const TrustedTopology& trusted, int node_cap = 14);

/// Steps to the highest-trust unvisited neighbor (an edge device as soon as
/// one is adjacent); gives up at dead ends.
std::optional<PathResult> greedy_plan(const TrustedTopology& trusted);

std::string path_result_to_json(const PathResult& result);
PathResult path_result_from_json(const std::string& text);

}  // namespace cste
