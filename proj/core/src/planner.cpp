#include "cste/planner.hpp"

#include <algorithm>
#include <queue>
#include <set>

#include <json.hpp>

namespace cste {

double composite_trust(double t_his, int t_res) {
    if (t_his < 0.0 || t_his > 1.0)
        throw std::invalid_argument("composite_trust: historical trust out of [0,1]");
    if (t_res != 0 && t_res != 1)
        throw std::invalid_argument("composite_trust: resource trust must be 0 or 1");
    return t_his * static_cast<double>(t_res);
}

std::map<DeviceId, std::vector<DeviceId>> TrustedTopology::adjacency() const {
    std::map<DeviceId, std::vector<DeviceId>> adj;
    for (const DeviceId& id : nodes) adj[id];
    for (const auto& [a, b] : links) {
        adj[a].push_back(b);
        adj[b].push_back(a);
    }
    for (auto& [id, nbrs] : adj) std::sort(nbrs.begin(), nbrs.end());
    return adj;
}

TrustedTopology filter_trusted(const Topology& topology,
                               const std::map<DeviceId, double>& trust, const Task& task) {
    validate_task(task);
    const Device* initiator = topology.find(task.initiator);
    if (!initiator)
        throw std::invalid_argument("filter_trusted: initiator " + task.initiator.value +
                                    " not in topology");
    if (initiator->kind != DeviceKind::Terminal)
        throw std::invalid_argument("filter_trusted: initiator must be a terminal device");

    TrustedTopology out;
    out.initiator = task.initiator;
    std::set<DeviceId> kept;
    bool any_ec = false;
    for (const Device& d : topology.devices) {
        if (d.id == task.initiator) {
            kept.insert(d.id);
            out.kinds[d.id] = d.kind;
            continue;
        }
        auto it = trust.find(d.id);
        if (it == trust.end())
            throw std::invalid_argument("filter_trusted: no trust value for device " +
                                        d.id.value);
        const double threshold =
            d.kind == DeviceKind::Terminal ? task.tf_threshold : task.ec_threshold;
        if (it->second < threshold) continue;
        kept.insert(d.id);
        out.kinds[d.id] = d.kind;
        out.trust[d.id] = it->second;
        if (d.kind == DeviceKind::Edge) any_ec = true;
    }
    if (!any_ec) throw NoTrustedEcError();
    out.nodes.assign(kept.begin(), kept.end());
    for (const auto& link : topology.links)
        if (kept.count(link.first) && kept.count(link.second)) out.links.push_back(link);
    return out;
}

namespace {

struct SearchGraph {
    std::vector<DeviceId> nodes;                 // sorted
    std::vector<std::vector<int>> adj;           // sorted index lists
    std::vector<double> trust;                   // -1 for the initiator
    std::vector<bool> is_ec;
    int initiator = -1;
};

SearchGraph compile(const TrustedTopology& t) {
    SearchGraph g;
    g.nodes = t.nodes;
    if (!std::is_sorted(g.nodes.begin(), g.nodes.end()))
        std::sort(g.nodes.begin(), g.nodes.end());
    auto index_of = [&](const DeviceId& id) {
        auto it = std::lower_bound(g.nodes.begin(), g.nodes.end(), id);
        if (it == g.nodes.end() || *it != id)
            throw std::invalid_argument("trusted topology: unknown device " + id.value);
        return static_cast<int>(it - g.nodes.begin());
    };
    const std::size_t n = g.nodes.size();
    g.adj.resize(n);
    g.trust.assign(n, -1.0);
    g.is_ec.assign(n, false);
    g.initiator = index_of(t.initiator);
    for (std::size_t i = 0; i < n; ++i) {
        auto kit = t.kinds.find(g.nodes[i]);
        if (kit == t.kinds.end())
            throw std::invalid_argument("trusted topology: no kind for device " +
                                        g.nodes[i].value);
        g.is_ec[i] = kit->second == DeviceKind::Edge;
        if (static_cast<int>(i) == g.initiator) {
            if (g.is_ec[i])
                throw std::invalid_argument("trusted topology: initiator must be a terminal");
            continue;
        }
        auto tit = t.trust.find(g.nodes[i]);
        if (tit == t.trust.end())
            throw std::invalid_argument("trusted topology: no trust value for device " +
                                        g.nodes[i].value);
        if (tit->second < 0.0 || tit->second > 1.0)
            throw std::invalid_argument("trusted topology: trust out of [0,1] for device " +
                                        g.nodes[i].value);
        g.trust[i] = tit->second;
    }
    for (const auto& [a, b] : t.links) {
        const int u = index_of(a);
        const int v = index_of(b);
        if (u == v) continue;
        g.adj[static_cast<std::size_t>(u)].push_back(v);
        g.adj[static_cast<std::size_t>(v)].push_back(u);
    }
    for (auto& nbrs : g.adj) {
        std::sort(nbrs.begin(), nbrs.end());
        nbrs.erase(std::unique(nbrs.begin(), nbrs.end()), nbrs.end());
    }
    return g;
}

/// Path given tail-first search order [ec, ..., last]; produces the
/// initiator-first result.
PathResult make_result(const SearchGraph& g, const std::vector<int>& reversed_tail,
                       std::string planner) {
    PathResult r;
    r.planner = std::move(planner);
    r.path.push_back(g.nodes[static_cast<std::size_t>(g.initiator)]);
    double sum = 0.0;
    for (auto it = reversed_tail.rbegin(); it != reversed_tail.rend(); ++it) {
        r.path.push_back(g.nodes[static_cast<std::size_t>(*it)]);
        r.per_device_trust.push_back(g.trust[static_cast<std::size_t>(*it)]);
        sum += g.trust[static_cast<std::size_t>(*it)];
    }
    r.avg_trust = sum / static_cast<double>(reversed_tail.size());
    return r;
}

PathResult make_result_forward(const SearchGraph& g, const std::vector<int>& forward,
                               std::string planner) {
    PathResult r;
    r.planner = std::move(planner);
    double sum = 0.0;
    for (std::size_t i = 0; i < forward.size(); ++i) {
        r.path.push_back(g.nodes[static_cast<std::size_t>(forward[i])]);
        if (i == 0) continue;
        r.per_device_trust.push_back(g.trust[static_cast<std::size_t>(forward[i])]);
        sum += g.trust[static_cast<std::size_t>(forward[i])];
    }
    r.avg_trust = sum / static_cast<double>(forward.size() - 1);
    return r;
}

struct AgentItem {
    double f = 0.0;
    std::vector<int> path;  // [ec, ..., tail]
};

struct AgentItemWorse {
    bool operator()(const AgentItem& a, const AgentItem& b) const {
        if (a.f != b.f) return a.f < b.f;
        if (a.path.size() != b.path.size()) return a.path.size() > b.path.size();
        return a.path > b.path;
    }
};

/// Single-agent best-first search from one edge device toward the initiator.
std::optional<std::vector<int>> agent_search(const SearchGraph& g, int ec) {
    std::priority_queue<AgentItem, std::vector<AgentItem>, AgentItemWorse> queue;
    queue.push(AgentItem{g.trust[static_cast<std::size_t>(ec)], {ec}});
    while (!queue.empty()) {
        AgentItem item = queue.top();
        queue.pop();
        const int tail = item.path.back();
        if (tail == g.initiator) {
            // first completed pop ends this agent's search
            item.path.pop_back();
            return item.path;
        }

        double path_sum = 0.0;
        for (int node : item.path) path_sum += g.trust[static_cast<std::size_t>(node)];
        for (int nbr : g.adj[static_cast<std::size_t>(tail)]) {
            if (std::find(item.path.begin(), item.path.end(), nbr) != item.path.end()) continue;
            const bool complete = nbr == g.initiator;
            if (!complete && g.is_ec[static_cast<std::size_t>(nbr)]) continue;
            // f1 averages the candidate path's devices; the initiator carries
            // no trust value and stays out of the average
            const double f1 = complete
                                  ? path_sum / static_cast<double>(item.path.size())
                                  : (path_sum + g.trust[static_cast<std::size_t>(nbr)]) /
                                        static_cast<double>(item.path.size() + 1);
            double nbr_sum = 0.0;
            int nbr_count = 0;
            for (int two : g.adj[static_cast<std::size_t>(nbr)]) {
                if (two == g.initiator) continue;
                if (std::find(item.path.begin(), item.path.end(), two) != item.path.end())
                    continue;
                nbr_sum += g.trust[static_cast<std::size_t>(two)];
                ++nbr_count;
            }
            const double f2 = nbr_count > 0 ? nbr_sum / static_cast<double>(nbr_count) : 0.0;
            AgentItem next;
            next.f = f1 + f2;
            next.path = item.path;
            next.path.push_back(nbr);
            queue.push(std::move(next));
        }
    }
    return std::nullopt;
}

}  // namespace

std::optional<PathResult> astar_plan(const TrustedTopology& trusted) {
    const SearchGraph g = compile(trusted);
    std::optional<PathResult> best;
    for (std::size_t ec = 0; ec < g.nodes.size(); ++ec) {
        if (!g.is_ec[ec]) continue;
        auto found = agent_search(g, static_cast<int>(ec));
        if (!found) continue;
        PathResult r = make_result(g, *found, "cste");
        if (!best || r.avg_trust > best->avg_trust) best = std::move(r);
    }
    return best;
}

std::optional<PathResult> brute_force_best(const TrustedTopology& trusted, int node_cap) {
    const SearchGraph g = compile(trusted);
    if (static_cast<int>(g.nodes.size()) > node_cap)
        throw std::runtime_error("brute_force_best: " + std::to_string(g.nodes.size()) +
                                 " nodes exceed the cap of " + std::to_string(node_cap));

    double t_max = 0.0;
    for (std::size_t i = 0; i < g.nodes.size(); ++i)
        if (static_cast<int>(i) != g.initiator) t_max = std::max(t_max, g.trust[i]);

    std::optional<std::vector<int>> best_path;  // forward order, initiator first
    double best_avg = -1.0;
    std::vector<int> path{g.initiator};
    std::vector<bool> on_path(g.nodes.size(), false);
    on_path[static_cast<std::size_t>(g.initiator)] = true;

    auto consider = [&](double avg) {
        if (avg > best_avg) return true;
        if (avg < best_avg) return false;
        return path < *best_path;
    };

    auto dfs = [&](auto&& self, double sum) -> void {
        const int tail = path.back();
        const int k = static_cast<int>(path.size()) - 1;
        if (k > 0 && g.is_ec[static_cast<std::size_t>(tail)]) {
            const double avg = sum / static_cast<double>(k);
            if (consider(avg)) {
                best_avg = avg;
                best_path = path;
            }
            return;  // paths end at the first edge device
        }
        const int unvisited = static_cast<int>(g.nodes.size()) - static_cast<int>(path.size());
        if (unvisited <= 0) return;
        if (best_avg >= 0.0 && k >= 0) {
            // Upper bound: extend by m devices of trust t_max; the best m is
            // either 1 or everything, since the mean moves monotonically.
            const double b1 = (sum + t_max) / static_cast<double>(k + 1);
            const double bn = (sum + unvisited * t_max) / static_cast<double>(k + unvisited);
            if (std::max(b1, bn) < best_avg) return;
        }
        for (int nbr : g.adj[static_cast<std::size_t>(tail)]) {
            if (on_path[static_cast<std::size_t>(nbr)]) continue;
            if (nbr == g.initiator) continue;
            path.push_back(nbr);
            on_path[static_cast<std::size_t>(nbr)] = true;
            self(self, sum + g.trust[static_cast<std::size_t>(nbr)]);
            on_path[static_cast<std::size_t>(nbr)] = false;
            path.pop_back();
        }
    };
    dfs(dfs, 0.0);

    if (!best_path) return std::nullopt;
    return make_result_forward(g, *best_path, "oracle");
}

std::optional<PathResult> greedy_plan(const TrustedTopology& trusted) {
    const SearchGraph g = compile(trusted);
    std::vector<int> path{g.initiator};
    std::vector<bool> visited(g.nodes.size(), false);
    visited[static_cast<std::size_t>(g.initiator)] = true;
    while (true) {
        const int tail = path.back();
        int best = -1;
        bool best_is_ec = false;
        for (int nbr : g.adj[static_cast<std::size_t>(tail)]) {
            if (visited[static_cast<std::size_t>(nbr)]) continue;
            const bool ec = g.is_ec[static_cast<std::size_t>(nbr)];
            if (best < 0 || (ec && !best_is_ec) ||
                (ec == best_is_ec &&
                 g.trust[static_cast<std::size_t>(nbr)] > g.trust[static_cast<std::size_t>(best)])) {
                best = nbr;
                best_is_ec = ec;
            }
        }
        if (best < 0) return std::nullopt;
        path.push_back(best);
        visited[static_cast<std::size_t>(best)] = true;
        if (best_is_ec) return make_result_forward(g, path, "greedy");
    }
}

std::string path_result_to_json(const PathResult& result) {
    nlohmann::json j;
    j["planner"] = result.planner;
    j["path"] = nlohmann::json::array();
    for (const DeviceId& id : result.path) j["path"].push_back(id.value);
    j["per_device_trust"] = result.per_device_trust;
    j["avg_trust"] = result.avg_trust;
    return j.dump(2) + "\n";
}

PathResult path_result_from_json(const std::string& text) {
    const nlohmann::json j = nlohmann::json::parse(text);
    PathResult r;
    r.planner = j.at("planner").get<std::string>();
    for (const auto& id : j.at("path")) r.path.push_back(DeviceId{id.get<std::string>()});
    r.per_device_trust = j.at("per_device_trust").get<std::vector<double>>();
    r.avg_trust = j.at("avg_trust").get<double>();
    if (r.path.size() != r.per_device_trust.size() + 1)
        throw std::runtime_error("path json: trust list does not match path length");
    return r;
}

}  // namespace cste
