#include "cste/netsim.hpp"

#include <algorithm>
#include <map>
#include <queue>
#include <set>
#include <sstream>
#include <stdexcept>

#include "cste/csvio.hpp"
#include "cste/rng.hpp"

namespace cste {

std::string to_string(InteractionKind kind) {
    return kind == InteractionKind::Forward ? "forward" : "compute";
}

InteractionKind interaction_kind_from_string(const std::string& s) {
    if (s == "forward") return InteractionKind::Forward;
    if (s == "compute") return InteractionKind::Compute;
    throw std::runtime_error("unknown interaction kind: " + s);
}

void validate_record(const InteractionRecord& record, const std::string& context) {
    if (record.kind == InteractionKind::Forward) {
        if (record.p_tot < 0 || record.p_lost < 0 || record.p_lost > record.p_tot) {
            throw std::runtime_error(context + ": p_lost must satisfy 0 <= p_lost <= p_tot");
        }
        if (record.p_rec != record.p_tot - record.p_lost) {
            throw std::runtime_error(context + ": p_rec must equal p_tot - p_lost");
        }
        if (record.p_tra < 0 || record.p_tra > record.p_rec) {
            throw std::runtime_error(context + ": p_tra must satisfy 0 <= p_tra <= p_rec");
        }
    } else {
        if (record.outcome != 0 && record.outcome != 1) {
            throw std::runtime_error(context + ": outcome must be 0 or 1");
        }
    }
}

namespace {

std::int64_t draw_binomial(std::int64_t n, double p, Rng& rng) {
    if (n <= 0 || p <= 0.0) return 0;
    if (p >= 1.0) return n;
    return std::binomial_distribution<std::int64_t>(n, p)(rng);
}

// Terminals from which some edge device is reachable through terminal relays.
std::set<DeviceId> terminals_reaching_edge(const Topology& topo,
                                           const std::map<DeviceId, std::vector<DeviceId>>& adj) {
    std::set<DeviceId> reached;
    std::queue<DeviceId> frontier;
    for (const auto& d : topo.devices) {
        if (d.kind != DeviceKind::Edge) continue;
        for (const auto& nb : adj.at(d.id)) {
            if (topo.at(nb).kind == DeviceKind::Terminal && reached.insert(nb).second) {
                frontier.push(nb);
            }
        }
    }
    while (!frontier.empty()) {
        DeviceId cur = frontier.front();
        frontier.pop();
        for (const auto& nb : adj.at(cur)) {
            if (topo.at(nb).kind == DeviceKind::Terminal && reached.insert(nb).second) {
                frontier.push(nb);
            }
        }
    }
    return reached;
}

constexpr int kMaxWalkSteps = 100000;

// Loop-erased random walk from `start` until the walk steps onto an edge
// device. Returns the simple path including both endpoints, or empty if the
// step cap was hit (caller restarts).
std::vector<DeviceId> sample_route(const Topology& topo,
                                   const std::map<DeviceId, std::vector<DeviceId>>& adj,
                                   const DeviceId& start, Rng& rng) {
    std::vector<DeviceId> path{start};
    std::map<DeviceId, std::size_t> position{{start, 0}};
    for (int step = 0; step < kMaxWalkSteps; ++step) {
        const auto& nbs = adj.at(path.back());
        if (nbs.empty()) return {};
        const DeviceId& next = nbs[std::uniform_int_distribution<std::size_t>(0, nbs.size() - 1)(rng)];
        if (topo.at(next).kind == DeviceKind::Edge) {
            path.push_back(next);
            return path;
        }
        auto it = position.find(next);
        if (it != position.end()) {
            // erase the loop
            for (std::size_t k = it->second + 1; k < path.size(); ++k) position.erase(path[k]);
            path.resize(it->second + 1);
        } else {
            position[next] = path.size();
            path.push_back(next);
        }
    }
    return {};
}

}  // namespace

std::vector<InteractionRecord> run_workload(const Topology& topology, int n_tasks,
                                            int packets_per_task, std::uint64_t seed) {
    if (n_tasks <= 0) throw std::runtime_error("workload: n_tasks must be > 0");
    if (packets_per_task <= 0) throw std::runtime_error("workload: packets_per_task must be > 0");

    auto adj = topology.adjacency();
    std::vector<DeviceId> terminals;
    for (const auto& d : topology.devices) {
        if (d.kind == DeviceKind::Terminal) terminals.push_back(d.id);
    }
    if (terminals.empty()) throw std::runtime_error("workload: topology has no terminal devices");

    auto eligible = terminals_reaching_edge(topology, adj);
    if (eligible.empty()) {
        throw std::runtime_error("workload: no terminal can reach any edge device");
    }

    Rng rng = make_rng(seed);
    std::uniform_int_distribution<std::size_t> pick_terminal(0, terminals.size() - 1);

    std::vector<InteractionRecord> records;
    for (int task = 0; task < n_tasks; ++task) {
        std::vector<DeviceId> route;
        while (route.empty()) {
            const DeviceId& initiator = terminals[pick_terminal(rng)];
            if (!eligible.contains(initiator)) continue;
            route = sample_route(topology, adj, initiator, rng);
        }

        for (std::size_t k = 0; k + 1 < route.size(); ++k) {
            const Device& receiver = topology.at(route[k + 1]);
            if (receiver.kind == DeviceKind::Edge) break;  // final hop logs as Compute below
            InteractionRecord rec;
            rec.task_index = task;
            rec.trustor = route[k];
            rec.trustee = receiver.id;
            rec.kind = InteractionKind::Forward;
            rec.p_tot = packets_per_task;
            rec.p_lost = draw_binomial(rec.p_tot, receiver.behavior.true_plr, rng);
            rec.p_rec = rec.p_tot - rec.p_lost;
            rec.p_tra = draw_binomial(rec.p_rec, receiver.behavior.true_tfsr, rng);
            records.push_back(std::move(rec));
        }

        const Device& executor = topology.at(route.back());
        InteractionRecord rec;
        rec.task_index = task;
        rec.trustor = route.front();
        rec.trustee = executor.id;
        rec.kind = InteractionKind::Compute;
        rec.outcome =
            std::bernoulli_distribution(executor.behavior.exec_success)(rng) ? 1 : 0;
        records.push_back(std::move(rec));
    }
    return records;
}

namespace {
const char* kRecordHeader = "task,trustor,trustee,kind,p_tot,p_lost,p_rec,p_tra,outcome";
}

void persist_records(const std::vector<InteractionRecord>& records,
                     const std::filesystem::path& path) {
    std::string out;
    out += kRecordHeader;
    out += '\n';
    for (const auto& r : records) {
        out += format_int(r.task_index);
        out += ',';
        out += r.trustor.value;
        out += ',';
        out += r.trustee.value;
        out += ',';
        out += to_string(r.kind);
        out += ',';
        out += format_int(r.p_tot);
        out += ',';
        out += format_int(r.p_lost);
        out += ',';
        out += format_int(r.p_rec);
        out += ',';
        out += format_int(r.p_tra);
        out += ',';
        out += format_int(r.outcome);
        out += '\n';
    }
    write_text_file(path, out);
}

std::vector<InteractionRecord> load_records(const std::filesystem::path& path) {
    auto lines = read_lines(path);
    if (lines.empty() || split_csv_line(lines[0]) != split_csv_line(kRecordHeader)) {
        throw std::runtime_error("records: missing or wrong header in " + path.string());
    }
    std::vector<InteractionRecord> records;
    for (std::size_t i = 1; i < lines.size(); ++i) {
        if (lines[i].empty()) continue;
        const std::string where = "records row " + std::to_string(i + 1);
        auto f = split_csv_line(lines[i]);
        if (f.size() != 9) {
            throw std::runtime_error(where + ": expected 9 fields, got " +
                                     std::to_string(f.size()));
        }
        InteractionRecord rec;
        rec.task_index = static_cast<int>(parse_int(f[0], where));
        rec.trustor = DeviceId{f[1]};
        rec.trustee = DeviceId{f[2]};
        rec.kind = interaction_kind_from_string(f[3]);
        rec.p_tot = parse_int(f[4], where);
        rec.p_lost = parse_int(f[5], where);
        rec.p_rec = parse_int(f[6], where);
        rec.p_tra = parse_int(f[7], where);
        rec.outcome = static_cast<int>(parse_int(f[8], where));
        validate_record(rec, where);
        records.push_back(std::move(rec));
    }
    return records;
}

}  // namespace cste
