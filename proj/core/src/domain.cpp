#include "cste/domain.hpp"

#include <algorithm>
#include <cmath>
#include <queue>
#include <set>
#include <stdexcept>

#include <json.hpp>

#include "cste/csvio.hpp"
#include "cste/rng.hpp"

namespace cste {

namespace {

std::string padded_index(int i) {
    std::string s = std::to_string(i);
    while (s.size() < 3) s.insert(s.begin(), '0');
    return s;
}

double draw(const ValueRange& r, Rng& rng) {
    if (r.hi <= r.lo) return r.lo;
    return std::uniform_real_distribution<double>(r.lo, r.hi)(rng);
}

bool is_connected(const Topology& topo) {
    if (topo.devices.empty()) return true;
    auto adj = topo.adjacency();
    std::set<DeviceId> seen;
    std::queue<DeviceId> frontier;
    frontier.push(topo.devices.front().id);
    seen.insert(topo.devices.front().id);
    while (!frontier.empty()) {
        DeviceId cur = frontier.front();
        frontier.pop();
        for (const auto& nb : adj[cur]) {
            if (seen.insert(nb).second) frontier.push(nb);
        }
    }
    return seen.size() == topo.devices.size();
}

}  // namespace

std::string to_string(DeviceKind kind) {
    return kind == DeviceKind::Terminal ? "terminal" : "edge";
}

DeviceKind device_kind_from_string(const std::string& s) {
    if (s == "terminal") return DeviceKind::Terminal;
    if (s == "edge") return DeviceKind::Edge;
    throw std::runtime_error("unknown device kind: " + s);
}

void validate_task(const Task& task) {
    if (!(task.processing_density > 0)) {
        throw std::runtime_error("task: processing_density must be > 0");
    }
    if (!(task.size_bits > 0)) {
        throw std::runtime_error("task: size_bits must be > 0");
    }
    if (task.tf_threshold < 0 || task.ec_threshold < 0) {
        throw std::runtime_error("task: trust thresholds must be >= 0");
    }
}

const Device* Topology::find(const DeviceId& id) const {
    auto it = std::lower_bound(devices.begin(), devices.end(), id,
                               [](const Device& d, const DeviceId& key) { return d.id < key; });
    if (it != devices.end() && it->id == id) return &*it;
    return nullptr;
}

const Device& Topology::at(const DeviceId& id) const {
    const Device* d = find(id);
    if (!d) throw std::runtime_error("unknown device id: " + id.value);
    return *d;
}

std::map<DeviceId, std::vector<DeviceId>> Topology::adjacency() const {
    std::map<DeviceId, std::vector<DeviceId>> adj;
    for (const auto& d : devices) adj[d.id];
    for (const auto& [a, b] : links) {
        adj[a].push_back(b);
        adj[b].push_back(a);
    }
    for (auto& [id, nbs] : adj) std::sort(nbs.begin(), nbs.end());
    return adj;
}

double device_distance(const Device& a, const Device& b) {
    return std::hypot(a.x - b.x, a.y - b.y);
}

Topology build_random_topology(const TopologyConfig& config, std::uint64_t seed) {
    if (config.terminals < 1 || config.edge_devices < 1) {
        throw std::runtime_error("topology: need at least one terminal and one edge device");
    }
    if (config.radius <= 0 || config.area_width <= 0 || config.area_height <= 0) {
        throw std::runtime_error("topology: area and radius must be positive");
    }

    Rng rng = make_rng(seed);
    std::uniform_real_distribution<double> ux(0.0, config.area_width);
    std::uniform_real_distribution<double> uy(0.0, config.area_height);
    std::uniform_real_distribution<double> u01(0.0, 1.0);

    for (int attempt = 0; attempt < config.max_retries; ++attempt) {
        Topology topo;
        topo.devices.reserve(static_cast<std::size_t>(config.terminals + config.edge_devices));

        for (int i = 0; i < config.edge_devices; ++i) {
            Device d;
            d.id = DeviceId{"e" + padded_index(i)};
            d.kind = DeviceKind::Edge;
            d.x = ux(rng);
            d.y = uy(rng);
            d.cpu_freq_ghz = draw(config.edge_cpu_ghz, rng);
            d.energy_j = draw(config.edge_energy, rng);
            d.storage_bits = draw(config.edge_storage, rng);
            d.idle = u01(rng) < config.idle_prob;
            d.behavior.true_plr = draw(config.plr, rng);
            d.behavior.true_tfsr = draw(config.tfsr, rng);
            d.behavior.exec_success = draw(config.exec_success, rng);
            topo.devices.push_back(std::move(d));
        }
        for (int i = 0; i < config.terminals; ++i) {
            Device d;
            d.id = DeviceId{"t" + padded_index(i)};
            d.kind = DeviceKind::Terminal;
            d.x = ux(rng);
            d.y = uy(rng);
            d.energy_j = draw(config.terminal_energy, rng);
            d.storage_bits = draw(config.terminal_storage, rng);
            d.idle = u01(rng) < config.idle_prob;
            d.behavior.true_plr = draw(config.plr, rng);
            d.behavior.true_tfsr = draw(config.tfsr, rng);
            d.behavior.exec_success = draw(config.exec_success, rng);
            topo.devices.push_back(std::move(d));
        }

        std::sort(topo.devices.begin(), topo.devices.end(),
                  [](const Device& a, const Device& b) { return a.id < b.id; });

        for (std::size_t i = 0; i < topo.devices.size(); ++i) {
            for (std::size_t j = i + 1; j < topo.devices.size(); ++j) {
                if (device_distance(topo.devices[i], topo.devices[j]) <= config.radius) {
                    topo.links.emplace_back(topo.devices[i].id, topo.devices[j].id);
                }
            }
        }

        if (is_connected(topo)) return topo;
    }
    throw std::runtime_error("topology: no connected placement found after " +
                             std::to_string(config.max_retries) + " retries");
}

namespace {

using nlohmann::json;

json device_to_json(const Device& d) {
    json j;
    j["id"] = d.id.value;
    j["kind"] = to_string(d.kind);
    j["x"] = d.x;
    j["y"] = d.y;
    if (d.kind == DeviceKind::Edge) j["cpu_freq_ghz"] = d.cpu_freq_ghz;
    j["energy_j"] = d.energy_j;
    j["storage_bits"] = d.storage_bits;
    j["idle"] = d.idle;
    j["true_plr"] = d.behavior.true_plr;
    j["true_tfsr"] = d.behavior.true_tfsr;
    j["exec_success"] = d.behavior.exec_success;
    return j;
}

Device device_from_json(const json& j) {
    Device d;
    d.id = DeviceId{j.at("id").get<std::string>()};
    d.kind = device_kind_from_string(j.at("kind").get<std::string>());
    d.x = j.at("x").get<double>();
    d.y = j.at("y").get<double>();
    d.cpu_freq_ghz = j.value("cpu_freq_ghz", 0.0);
    d.energy_j = j.at("energy_j").get<double>();
    d.storage_bits = j.at("storage_bits").get<double>();
    d.idle = j.at("idle").get<bool>();
    d.behavior.true_plr = j.at("true_plr").get<double>();
    d.behavior.true_tfsr = j.at("true_tfsr").get<double>();
    d.behavior.exec_success = j.at("exec_success").get<double>();
    return d;
}

}  // namespace

std::string topology_to_json(const Topology& topology) {
    json j;
    j["devices"] = json::array();
    for (const auto& d : topology.devices) j["devices"].push_back(device_to_json(d));
    j["links"] = json::array();
    for (const auto& [a, b] : topology.links) j["links"].push_back(json::array({a.value, b.value}));
    return j.dump(2) + "\n";
}

Topology topology_from_json(const std::string& text) {
    json j = json::parse(text);
    Topology topo;
    for (const auto& dj : j.at("devices")) topo.devices.push_back(device_from_json(dj));
    std::sort(topo.devices.begin(), topo.devices.end(),
              [](const Device& a, const Device& b) { return a.id < b.id; });
    for (const auto& lj : j.at("links")) {
        DeviceId a{lj.at(0).get<std::string>()};
        DeviceId b{lj.at(1).get<std::string>()};
        if (a == b) throw std::runtime_error("topology: self-link on " + a.value);
        if (b < a) std::swap(a, b);
        topo.links.emplace_back(std::move(a), std::move(b));
    }
    std::sort(topo.links.begin(), topo.links.end());
    for (const auto& [a, b] : topo.links) {
        if (!topo.find(a) || !topo.find(b)) {
            throw std::runtime_error("topology: link references unknown device " + a.value + "-" +
                                     b.value);
        }
    }
    return topo;
}

void save_topology(const Topology& topology, const std::filesystem::path& path) {
    write_text_file(path, topology_to_json(topology));
}

Topology load_topology(const std::filesystem::path& path) {
    auto lines = read_lines(path);
    std::string text;
    for (const auto& l : lines) {
        text += l;
        text += '\n';
    }
    return topology_from_json(text);
}

}  // namespace cste
