#include "cste/trustgraph.hpp"

#include <algorithm>
#include <tuple>
#include <cmath>
#include <iostream>
#include <map>
#include <set>
#include <stdexcept>

#include "cste/csvio.hpp"

namespace cste {

const TrustEdge* InteractionGraph::find_edge(const DeviceId& trustor,
                                             const DeviceId& trustee) const {
    auto key = std::pair{trustor, trustee};
    auto it = std::lower_bound(edges.begin(), edges.end(), key,
                               [](const TrustEdge& e, const std::pair<DeviceId, DeviceId>& k) {
                                   return std::tie(e.trustor, e.trustee) < std::tie(k.first, k.second);
                               });
    if (it != edges.end() && it->trustor == trustor && it->trustee == trustee) return &*it;
    return nullptr;
}

double plr_trust(std::span<const InteractionRecord> records) {
    double sum = 0.0;
    int n = 0;
    for (const auto& r : records) {
        if (r.kind != InteractionKind::Forward) continue;
        if (r.p_tot <= 0) throw std::runtime_error("plr_trust: record with p_tot <= 0");
        sum += 1.0 - static_cast<double>(r.p_lost) / static_cast<double>(r.p_tot);
        ++n;
    }
    if (n == 0) throw std::runtime_error("plr_trust: no interactions");
    return sum / n;
}

double tfsr_trust(std::span<const InteractionRecord> records) {
    double sum = 0.0;
    int n = 0;
    for (const auto& r : records) {
        if (r.kind != InteractionKind::Forward || r.p_rec <= 0) continue;
        sum += static_cast<double>(r.p_tra) / static_cast<double>(r.p_rec);
        ++n;
    }
    if (n == 0) throw std::runtime_error("tfsr_trust: no eligible interactions");
    return sum / n;
}

double direct_trust_tf(double t_plr, double t_tfsr, double alpha_plr, double alpha_tfsr) {
    if (alpha_plr < 0.0 || alpha_plr > 1.0 || alpha_tfsr < 0.0 || alpha_tfsr > 1.0 ||
        std::abs(alpha_plr + alpha_tfsr - 1.0) > 1e-9) {
        throw std::runtime_error("direct_trust_tf: weights must be in [0,1] and sum to 1");
    }
    return alpha_plr * t_plr + alpha_tfsr * t_tfsr;
}

double direct_trust_ec(std::span<const InteractionRecord> records) {
    std::int64_t success = 0;
    std::int64_t total = 0;
    for (const auto& r : records) {
        if (r.kind != InteractionKind::Compute) continue;
        success += r.outcome;
        ++total;
    }
    if (total == 0) throw std::runtime_error("direct_trust_ec: no interactions");
    return static_cast<double>(success) / static_cast<double>(total);
}

InteractionGraph build_graph(std::span<const InteractionRecord> records, double alpha_plr,
                             double alpha_tfsr, const WarningSink& warn) {
    auto emit_warning = [&](const std::string& msg) {
        if (warn) {
            warn(msg);
        } else {
            std::cerr << "warning: " << msg << '\n';
        }
    };

    std::map<std::pair<DeviceId, DeviceId>, std::vector<InteractionRecord>> by_pair;
    std::set<DeviceId> nodes;
    for (const auto& r : records) {
        validate_record(r, "build_graph");
        by_pair[{r.trustor, r.trustee}].push_back(r);
        nodes.insert(r.trustor);
        nodes.insert(r.trustee);
    }

    InteractionGraph graph;
    graph.nodes.assign(nodes.begin(), nodes.end());
    for (auto& [pair, recs] : by_pair) {
        // canonical reduction order, so record permutations (e.g. a CSV
        // round-trip) cannot perturb the floating-point means
        std::sort(recs.begin(), recs.end(), [](const auto& a, const auto& b) {
            return std::tie(a.task_index, a.kind, a.p_tot, a.p_lost, a.p_rec, a.p_tra, a.outcome) <
                   std::tie(b.task_index, b.kind, b.p_tot, b.p_lost, b.p_rec, b.p_tra, b.outcome);
        });
        bool any_forward = false, any_compute = false;
        for (const auto& r : recs) {
            (r.kind == InteractionKind::Forward ? any_forward : any_compute) = true;
        }
        if (any_forward && any_compute) {
            throw std::runtime_error("build_graph: mixed record kinds on edge " +
                                     pair.first.value + " -> " + pair.second.value);
        }

        TrustEdge edge;
        edge.trustor = pair.first;
        edge.trustee = pair.second;
        edge.n_interactions = static_cast<int>(recs.size());
        if (any_compute) {
            edge.direct_trust = direct_trust_ec(recs);
        } else {
            double t_plr = plr_trust(recs);
            double t_tfsr = 0.0;
            bool has_received = std::any_of(recs.begin(), recs.end(),
                                            [](const InteractionRecord& r) { return r.p_rec > 0; });
            if (has_received) {
                t_tfsr = tfsr_trust(recs);
            } else {
                emit_warning("edge " + pair.first.value + " -> " + pair.second.value +
                             " has no received packets; TFSR falls back to 0");
            }
            edge.direct_trust = direct_trust_tf(t_plr, t_tfsr, alpha_plr, alpha_tfsr);
        }
        graph.edges.push_back(std::move(edge));
    }
    return graph;
}

int trust_code_bits(int bin_count) {
    if (bin_count < 2) throw std::runtime_error("trust_code_bits: bin_count must be >= 2");
    int bits = 0;
    while ((1 << bits) < bin_count) ++bits;
    return bits;
}

TrustClass discretize(double trust, int bin_count) {
    if (!(trust >= 0.0 && trust <= 1.0)) {
        throw std::runtime_error("discretize: trust must be in [0,1]");
    }
    TrustClass tc;
    tc.bin_count = bin_count;
    tc.class_index = std::min(static_cast<int>(std::floor(trust * bin_count)), bin_count - 1);
    int bits = trust_code_bits(bin_count);
    tc.code.resize(static_cast<std::size_t>(bits));
    for (int b = 0; b < bits; ++b) {
        tc.code[static_cast<std::size_t>(b)] =
            static_cast<std::uint8_t>((tc.class_index >> b) & 1);
    }
    return tc;
}

namespace {
const char* kGraphHeader = "trustor,trustee,direct_trust,n_interactions";
}

void export_graph_csv(const InteractionGraph& graph, const std::filesystem::path& path) {
    std::string out;
    out += kGraphHeader;
    out += '\n';
    for (const auto& e : graph.edges) {
        out += e.trustor.value;
        out += ',';
        out += e.trustee.value;
        out += ',';
        out += format_double(e.direct_trust);
        out += ',';
        out += format_int(e.n_interactions);
        out += '\n';
    }
    write_text_file(path, out);
}

InteractionGraph load_graph_csv(const std::filesystem::path& path) {
    auto lines = read_lines(path);
    if (lines.empty() || split_csv_line(lines[0]) != split_csv_line(kGraphHeader)) {
        throw std::runtime_error("graph: missing or wrong header in " + path.string());
    }
    InteractionGraph graph;
    std::set<DeviceId> nodes;
    for (std::size_t i = 1; i < lines.size(); ++i) {
        if (lines[i].empty()) continue;
        const std::string where = "graph row " + std::to_string(i + 1);
        auto f = split_csv_line(lines[i]);
        if (f.size() != 4) {
            throw std::runtime_error(where + ": expected 4 fields");
        }
        TrustEdge e;
        e.trustor = DeviceId{f[0]};
        e.trustee = DeviceId{f[1]};
        e.direct_trust = parse_double(f[2], where);
        e.n_interactions = static_cast<int>(parse_int(f[3], where));
        if (e.direct_trust < 0.0 || e.direct_trust > 1.0 || e.n_interactions < 1) {
            throw std::runtime_error(where + ": invalid edge values");
        }
        nodes.insert(e.trustor);
        nodes.insert(e.trustee);
        graph.edges.push_back(std::move(e));
    }
    std::sort(graph.edges.begin(), graph.edges.end(), [](const TrustEdge& a, const TrustEdge& b) {
        return std::tie(a.trustor, a.trustee) < std::tie(b.trustor, b.trustee);
    });
    graph.nodes.assign(nodes.begin(), nodes.end());
    return graph;
}

}  // namespace cste
