#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <vector>

#include "cste/netsim.hpp"

namespace cste {

/// Directed trust edge: how much `trustor` trusts `trustee` based on their
/// recorded interactions.
struct TrustEdge {
    DeviceId trustor;
    DeviceId trustee;
    double direct_trust = 0.0;   // in [0,1]
    int n_interactions = 0;      // tasks observed on this edge

    bool operator==(const TrustEdge&) const = default;
};

struct InteractionGraph {
    std::vector<DeviceId> nodes;  // sorted unique
    std::vector<TrustEdge> edges; // sorted by (trustor, trustee)

    const TrustEdge* find_edge(const DeviceId& trustor, const DeviceId& trustee) const;

    bool operator==(const InteractionGraph&) const = default;
};

/// Trust value discretized into one of `bin_count` classes, with the class
/// index binary-encoded LSB-first in `code`.
struct TrustClass {
    int bin_count = 0;
    int class_index = 0;
    std::vector<std::uint8_t> code;

    bool operator==(const TrustClass&) const = default;
};

/// Mean over forward records of (1 - p_lost/p_tot). Requires at least one
/// forward record, each with p_tot > 0.
double plr_trust(std::span<const InteractionRecord> records);

/// Mean of p_tra/p_rec over forward records with p_rec > 0; records with
/// p_rec = 0 are skipped. Throws if no record is eligible.
double tfsr_trust(std::span<const InteractionRecord> records);

/// Weighted combination alpha_plr * t_plr + alpha_tfsr * t_tfsr. Weights must
/// be in [0,1] and sum to 1.
double direct_trust_tf(double t_plr, double t_tfsr, double alpha_plr, double alpha_tfsr);

/// Fraction of compute records with outcome 1. Requires at least one compute
/// record.
double direct_trust_ec(std::span<const InteractionRecord> records);

using WarningSink = std::function<void(const std::string&)>;

/// Builds the direct-trust interaction graph: one edge per (trustor, trustee)
/// pair with at least one record. Forward-record pairs get the weighted
/// PLR/TFSR combination; compute-record pairs get the execution success rate.
/// A pair whose forward records all have p_rec = 0 falls back to TFSR 0 and
/// reports a warning. Pure function of the record multiset (order-invariant).
InteractionGraph build_graph(std::span<const InteractionRecord> records, double alpha_plr,
                             double alpha_tfsr, const WarningSink& warn = {});

int trust_code_bits(int bin_count);  // ceil(log2 bin_count)

/// class_index = min(floor(t * bins), bins - 1); code is the LSB-first binary
/// expansion padded to trust_code_bits(bins).
TrustClass discretize(double trust, int bin_count);

/// Edge-list CSV; header: trustor,trustee,direct_trust,n_interactions
void export_graph_csv(const InteractionGraph& graph, const std::filesystem::path& path);
InteractionGraph load_graph_csv(const std::filesystem::path& path);

}  // namespace cste
