#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "cste/domain.hpp"
#include "cste/trustgraph.hpp"

namespace cste {

struct WalkParams {
    int dim = 128;
    double p = 1.0;
    double q = 1.0;
    int walk_length = 20;
    int walks_per_node = 10;
    int window = 5;
    int negatives = 5;
    int epochs = 5;
    double learning_rate = 0.025;
};

/// Per-device dense feature vectors, all of length `dim`.
struct EmbeddingTable {
    int dim = 0;
    std::map<DeviceId, std::vector<double>> vectors;

    const std::vector<double>& at(const DeviceId& id) const;
};

/// Walk corpus over the interaction graph, node ids replaced by indices into
/// `nodes` (the sorted vocabulary).
struct WalkCorpus {
    std::vector<DeviceId> nodes;
    std::vector<std::vector<int>> walks;
};

/// Second-order biased random walks over the undirected view of the graph.
/// Walks start `walks_per_node` times from every node; a node with no
/// neighbors yields single-step walks. Deterministic under seed, with
/// per-start-node seed derivation.
WalkCorpus generate_walks(const InteractionGraph& graph, const WalkParams& params,
                          std::uint64_t seed);

/// Walk + skip-gram embeddings. Isolated nodes get a seeded random unit-norm
/// vector and a warning.
EmbeddingTable init_embeddings(const InteractionGraph& graph, const WalkParams& params,
                               std::uint64_t seed, const WarningSink& warn = {});

/// Seeded Gaussian initializer, for tests and as a cheap stand-in when
/// embedding quality does not matter.
EmbeddingTable gaussian_embeddings(const std::vector<DeviceId>& nodes, int dim,
                                   std::uint64_t seed);

std::string embeddings_to_csv(const EmbeddingTable& table);
EmbeddingTable embeddings_from_csv(const std::string& text);

double cosine_similarity(const std::vector<double>& a, const std::vector<double>& b);

}  // namespace cste
