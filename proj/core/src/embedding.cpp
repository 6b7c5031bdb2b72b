#include "cste/embedding.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <random>
#include <sstream>
#include <stdexcept>

#include "cste/csvio.hpp"
#include "cste/rng.hpp"

namespace cste {

namespace {

std::vector<std::vector<int>> undirected_adjacency(const InteractionGraph& graph) {
    std::vector<std::vector<int>> adj(graph.nodes.size());
    auto index_of = [&](const DeviceId& id) {
        auto it = std::lower_bound(graph.nodes.begin(), graph.nodes.end(), id);
        return static_cast<int>(it - graph.nodes.begin());
    };
    for (const TrustEdge& e : graph.edges) {
        const int a = index_of(e.trustor);
        const int b = index_of(e.trustee);
        if (a == b) continue;
        adj[static_cast<std::size_t>(a)].push_back(b);
        adj[static_cast<std::size_t>(b)].push_back(a);
    }
    for (auto& nbrs : adj) {
        std::sort(nbrs.begin(), nbrs.end());
        nbrs.erase(std::unique(nbrs.begin(), nbrs.end()), nbrs.end());
    }
    return adj;
}

bool are_adjacent(const std::vector<int>& sorted_nbrs, int node) {
    return std::binary_search(sorted_nbrs.begin(), sorted_nbrs.end(), node);
}

int sample_weighted(const std::vector<double>& weights, Rng& rng) {
    double total = 0.0;
    for (double w : weights) total += w;
    std::uniform_real_distribution<double> dist(0.0, total);
    double x = dist(rng);
    for (std::size_t i = 0; i + 1 < weights.size(); ++i) {
        x -= weights[i];
        if (x < 0.0) return static_cast<int>(i);
    }
    return static_cast<int>(weights.size()) - 1;
}

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

}  // namespace

const std::vector<double>& EmbeddingTable::at(const DeviceId& id) const {
    auto it = vectors.find(id);
    if (it == vectors.end())
        throw std::out_of_range("embedding table: unknown device " + id.value);
    return it->second;
}

WalkCorpus generate_walks(const InteractionGraph& graph, const WalkParams& params,
                          std::uint64_t seed) {
    if (graph.nodes.empty()) throw std::invalid_argument("generate_walks: empty graph");
    if (params.walk_length < 1) throw std::invalid_argument("generate_walks: walk_length < 1");
    if (params.walks_per_node < 1)
        throw std::invalid_argument("generate_walks: walks_per_node < 1");
    if (params.p <= 0.0 || params.q <= 0.0)
        throw std::invalid_argument("generate_walks: p and q must be positive");

    const auto adj = undirected_adjacency(graph);
    WalkCorpus corpus;
    corpus.nodes = graph.nodes;
    corpus.walks.reserve(graph.nodes.size() * static_cast<std::size_t>(params.walks_per_node));

    std::vector<double> weights;
    for (std::size_t start = 0; start < graph.nodes.size(); ++start) {
        Rng rng = make_rng(derive_seed(seed, "walk:" + graph.nodes[start].value));
        for (int w = 0; w < params.walks_per_node; ++w) {
            std::vector<int> walk{static_cast<int>(start)};
            while (static_cast<int>(walk.size()) < params.walk_length) {
                const int cur = walk.back();
                const auto& nbrs = adj[static_cast<std::size_t>(cur)];
                if (nbrs.empty()) break;
                int next;
                if (walk.size() == 1) {
                    std::uniform_int_distribution<std::size_t> pick(0, nbrs.size() - 1);
                    next = nbrs[pick(rng)];
                } else {
                    const int prev = walk[walk.size() - 2];
                    weights.clear();
                    for (int cand : nbrs) {
                        if (cand == prev)
                            weights.push_back(1.0 / params.p);
                        else if (are_adjacent(adj[static_cast<std::size_t>(prev)], cand))
                            weights.push_back(1.0);
                        else
                            weights.push_back(1.0 / params.q);
                    }
                    next = nbrs[static_cast<std::size_t>(sample_weighted(weights, rng))];
                }
                walk.push_back(next);
            }
            corpus.walks.push_back(std::move(walk));
        }
    }
    return corpus;
}

EmbeddingTable init_embeddings(const InteractionGraph& graph, const WalkParams& params,
                               std::uint64_t seed, const WarningSink& warn) {
    if (params.dim < 1) throw std::invalid_argument("init_embeddings: dim < 1");
    auto emit = [&](const std::string& msg) {
        if (warn)
            warn(msg);
        else
            std::cerr << "warning: " << msg << "\n";
    };

    const WalkCorpus corpus = generate_walks(graph, params, derive_seed(seed, "walks"));
    const int n = static_cast<int>(corpus.nodes.size());
    const int dim = params.dim;

    std::vector<std::vector<double>> in(static_cast<std::size_t>(n),
                                        std::vector<double>(static_cast<std::size_t>(dim)));
    std::vector<std::vector<double>> out(static_cast<std::size_t>(n),
                                         std::vector<double>(static_cast<std::size_t>(dim), 0.0));
    {
        Rng rng = make_rng(derive_seed(seed, "init"));
        std::uniform_real_distribution<double> dist(-0.5 / dim, 0.5 / dim);
        for (auto& row : in)
            for (double& x : row) x = dist(rng);
    }

    // Noise distribution over nodes: corpus frequency raised to 3/4.
    std::vector<double> noise_cdf(static_cast<std::size_t>(n), 0.0);
    {
        std::vector<double> counts(static_cast<std::size_t>(n), 0.0);
        for (const auto& walk : corpus.walks)
            for (int node : walk) counts[static_cast<std::size_t>(node)] += 1.0;
        double acc = 0.0;
        for (int i = 0; i < n; ++i) {
            acc += std::pow(counts[static_cast<std::size_t>(i)], 0.75);
            noise_cdf[static_cast<std::size_t>(i)] = acc;
        }
        if (acc <= 0.0) noise_cdf.back() = 1.0;
    }
    auto sample_noise = [&](Rng& rng) {
        std::uniform_real_distribution<double> dist(0.0, noise_cdf.back());
        const double x = dist(rng);
        auto it = std::upper_bound(noise_cdf.begin(), noise_cdf.end(), x);
        if (it == noise_cdf.end()) --it;
        return static_cast<int>(it - noise_cdf.begin());
    };

    std::size_t total_centers = 0;
    for (const auto& walk : corpus.walks) total_centers += walk.size();
    total_centers *= static_cast<std::size_t>(std::max(params.epochs, 1));

    Rng rng = make_rng(derive_seed(seed, "sgns"));
    std::vector<double> center_grad(static_cast<std::size_t>(dim));
    std::size_t processed = 0;
    for (int epoch = 0; epoch < params.epochs; ++epoch) {
        for (const auto& walk : corpus.walks) {
            const int len = static_cast<int>(walk.size());
            for (int pos = 0; pos < len; ++pos, ++processed) {
                const double progress =
                    static_cast<double>(processed) / static_cast<double>(total_centers);
                const double lr =
                    std::max(params.learning_rate * (1.0 - progress), params.learning_rate * 1e-4);
                const int center = walk[static_cast<std::size_t>(pos)];
                auto& vc = in[static_cast<std::size_t>(center)];
                const int lo = std::max(0, pos - params.window);
                const int hi = std::min(len - 1, pos + params.window);
                for (int ctx = lo; ctx <= hi; ++ctx) {
                    if (ctx == pos) continue;
                    const int target = walk[static_cast<std::size_t>(ctx)];
                    std::fill(center_grad.begin(), center_grad.end(), 0.0);
                    for (int k = 0; k <= params.negatives; ++k) {
                        int sample;
                        double label;
                        if (k == 0) {
                            sample = target;
                            label = 1.0;
                        } else {
                            sample = sample_noise(rng);
                            if (sample == target) continue;
                            label = 0.0;
                        }
                        auto& vo = out[static_cast<std::size_t>(sample)];
                        double z = 0.0;
                        for (int d = 0; d < dim; ++d)
                            z += vc[static_cast<std::size_t>(d)] * vo[static_cast<std::size_t>(d)];
                        const double g = (label - sigmoid(z)) * lr;
                        for (int d = 0; d < dim; ++d) {
                            center_grad[static_cast<std::size_t>(d)] +=
                                g * vo[static_cast<std::size_t>(d)];
                            vo[static_cast<std::size_t>(d)] +=
                                g * vc[static_cast<std::size_t>(d)];
                        }
                    }
                    for (int d = 0; d < dim; ++d)
                        vc[static_cast<std::size_t>(d)] += center_grad[static_cast<std::size_t>(d)];
                }
            }
        }
    }

    const auto adj = undirected_adjacency(graph);
    EmbeddingTable table;
    table.dim = dim;
    for (int i = 0; i < n; ++i) {
        const DeviceId& id = corpus.nodes[static_cast<std::size_t>(i)];
        if (adj[static_cast<std::size_t>(i)].empty()) {
            Rng iso = make_rng(derive_seed(seed, "isolated:" + id.value));
            std::normal_distribution<double> gauss(0.0, 1.0);
            std::vector<double> vec(static_cast<std::size_t>(dim));
            double norm2 = 0.0;
            for (double& x : vec) {
                x = gauss(iso);
                norm2 += x * x;
            }
            const double inv = 1.0 / std::sqrt(norm2);
            for (double& x : vec) x *= inv;
            table.vectors.emplace(id, std::move(vec));
            emit("device " + id.value + " has no graph neighbors; using a random unit vector");
        } else {
            table.vectors.emplace(id, in[static_cast<std::size_t>(i)]);
        }
    }
    return table;
}

EmbeddingTable gaussian_embeddings(const std::vector<DeviceId>& nodes, int dim,
                                   std::uint64_t seed) {
    if (dim < 1) throw std::invalid_argument("gaussian_embeddings: dim < 1");
    EmbeddingTable table;
    table.dim = dim;
    const double scale = 1.0 / std::sqrt(static_cast<double>(dim));
    for (const DeviceId& id : nodes) {
        Rng rng = make_rng(derive_seed(seed, "gauss:" + id.value));
        std::normal_distribution<double> gauss(0.0, 1.0);
        std::vector<double> vec(static_cast<std::size_t>(dim));
        for (double& x : vec) x = gauss(rng) * scale;
        table.vectors.emplace(id, std::move(vec));
    }
    return table;
}

std::string embeddings_to_csv(const EmbeddingTable& table) {
    std::ostringstream os;
    os << "device";
    for (int d = 0; d < table.dim; ++d) os << ",e" << d;
    os << "\n";
    for (const auto& [id, vec] : table.vectors) {
        os << id.value;
        for (double x : vec) os << ',' << format_double(x);
        os << "\n";
    }
    return os.str();
}

EmbeddingTable embeddings_from_csv(const std::string& text) {
    const auto lines = split_lines(text);
    if (lines.empty()) throw std::runtime_error("embeddings csv: empty input");
    const auto header = split_csv_line(lines[0]);
    if (header.empty() || header[0] != "device")
        throw std::runtime_error("embeddings csv: bad header");
    EmbeddingTable table;
    table.dim = static_cast<int>(header.size()) - 1;
    if (table.dim < 1) throw std::runtime_error("embeddings csv: no value columns");
    for (std::size_t i = 1; i < lines.size(); ++i) {
        const auto fields = split_csv_line(lines[i]);
        if (fields.size() != header.size())
            throw std::runtime_error("embeddings csv: row " + std::to_string(i + 1) +
                                     " has wrong field count");
        std::vector<double> vec;
        vec.reserve(static_cast<std::size_t>(table.dim));
        for (std::size_t f = 1; f < fields.size(); ++f)
            vec.push_back(parse_double(fields[f], "embeddings csv row " + std::to_string(i + 1)));
        if (!table.vectors.emplace(DeviceId{fields[0]}, std::move(vec)).second)
            throw std::runtime_error("embeddings csv: duplicate device " + fields[0]);
    }
    return table;
}

double cosine_similarity(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size())
        throw std::invalid_argument("cosine_similarity: length mismatch");
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        dot += a[i] * b[i];
        na += a[i] * a[i];
        nb += b[i] * b[i];
    }
    if (na == 0.0 || nb == 0.0) return 0.0;
    return dot / (std::sqrt(na) * std::sqrt(nb));
}

}  // namespace cste
