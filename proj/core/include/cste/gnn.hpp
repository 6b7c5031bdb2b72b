#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "cste/autodiff.hpp"
#include "cste/domain.hpp"
#include "cste/embedding.hpp"
#include "cste/trustgraph.hpp"

namespace cste {

/// How a class distribution is reduced to a single trust value.
/// MaxProb takes the top probability, so the result is a confidence and is
/// bounded below by 1/B. ExpectedBin takes sum p_k * (k + 0.5) / B, the
/// probability-weighted bin midpoint.
enum class TrustMode { MaxProb, ExpectedBin };

std::string to_string(TrustMode mode);
TrustMode trust_mode_from_string(const std::string& s);

struct GnnHyper {
    std::vector<int> dims = {128, 32, 64, 32};  // input dim, then one output dim per layer
    int bins = 10;
    int code_bits = 4;  // derived from bins at init time
    int head_hidden = 32;
    double learning_rate = 5e-3;
    double l2 = 1e-5;
    double dropout = 0.1;
    int epochs = 100;
    int batch_size = 128;
    double train_fraction = 0.8;
    TrustMode trust_mode = TrustMode::MaxProb;
};

struct LayerParams {
    Tensor w_in_msg;    // d_in x code_bits, transforms codes on edges where the node is trustee
    Tensor w_out_msg;   // d_in x code_bits, trustor side
    Tensor w_attn;      // d_in x d_in, shared attention transform
    Tensor a_attn;      // 2*d_in x 1, attention scoring vector
    Tensor w_fuse_tf;   // d_out x 4*d_in
    Tensor b_fuse_tf;   // d_out x 1
    Tensor w_fuse_ec;   // d_out x 2*d_in
    Tensor b_fuse_ec;   // d_out x 1
};

struct HeadParams {
    Tensor w1;  // hidden x 2*d_out
    Tensor b1;  // hidden x 1
    Tensor w2;  // bins x hidden
    Tensor b2;  // bins x 1
};

struct GnnModel {
    GnnHyper hyper;
    std::vector<LayerParams> layers;
    HeadParams head;
};

/// Fixed enumeration of a model's parameter tensors; gradients, optimizer
/// state, and checkpoints all follow this order.
std::vector<Tensor*> model_tensors(GnnModel& model);
std::vector<const Tensor*> model_tensors(const GnnModel& model);

GnnModel init_model(const GnnHyper& hyper, std::uint64_t seed);

struct GnnEdge {
    int nbr = 0;               // other endpoint's node index
    double count = 0.0;        // interaction count behind the edge
    std::vector<double> code;  // binary trust code, LSB first
};

/// Interaction graph compiled to index form for the network: per-node edge
/// lists, per-edge trust codes, and class labels for supervision.
struct GnnGraph {
    std::vector<DeviceId> nodes;   // sorted
    std::vector<DeviceKind> kinds;
    std::vector<std::vector<GnnEdge>> in_edges;   // edges (nbr -> node)
    std::vector<std::vector<GnnEdge>> out_edges;  // edges (node -> nbr)
    std::vector<std::pair<int, int>> labeled_edges;  // (trustor, trustee) indices
    std::vector<int> labels;                         // trust class per labeled edge
    int bins = 0;

    int node_index(const DeviceId& id) const;
};

GnnGraph compile_graph(const InteractionGraph& graph,
                       const std::map<DeviceId, DeviceKind>& kinds, int bins);

/// Embedding table reordered to match graph.nodes.
std::vector<std::vector<double>> index_embeddings(const GnnGraph& graph,
                                                  const EmbeddingTable& table);

// ---- forward building blocks ------------------------------------------

/// Concatenation of the source embedding with the transformed trust code.
std::vector<double> message(const std::vector<double>& h_src,
                            const std::vector<std::uint8_t>& trust_code, const Tensor& w_msg);

struct AttentionBreakdown {
    std::vector<double> scores;         // LeakyReLU attention scores
    std::vector<double> first_softmax;
    std::vector<double> scaled;         // after interaction-count scaling
    std::vector<double> weights;        // final, sums to 1
};

/// Attention pipeline: score, softmax, scale by count fraction, softmax.
std::vector<double> neighbor_weights(const std::vector<double>& h_center,
                                     const std::vector<std::vector<double>>& neighbor_hs,
                                     const std::vector<double>& n_counts,
                                     const LayerParams& layer);
AttentionBreakdown neighbor_weights_detailed(const std::vector<double>& h_center,
                                             const std::vector<std::vector<double>>& neighbor_hs,
                                             const std::vector<double>& n_counts,
                                             const LayerParams& layer);

/// One propagation layer for a terminal node: attention-weighted message
/// aggregates over in- and out-edges, fused through a ReLU layer. A missing
/// side contributes a zero vector.
std::vector<double> tf_layer_forward(int node, const GnnGraph& graph,
                                     const std::vector<std::vector<double>>& h,
                                     const LayerParams& layer);

/// One propagation layer for an edge-computing node: in-side aggregate only,
/// projected to the layer's output width.
std::vector<double> ec_layer_forward(int node, const GnnGraph& graph,
                                     const std::vector<std::vector<double>>& h,
                                     const LayerParams& layer);

/// Runs all layers synchronously and returns the final per-device vectors.
EmbeddingTable forward_all(const GnnGraph& graph, const EmbeddingTable& embeddings,
                           const GnnModel& model);

/// Class distribution for the ordered pair (trustor, trustee).
std::vector<double> predict(const std::vector<double>& h_trustor,
                            const std::vector<double>& h_trustee, const HeadParams& head);

double historical_trust(const std::vector<double>& probs, TrustMode mode);

/// Mean negative log-likelihood of the labels plus l2 * squared parameter norm.
double loss(const std::vector<std::vector<double>>& predictions, const std::vector<int>& labels,
            const GnnModel& model, double l2);

// ---- training -----------------------------------------------------------

/// Full forward + loss over one batch of labeled-edge indices, evaluation
/// mode (no dropout).
double batch_loss(const GnnModel& model, const GnnGraph& graph,
                  const std::vector<std::vector<double>>& embeddings,
                  std::span<const int> edge_indices);

/// Reverse-mode gradients of batch_loss, one tensor per model_tensors entry.
std::vector<Tensor> batch_gradients(const GnnModel& model, const GnnGraph& graph,
                                    const std::vector<std::vector<double>>& embeddings,
                                    std::span<const int> edge_indices,
                                    double* loss_out = nullptr);

struct TrainedTrust {
    std::map<std::pair<DeviceId, DeviceId>, double> values;

    double at(const DeviceId& trustor, const DeviceId& trustee) const;
};

struct EpochMetrics {
    int epoch = 0;        // 0 is the pre-training state
    double train_loss = 0.0;
    double test_loss = 0.0;
    double test_acc = 0.0;
};

struct TrainResult {
    GnnModel model;
    TrainedTrust trust;
    std::vector<EpochMetrics> metrics;
};

/// Trains on the graph's labeled edges (seeded 80/20 split, mini-batches,
/// adaptive moments, dropout on node embeddings at training time) and
/// predicts trust for every ordered (terminal, other-device) pair.
TrainResult train(const InteractionGraph& graph, const std::map<DeviceId, DeviceKind>& kinds,
                  const EmbeddingTable& embeddings, const GnnHyper& hyper, std::uint64_t seed);

// ---- serialization ------------------------------------------------------

std::string model_to_json(const GnnModel& model);
GnnModel model_from_json(const std::string& text);

extern const char* const kMetricsCsvHeader;  // "epoch,train_loss,test_loss,test_acc"
std::string metrics_to_csv(const std::vector<EpochMetrics>& metrics);

extern const char* const kTrustCsvHeader;  // "trustor,trustee,t_his"
std::string trust_to_csv(const TrainedTrust& trust);
TrainedTrust trust_from_csv(const std::string& text);

}  // namespace cste
