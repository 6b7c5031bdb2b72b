#include "cste/gnn.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "cste/csvio.hpp"
#include "cste/rng.hpp"

namespace cste {

namespace {

constexpr double kLeakySlope = 0.2;
constexpr double kProbClamp = 1e-12;

struct TapeLayerIds {
    Tape::Id w_in_msg, w_out_msg, w_attn, a_attn;
    Tape::Id w_fuse_tf, b_fuse_tf, w_fuse_ec, b_fuse_ec;
};

struct TapeHeadIds {
    Tape::Id w1, b1, w2, b2;
};

struct TapeModelIds {
    std::vector<TapeLayerIds> layers;
    TapeHeadIds head;
    std::vector<Tape::Id> flat;  // model_tensors order
};

TapeLayerIds stage_layer(Tape& t, const LayerParams& layer) {
    TapeLayerIds ids;
    ids.w_in_msg = t.leaf(layer.w_in_msg);
    ids.w_out_msg = t.leaf(layer.w_out_msg);
    ids.w_attn = t.leaf(layer.w_attn);
    ids.a_attn = t.leaf(layer.a_attn);
    ids.w_fuse_tf = t.leaf(layer.w_fuse_tf);
    ids.b_fuse_tf = t.leaf(layer.b_fuse_tf);
    ids.w_fuse_ec = t.leaf(layer.w_fuse_ec);
    ids.b_fuse_ec = t.leaf(layer.b_fuse_ec);
    return ids;
}

TapeHeadIds stage_head(Tape& t, const HeadParams& head) {
    return TapeHeadIds{t.leaf(head.w1), t.leaf(head.b1), t.leaf(head.w2), t.leaf(head.b2)};
}

TapeModelIds stage_model(Tape& t, const GnnModel& model) {
    TapeModelIds ids;
    for (const LayerParams& layer : model.layers) {
        TapeLayerIds li = stage_layer(t, layer);
        ids.layers.push_back(li);
        for (Tape::Id id : {li.w_in_msg, li.w_out_msg, li.w_attn, li.a_attn, li.w_fuse_tf,
                            li.b_fuse_tf, li.w_fuse_ec, li.b_fuse_ec})
            ids.flat.push_back(id);
    }
    ids.head = stage_head(t, model.head);
    for (Tape::Id id : {ids.head.w1, ids.head.b1, ids.head.w2, ids.head.b2})
        ids.flat.push_back(id);
    return ids;
}

struct AttentionStageIds {
    Tape::Id scores = -1;
    Tape::Id first = -1;
    Tape::Id scaled = -1;
    Tape::Id psi = -1;
};

/// Attention over pre-transformed neighbor embeddings: LeakyReLU scores,
/// softmax, interaction-count scaling, softmax.
Tape::Id attention_psi(Tape& t, Tape::Id a_attn, Tape::Id wh_center,
                       std::span<const Tape::Id> wh_nbrs, const std::vector<double>& counts,
                       AttentionStageIds* stages = nullptr) {
    std::vector<Tape::Id> scores;
    scores.reserve(wh_nbrs.size());
    for (Tape::Id wh_nbr : wh_nbrs) {
        Tape::Id cat = t.concat(wh_center, wh_nbr);
        scores.push_back(t.leaky_relu(t.dot(a_attn, cat), kLeakySlope));
    }
    Tape::Id score_vec = t.stack(scores);
    Tape::Id first = t.softmax(score_vec);
    double total = 0.0;
    for (double c : counts) total += c;
    Tensor frac(static_cast<int>(counts.size()), 1);
    for (std::size_t i = 0; i < counts.size(); ++i) frac.v[i] = counts[i] / total;
    Tape::Id scaled = t.mul_elem_const(first, std::move(frac));
    Tape::Id psi = t.softmax(scaled);
    if (stages) *stages = AttentionStageIds{score_vec, first, scaled, psi};
    return psi;
}

/// Attention-weighted sum of edge messages for one side of a node. An empty
/// edge list yields a zero vector of the message width.
Tape::Id side_aggregate(Tape& t, int node, const std::vector<GnnEdge>& edges, Tape::Id w_msg,
                        Tape::Id a_attn, const std::vector<Tape::Id>& h,
                        const std::vector<Tape::Id>& wh, int d_in) {
    if (edges.empty()) return t.leaf(Tensor(2 * d_in, 1, 0.0));
    std::vector<Tape::Id> msgs, wh_nbrs;
    std::vector<double> counts;
    msgs.reserve(edges.size());
    for (const GnnEdge& e : edges) {
        Tape::Id code = t.leaf(Tensor::vec(e.code));
        msgs.push_back(t.concat(h[static_cast<std::size_t>(e.nbr)], t.matvec(w_msg, code)));
        wh_nbrs.push_back(wh[static_cast<std::size_t>(e.nbr)]);
        counts.push_back(e.count);
    }
    Tape::Id psi =
        attention_psi(t, a_attn, wh[static_cast<std::size_t>(node)], wh_nbrs, counts);
    return t.weighted_sum(psi, msgs);
}

Tape::Id node_forward(Tape& t, const GnnGraph& g, int node, const std::vector<Tape::Id>& h,
                      const std::vector<Tape::Id>& wh, const TapeLayerIds& L, int d_in) {
    const auto ni = static_cast<std::size_t>(node);
    Tape::Id in_agg = side_aggregate(t, node, g.in_edges[ni], L.w_in_msg, L.a_attn, h, wh, d_in);
    if (g.kinds[ni] == DeviceKind::Terminal) {
        Tape::Id out_agg =
            side_aggregate(t, node, g.out_edges[ni], L.w_out_msg, L.a_attn, h, wh, d_in);
        Tape::Id cat = t.concat(in_agg, out_agg);
        return t.relu(t.add(t.matvec(L.w_fuse_tf, cat), L.b_fuse_tf));
    }
    return t.relu(t.add(t.matvec(L.w_fuse_ec, in_agg), L.b_fuse_ec));
}

/// Synchronous layer stack over all nodes. When dropout_rng is set, node
/// embeddings are masked (inverted dropout) after every layer.
std::vector<Tape::Id> graph_forward(Tape& t, const GnnGraph& g, const TapeModelIds& ids,
                                    const std::vector<std::vector<double>>& emb,
                                    const GnnHyper& hyper, Rng* dropout_rng) {
    const std::size_t n = g.nodes.size();
    std::vector<Tape::Id> h;
    h.reserve(n);
    for (std::size_t i = 0; i < n; ++i) h.push_back(t.leaf(Tensor::vec(emb[i])));

    for (std::size_t l = 0; l < ids.layers.size(); ++l) {
        const TapeLayerIds& L = ids.layers[l];
        const int d_in = hyper.dims[l];
        const int d_out = hyper.dims[l + 1];
        std::vector<Tape::Id> wh;
        wh.reserve(n);
        for (std::size_t i = 0; i < n; ++i) wh.push_back(t.matvec(L.w_attn, h[i]));
        std::vector<Tape::Id> hn;
        hn.reserve(n);
        for (std::size_t i = 0; i < n; ++i)
            hn.push_back(node_forward(t, g, static_cast<int>(i), h, wh, L, d_in));
        if (dropout_rng && hyper.dropout > 0.0) {
            const double keep = 1.0 - hyper.dropout;
            std::bernoulli_distribution kept(keep);
            for (std::size_t i = 0; i < n; ++i) {
                Tensor mask(d_out, 1);
                for (double& m : mask.v) m = kept(*dropout_rng) ? 1.0 / keep : 0.0;
                hn[i] = t.mul_elem_const(hn[i], std::move(mask));
            }
        }
        h = std::move(hn);
    }
    return h;
}

Tape::Id head_probs(Tape& t, const TapeHeadIds& H, Tape::Id h_trustor, Tape::Id h_trustee) {
    Tape::Id z = t.concat(h_trustor, h_trustee);
    Tape::Id hidden = t.relu(t.add(t.matvec(H.w1, z), H.b1));
    Tape::Id logits = t.add(t.matvec(H.w2, hidden), H.b2);
    return t.softmax(logits);
}

struct LossTape {
    Tape tape;
    std::vector<Tape::Id> params;
    Tape::Id loss_id = -1;
};

LossTape build_loss_tape(const GnnModel& model, const GnnGraph& g,
                         const std::vector<std::vector<double>>& emb,
                         std::span<const int> edge_indices, Rng* dropout_rng) {
    if (edge_indices.empty()) throw std::invalid_argument("loss: empty batch");
    LossTape lt;
    TapeModelIds ids = stage_model(lt.tape, model);
    lt.params = ids.flat;
    std::vector<Tape::Id> h = graph_forward(lt.tape, g, ids, emb, model.hyper, dropout_rng);

    std::vector<Tape::Id> nlls;
    nlls.reserve(edge_indices.size());
    for (int ei : edge_indices) {
        const auto [u, v] = g.labeled_edges[static_cast<std::size_t>(ei)];
        Tape::Id probs = head_probs(lt.tape, ids.head, h[static_cast<std::size_t>(u)],
                                    h[static_cast<std::size_t>(v)]);
        Tape::Id lp = lt.tape.log_at(probs, g.labels[static_cast<std::size_t>(ei)], kProbClamp);
        nlls.push_back(lt.tape.scale(lp, -1.0));
    }
    Tape::Id data = lt.tape.mean(nlls);
    Tape::Id norm = lt.tape.sum_squares(lt.params[0]);
    for (std::size_t i = 1; i < lt.params.size(); ++i)
        norm = lt.tape.add(norm, lt.tape.sum_squares(lt.params[i]));
    lt.loss_id = lt.tape.add(data, lt.tape.scale(norm, model.hyper.l2));
    return lt;
}

Tensor xavier(int rows, int cols, Rng& rng) {
    const double limit = std::sqrt(6.0 / static_cast<double>(rows + cols));
    std::uniform_real_distribution<double> dist(-limit, limit);
    Tensor t(rows, cols);
    for (double& x : t.v) x = dist(rng);
    return t;
}

void validate_hyper(const GnnHyper& h) {
    if (h.dims.size() < 2) throw std::invalid_argument("hyper: dims needs input + one layer");
    for (int d : h.dims)
        if (d < 1) throw std::invalid_argument("hyper: nonpositive dimension");
    if (h.bins < 2) throw std::invalid_argument("hyper: bins must be >= 2");
    if (h.head_hidden < 1) throw std::invalid_argument("hyper: head_hidden must be >= 1");
    if (h.learning_rate <= 0.0) throw std::invalid_argument("hyper: learning rate must be > 0");
    if (h.l2 < 0.0) throw std::invalid_argument("hyper: l2 must be >= 0");
    if (h.dropout < 0.0 || h.dropout >= 1.0)
        throw std::invalid_argument("hyper: dropout must be in [0,1)");
    if (h.epochs < 0) throw std::invalid_argument("hyper: epochs must be >= 0");
    if (h.batch_size < 1) throw std::invalid_argument("hyper: batch_size must be >= 1");
    if (h.train_fraction <= 0.0 || h.train_fraction >= 1.0)
        throw std::invalid_argument("hyper: train_fraction must be in (0,1)");
}

nlohmann::json tensor_to_json(const Tensor& t) {
    return nlohmann::json{{"rows", t.rows}, {"cols", t.cols}, {"v", t.v}};
}

Tensor tensor_from_json(const nlohmann::json& j) {
    Tensor t;
    t.rows = j.at("rows").get<int>();
    t.cols = j.at("cols").get<int>();
    t.v = j.at("v").get<std::vector<double>>();
    if (t.rows < 0 || t.cols < 0 ||
        t.v.size() != static_cast<std::size_t>(t.rows) * static_cast<std::size_t>(t.cols))
        throw std::runtime_error("model json: tensor shape/value mismatch");
    return t;
}

}  // namespace

std::string to_string(TrustMode mode) {
    return mode == TrustMode::MaxProb ? "max_prob" : "expected_bin";
}

TrustMode trust_mode_from_string(const std::string& s) {
    if (s == "max_prob") return TrustMode::MaxProb;
    if (s == "expected_bin") return TrustMode::ExpectedBin;
    throw std::runtime_error("unknown trust mode: " + s);
}

std::vector<Tensor*> model_tensors(GnnModel& model) {
    std::vector<Tensor*> out;
    for (LayerParams& L : model.layers)
        for (Tensor* t : {&L.w_in_msg, &L.w_out_msg, &L.w_attn, &L.a_attn, &L.w_fuse_tf,
                          &L.b_fuse_tf, &L.w_fuse_ec, &L.b_fuse_ec})
            out.push_back(t);
    for (Tensor* t : {&model.head.w1, &model.head.b1, &model.head.w2, &model.head.b2})
        out.push_back(t);
    return out;
}

std::vector<const Tensor*> model_tensors(const GnnModel& model) {
    std::vector<const Tensor*> out;
    for (const LayerParams& L : model.layers)
        for (const Tensor* t : {&L.w_in_msg, &L.w_out_msg, &L.w_attn, &L.a_attn, &L.w_fuse_tf,
                                &L.b_fuse_tf, &L.w_fuse_ec, &L.b_fuse_ec})
            out.push_back(t);
    for (const Tensor* t : {&model.head.w1, &model.head.b1, &model.head.w2, &model.head.b2})
        out.push_back(t);
    return out;
}

GnnModel init_model(const GnnHyper& hyper, std::uint64_t seed) {
    validate_hyper(hyper);
    GnnModel model;
    model.hyper = hyper;
    model.hyper.code_bits = trust_code_bits(hyper.bins);
    Rng rng = make_rng(derive_seed(seed, "xavier"));
    const int code_bits = model.hyper.code_bits;
    for (std::size_t l = 0; l + 1 < hyper.dims.size(); ++l) {
        const int d_in = hyper.dims[l];
        const int d_out = hyper.dims[l + 1];
        LayerParams L;
        L.w_in_msg = xavier(d_in, code_bits, rng);
        L.w_out_msg = xavier(d_in, code_bits, rng);
        L.w_attn = xavier(d_in, d_in, rng);
        L.a_attn = xavier(2 * d_in, 1, rng);
        L.w_fuse_tf = xavier(d_out, 4 * d_in, rng);
        L.b_fuse_tf = Tensor(d_out, 1, 0.0);
        L.w_fuse_ec = xavier(d_out, 2 * d_in, rng);
        L.b_fuse_ec = Tensor(d_out, 1, 0.0);
        model.layers.push_back(std::move(L));
    }
    const int d_final = hyper.dims.back();
    model.head.w1 = xavier(hyper.head_hidden, 2 * d_final, rng);
    model.head.b1 = Tensor(hyper.head_hidden, 1, 0.0);
    model.head.w2 = xavier(hyper.bins, hyper.head_hidden, rng);
    model.head.b2 = Tensor(hyper.bins, 1, 0.0);
    return model;
}

int GnnGraph::node_index(const DeviceId& id) const {
    auto it = std::lower_bound(nodes.begin(), nodes.end(), id);
    if (it == nodes.end() || *it != id)
        throw std::out_of_range("graph: unknown device " + id.value);
    return static_cast<int>(it - nodes.begin());
}

GnnGraph compile_graph(const InteractionGraph& graph,
                       const std::map<DeviceId, DeviceKind>& kinds, int bins) {
    if (graph.nodes.empty()) throw std::invalid_argument("compile_graph: empty graph");
    GnnGraph g;
    g.nodes = graph.nodes;
    g.bins = bins;
    g.kinds.reserve(g.nodes.size());
    for (const DeviceId& id : g.nodes) {
        auto it = kinds.find(id);
        if (it == kinds.end())
            throw std::invalid_argument("compile_graph: no device kind for " + id.value);
        g.kinds.push_back(it->second);
    }
    g.in_edges.resize(g.nodes.size());
    g.out_edges.resize(g.nodes.size());
    for (const TrustEdge& e : graph.edges) {
        const int u = g.node_index(e.trustor);
        const int v = g.node_index(e.trustee);
        if (g.kinds[static_cast<std::size_t>(u)] == DeviceKind::Edge)
            throw std::invalid_argument("compile_graph: trustor " + e.trustor.value +
                                        " is an edge device; edge devices only act as trustees");
        const TrustClass tc = discretize(e.direct_trust, bins);
        std::vector<double> code(tc.code.begin(), tc.code.end());
        const double count = static_cast<double>(e.n_interactions);
        g.out_edges[static_cast<std::size_t>(u)].push_back(GnnEdge{v, count, code});
        g.in_edges[static_cast<std::size_t>(v)].push_back(GnnEdge{u, count, std::move(code)});
        g.labeled_edges.emplace_back(u, v);
        g.labels.push_back(tc.class_index);
    }
    return g;
}

std::vector<std::vector<double>> index_embeddings(const GnnGraph& graph,
                                                  const EmbeddingTable& table) {
    std::vector<std::vector<double>> out;
    out.reserve(graph.nodes.size());
    for (const DeviceId& id : graph.nodes) {
        const auto& vec = table.at(id);
        if (static_cast<int>(vec.size()) != table.dim)
            throw std::invalid_argument("embedding table: inconsistent vector length for " +
                                        id.value);
        out.push_back(vec);
    }
    return out;
}

std::vector<double> message(const std::vector<double>& h_src,
                            const std::vector<std::uint8_t>& trust_code, const Tensor& w_msg) {
    if (w_msg.rows != static_cast<int>(h_src.size()) ||
        w_msg.cols != static_cast<int>(trust_code.size()))
        throw std::invalid_argument("message: dimension mismatch");
    Tape t;
    Tape::Id h = t.leaf(Tensor::vec(h_src));
    Tape::Id chi = t.leaf(Tensor::vec(std::vector<double>(trust_code.begin(), trust_code.end())));
    Tape::Id mu = t.concat(h, t.matvec(t.leaf(w_msg), chi));
    return t.val(mu).v;
}

AttentionBreakdown neighbor_weights_detailed(const std::vector<double>& h_center,
                                             const std::vector<std::vector<double>>& neighbor_hs,
                                             const std::vector<double>& n_counts,
                                             const LayerParams& layer) {
    if (neighbor_hs.empty()) throw std::invalid_argument("neighbor_weights: no neighbors");
    if (neighbor_hs.size() != n_counts.size())
        throw std::invalid_argument("neighbor_weights: counts/neighbors size mismatch");
    for (double c : n_counts)
        if (c < 1.0) throw std::invalid_argument("neighbor_weights: counts must be >= 1");
    Tape t;
    Tape::Id w_attn = t.leaf(layer.w_attn);
    Tape::Id a_attn = t.leaf(layer.a_attn);
    Tape::Id wh_center = t.matvec(w_attn, t.leaf(Tensor::vec(h_center)));
    std::vector<Tape::Id> wh_nbrs;
    wh_nbrs.reserve(neighbor_hs.size());
    for (const auto& nbr : neighbor_hs)
        wh_nbrs.push_back(t.matvec(w_attn, t.leaf(Tensor::vec(nbr))));
    AttentionStageIds st;
    attention_psi(t, a_attn, wh_center, wh_nbrs, n_counts, &st);
    AttentionBreakdown out;
    out.scores = t.val(st.scores).v;
    out.first_softmax = t.val(st.first).v;
    out.scaled = t.val(st.scaled).v;
    out.weights = t.val(st.psi).v;
    return out;
}

std::vector<double> neighbor_weights(const std::vector<double>& h_center,
                                     const std::vector<std::vector<double>>& neighbor_hs,
                                     const std::vector<double>& n_counts,
                                     const LayerParams& layer) {
    return neighbor_weights_detailed(h_center, neighbor_hs, n_counts, layer).weights;
}

namespace {

std::vector<double> single_node_forward(int node, const GnnGraph& graph,
                                        const std::vector<std::vector<double>>& h,
                                        const LayerParams& layer, DeviceKind expected,
                                        const char* op) {
    if (node < 0 || static_cast<std::size_t>(node) >= graph.nodes.size())
        throw std::invalid_argument(std::string(op) + ": node index out of range");
    if (graph.kinds[static_cast<std::size_t>(node)] != expected)
        throw std::invalid_argument(std::string(op) + ": wrong device kind for node " +
                                    graph.nodes[static_cast<std::size_t>(node)].value);
    if (h.size() != graph.nodes.size())
        throw std::invalid_argument(std::string(op) + ": embedding count mismatch");
    Tape t;
    TapeLayerIds L = stage_layer(t, layer);
    std::vector<Tape::Id> hid, wh;
    hid.reserve(h.size());
    wh.reserve(h.size());
    for (const auto& vec : h) {
        Tape::Id id = t.leaf(Tensor::vec(vec));
        hid.push_back(id);
        wh.push_back(t.matvec(L.w_attn, id));
    }
    Tape::Id out = node_forward(t, graph, node, hid, wh, L, layer.w_attn.rows);
    return t.val(out).v;
}

}  // namespace

std::vector<double> tf_layer_forward(int node, const GnnGraph& graph,
                                     const std::vector<std::vector<double>>& h,
                                     const LayerParams& layer) {
    return single_node_forward(node, graph, h, layer, DeviceKind::Terminal, "tf_layer_forward");
}

std::vector<double> ec_layer_forward(int node, const GnnGraph& graph,
                                     const std::vector<std::vector<double>>& h,
                                     const LayerParams& layer) {
    return single_node_forward(node, graph, h, layer, DeviceKind::Edge, "ec_layer_forward");
}

EmbeddingTable forward_all(const GnnGraph& graph, const EmbeddingTable& embeddings,
                           const GnnModel& model) {
    if (embeddings.dim != model.hyper.dims.front())
        throw std::invalid_argument("forward_all: embedding dim does not match model input dim");
    const auto emb = index_embeddings(graph, embeddings);
    Tape t;
    TapeModelIds ids = stage_model(t, model);
    std::vector<Tape::Id> h = graph_forward(t, graph, ids, emb, model.hyper, nullptr);
    EmbeddingTable out;
    out.dim = model.hyper.dims.back();
    for (std::size_t i = 0; i < graph.nodes.size(); ++i)
        out.vectors.emplace(graph.nodes[i], t.val(h[i]).v);
    return out;
}

std::vector<double> predict(const std::vector<double>& h_trustor,
                            const std::vector<double>& h_trustee, const HeadParams& head) {
    Tape t;
    TapeHeadIds H = stage_head(t, head);
    Tape::Id probs =
        head_probs(t, H, t.leaf(Tensor::vec(h_trustor)), t.leaf(Tensor::vec(h_trustee)));
    return t.val(probs).v;
}

double historical_trust(const std::vector<double>& probs, TrustMode mode) {
    if (probs.empty()) throw std::invalid_argument("historical_trust: empty distribution");
    if (mode == TrustMode::MaxProb) return *std::max_element(probs.begin(), probs.end());
    const double bins = static_cast<double>(probs.size());
    double t = 0.0;
    for (std::size_t k = 0; k < probs.size(); ++k)
        t += probs[k] * (static_cast<double>(k) + 0.5) / bins;
    return t;
}

double loss(const std::vector<std::vector<double>>& predictions, const std::vector<int>& labels,
            const GnnModel& model, double l2) {
    if (predictions.empty()) throw std::invalid_argument("loss: empty batch");
    if (predictions.size() != labels.size())
        throw std::invalid_argument("loss: predictions/labels size mismatch");
    double nll = 0.0;
    for (std::size_t i = 0; i < predictions.size(); ++i) {
        const int label = labels[i];
        if (label < 0 || static_cast<std::size_t>(label) >= predictions[i].size())
            throw std::invalid_argument("loss: label out of range");
        nll -= std::log(std::max(predictions[i][static_cast<std::size_t>(label)], kProbClamp));
    }
    nll /= static_cast<double>(predictions.size());
    double norm = 0.0;
    for (const Tensor* t : model_tensors(model))
        for (double x : t->v) norm += x * x;
    return nll + l2 * norm;
}

double batch_loss(const GnnModel& model, const GnnGraph& graph,
                  const std::vector<std::vector<double>>& embeddings,
                  std::span<const int> edge_indices) {
    LossTape lt = build_loss_tape(model, graph, embeddings, edge_indices, nullptr);
    return lt.tape.val(lt.loss_id).v[0];
}

std::vector<Tensor> batch_gradients(const GnnModel& model, const GnnGraph& graph,
                                    const std::vector<std::vector<double>>& embeddings,
                                    std::span<const int> edge_indices, double* loss_out) {
    LossTape lt = build_loss_tape(model, graph, embeddings, edge_indices, nullptr);
    lt.tape.backward(lt.loss_id);
    if (loss_out) *loss_out = lt.tape.val(lt.loss_id).v[0];
    std::vector<Tensor> grads;
    grads.reserve(lt.params.size());
    for (Tape::Id id : lt.params) grads.push_back(lt.tape.grad(id));
    return grads;
}

double TrainedTrust::at(const DeviceId& trustor, const DeviceId& trustee) const {
    auto it = values.find({trustor, trustee});
    if (it == values.end())
        throw std::out_of_range("no predicted trust for pair (" + trustor.value + ", " +
                                trustee.value + ")");
    return it->second;
}

namespace {

double l2_norm_sq(const GnnModel& model) {
    double norm = 0.0;
    for (const Tensor* t : model_tensors(model))
        for (double x : t->v) norm += x * x;
    return norm;
}

EpochMetrics evaluate_epoch(int epoch, const GnnModel& model, const GnnGraph& g,
                            const std::vector<std::vector<double>>& emb,
                            std::span<const int> train_idx, std::span<const int> test_idx) {
    Tape t;
    TapeModelIds ids = stage_model(t, model);
    std::vector<Tape::Id> h = graph_forward(t, g, ids, emb, model.hyper, nullptr);
    const double reg = model.hyper.l2 * l2_norm_sq(model);

    auto probs_for = [&](int ei) {
        const auto [u, v] = g.labeled_edges[static_cast<std::size_t>(ei)];
        Tape::Id p = head_probs(t, ids.head, h[static_cast<std::size_t>(u)],
                                h[static_cast<std::size_t>(v)]);
        return t.val(p).v;
    };
    auto mean_nll = [&](std::span<const int> idx) {
        double s = 0.0;
        for (int ei : idx) {
            const auto probs = probs_for(ei);
            s -= std::log(
                std::max(probs[static_cast<std::size_t>(g.labels[static_cast<std::size_t>(ei)])],
                         kProbClamp));
        }
        return s / static_cast<double>(idx.size());
    };

    EpochMetrics m;
    m.epoch = epoch;
    m.train_loss = mean_nll(train_idx) + reg;
    m.test_loss = mean_nll(test_idx) + reg;
    int correct = 0;
    for (int ei : test_idx) {
        const auto probs = probs_for(ei);
        const auto best = std::max_element(probs.begin(), probs.end());
        if (static_cast<int>(best - probs.begin()) == g.labels[static_cast<std::size_t>(ei)])
            ++correct;
    }
    m.test_acc = static_cast<double>(correct) / static_cast<double>(test_idx.size());
    return m;
}

}  // namespace

TrainResult train(const InteractionGraph& graph, const std::map<DeviceId, DeviceKind>& kinds,
                  const EmbeddingTable& embeddings, const GnnHyper& hyper, std::uint64_t seed) {
    TrainResult result;
    result.model = init_model(hyper, derive_seed(seed, "init"));
    GnnModel& model = result.model;
    const GnnGraph g = compile_graph(graph, kinds, model.hyper.bins);
    const int n_edges = static_cast<int>(g.labeled_edges.size());
    if (n_edges < model.hyper.bins)
        throw std::invalid_argument("train: need at least as many labeled edges as trust bins");
    if (embeddings.dim != model.hyper.dims.front())
        throw std::invalid_argument("train: embedding dim does not match model input dim");
    const auto emb = index_embeddings(g, embeddings);

    std::vector<int> order(static_cast<std::size_t>(n_edges));
    std::iota(order.begin(), order.end(), 0);
    {
        Rng rng = make_rng(derive_seed(seed, "split"));
        std::shuffle(order.begin(), order.end(), rng);
    }
    const int n_train = std::clamp(
        static_cast<int>(std::lround(model.hyper.train_fraction * n_edges)), 1, n_edges - 1);
    std::vector<int> train_idx(order.begin(), order.begin() + n_train);
    std::vector<int> test_idx(order.begin() + n_train, order.end());

    auto tensors = model_tensors(model);
    std::vector<Tensor> m_state, v_state;
    for (const Tensor* t : tensors) {
        m_state.emplace_back(t->rows, t->cols, 0.0);
        v_state.emplace_back(t->rows, t->cols, 0.0);
    }
    constexpr double kBeta1 = 0.9, kBeta2 = 0.999, kEps = 1e-8;
    long step = 0;

    result.metrics.push_back(evaluate_epoch(0, model, g, emb, train_idx, test_idx));

    Rng dropout_rng = make_rng(derive_seed(seed, "dropout"));
    for (int epoch = 1; epoch <= model.hyper.epochs; ++epoch) {
        {
            Rng rng = make_rng(derive_seed(seed, "epoch:" + std::to_string(epoch)));
            std::shuffle(train_idx.begin(), train_idx.end(), rng);
        }
        for (std::size_t start = 0; start < train_idx.size();
             start += static_cast<std::size_t>(model.hyper.batch_size)) {
            const std::size_t end = std::min(
                train_idx.size(), start + static_cast<std::size_t>(model.hyper.batch_size));
            std::span<const int> batch(train_idx.data() + start, end - start);
            Rng* drng = model.hyper.dropout > 0.0 ? &dropout_rng : nullptr;
            LossTape lt = build_loss_tape(model, g, emb, batch, drng);
            const double loss_value = lt.tape.val(lt.loss_id).v[0];
            if (!std::isfinite(loss_value))
                throw std::runtime_error("train: non-finite loss at epoch " +
                                         std::to_string(epoch));
            lt.tape.backward(lt.loss_id);
            ++step;
            const double bc1 = 1.0 - std::pow(kBeta1, static_cast<double>(step));
            const double bc2 = 1.0 - std::pow(kBeta2, static_cast<double>(step));
            for (std::size_t i = 0; i < tensors.size(); ++i) {
                const Tensor& grad = lt.tape.grad(lt.params[i]);
                Tensor& mt = m_state[i];
                Tensor& vt = v_state[i];
                Tensor& p = *tensors[i];
                for (std::size_t k = 0; k < p.v.size(); ++k) {
                    mt.v[k] = kBeta1 * mt.v[k] + (1.0 - kBeta1) * grad.v[k];
                    vt.v[k] = kBeta2 * vt.v[k] + (1.0 - kBeta2) * grad.v[k] * grad.v[k];
                    p.v[k] -= model.hyper.learning_rate * (mt.v[k] / bc1) /
                              (std::sqrt(vt.v[k] / bc2) + kEps);
                }
            }
        }
        result.metrics.push_back(evaluate_epoch(epoch, model, g, emb, train_idx, test_idx));
    }

    // Predicted trust for every ordered (terminal, other device) pair.
    {
        Tape t;
        TapeModelIds ids = stage_model(t, model);
        std::vector<Tape::Id> h = graph_forward(t, g, ids, emb, model.hyper, nullptr);
        for (std::size_t u = 0; u < g.nodes.size(); ++u) {
            if (g.kinds[u] != DeviceKind::Terminal) continue;
            for (std::size_t v = 0; v < g.nodes.size(); ++v) {
                if (u == v) continue;
                Tape::Id p = head_probs(t, ids.head, h[u], h[v]);
                result.trust.values[{g.nodes[u], g.nodes[v]}] =
                    historical_trust(t.val(p).v, model.hyper.trust_mode);
            }
        }
    }
    return result;
}

std::string model_to_json(const GnnModel& model) {
    nlohmann::json j;
    j["hyper"] = {{"dims", model.hyper.dims},
                  {"bins", model.hyper.bins},
                  {"code_bits", model.hyper.code_bits},
                  {"head_hidden", model.hyper.head_hidden},
                  {"learning_rate", model.hyper.learning_rate},
                  {"l2", model.hyper.l2},
                  {"dropout", model.hyper.dropout},
                  {"epochs", model.hyper.epochs},
                  {"batch_size", model.hyper.batch_size},
                  {"train_fraction", model.hyper.train_fraction},
                  {"trust_mode", to_string(model.hyper.trust_mode)}};
    j["layers"] = nlohmann::json::array();
    for (const LayerParams& L : model.layers) {
        j["layers"].push_back({{"w_in_msg", tensor_to_json(L.w_in_msg)},
                               {"w_out_msg", tensor_to_json(L.w_out_msg)},
                               {"w_attn", tensor_to_json(L.w_attn)},
                               {"a_attn", tensor_to_json(L.a_attn)},
                               {"w_fuse_tf", tensor_to_json(L.w_fuse_tf)},
                               {"b_fuse_tf", tensor_to_json(L.b_fuse_tf)},
                               {"w_fuse_ec", tensor_to_json(L.w_fuse_ec)},
                               {"b_fuse_ec", tensor_to_json(L.b_fuse_ec)}});
    }
    j["head"] = {{"w1", tensor_to_json(model.head.w1)},
                 {"b1", tensor_to_json(model.head.b1)},
                 {"w2", tensor_to_json(model.head.w2)},
                 {"b2", tensor_to_json(model.head.b2)}};
    return j.dump(2) + "\n";
}

GnnModel model_from_json(const std::string& text) {
    const nlohmann::json j = nlohmann::json::parse(text);
    GnnModel model;
    const auto& h = j.at("hyper");
    model.hyper.dims = h.at("dims").get<std::vector<int>>();
    model.hyper.bins = h.at("bins").get<int>();
    model.hyper.code_bits = h.at("code_bits").get<int>();
    model.hyper.head_hidden = h.at("head_hidden").get<int>();
    model.hyper.learning_rate = h.at("learning_rate").get<double>();
    model.hyper.l2 = h.at("l2").get<double>();
    model.hyper.dropout = h.at("dropout").get<double>();
    model.hyper.epochs = h.at("epochs").get<int>();
    model.hyper.batch_size = h.at("batch_size").get<int>();
    model.hyper.train_fraction = h.at("train_fraction").get<double>();
    model.hyper.trust_mode = trust_mode_from_string(h.at("trust_mode").get<std::string>());
    validate_hyper(model.hyper);
    for (const auto& lj : j.at("layers")) {
        LayerParams L;
        L.w_in_msg = tensor_from_json(lj.at("w_in_msg"));
        L.w_out_msg = tensor_from_json(lj.at("w_out_msg"));
        L.w_attn = tensor_from_json(lj.at("w_attn"));
        L.a_attn = tensor_from_json(lj.at("a_attn"));
        L.w_fuse_tf = tensor_from_json(lj.at("w_fuse_tf"));
        L.b_fuse_tf = tensor_from_json(lj.at("b_fuse_tf"));
        L.w_fuse_ec = tensor_from_json(lj.at("w_fuse_ec"));
        L.b_fuse_ec = tensor_from_json(lj.at("b_fuse_ec"));
        model.layers.push_back(std::move(L));
    }
    if (model.layers.size() + 1 != model.hyper.dims.size())
        throw std::runtime_error("model json: layer count does not match dims");
    const auto& hj = j.at("head");
    model.head.w1 = tensor_from_json(hj.at("w1"));
    model.head.b1 = tensor_from_json(hj.at("b1"));
    model.head.w2 = tensor_from_json(hj.at("w2"));
    model.head.b2 = tensor_from_json(hj.at("b2"));
    return model;
}

const char* const kMetricsCsvHeader = "epoch,train_loss,test_loss,test_acc";

std::string metrics_to_csv(const std::vector<EpochMetrics>& metrics) {
    std::ostringstream os;
    os << kMetricsCsvHeader << "\n";
    for (const EpochMetrics& m : metrics) {
        os << m.epoch << ',' << format_double(m.train_loss) << ',' << format_double(m.test_loss)
           << ',' << format_double(m.test_acc) << "\n";
    }
    return os.str();
}

const char* const kTrustCsvHeader = "trustor,trustee,t_his";

std::string trust_to_csv(const TrainedTrust& trust) {
    std::ostringstream os;
    os << kTrustCsvHeader << "\n";
    for (const auto& [pair, value] : trust.values)
        os << pair.first.value << ',' << pair.second.value << ',' << format_double(value) << "\n";
    return os.str();
}

TrainedTrust trust_from_csv(const std::string& text) {
    const auto lines = split_lines(text);
    if (lines.empty() || lines[0] != kTrustCsvHeader)
        throw std::runtime_error("trust csv: bad or missing header");
    TrainedTrust trust;
    for (std::size_t i = 1; i < lines.size(); ++i) {
        const auto fields = split_csv_line(lines[i]);
        if (fields.size() != 3)
            throw std::runtime_error("trust csv: row " + std::to_string(i + 1) +
                                     " has wrong field count");
        const double value =
            parse_double(fields[2], "trust csv row " + std::to_string(i + 1));
        if (value < 0.0 || value > 1.0)
            throw std::runtime_error("trust csv: row " + std::to_string(i + 1) +
                                     " trust out of range");
        trust.values[{DeviceId{fields[0]}, DeviceId{fields[1]}}] = value;
    }
    return trust;
}

}  // namespace cste
