#include "hetermpc/encoder.hpp"

#include <cmath>
#include <numeric>

namespace hetermpc {

void EncoderConfig::validate() const {
  if (d == 0 || heads == 0 || d % heads != 0) {
    throw std::invalid_argument("encoder: d=" + std::to_string(d) + " must be a positive multiple of heads=" +
                                std::to_string(heads));
  }
  if (init_layers < 1) throw std::invalid_argument("encoder: at least one utterance layer is required");
  if (max_interlocutors == 0 || max_utterance_length < 3) {
    throw std::invalid_argument("encoder: capacity limits are too small");
  }
}

template <typename T>
const NodeTypeParams<T>& GraphLayerParams<T>::node(NodeKind kind) const {
  return node_families.size() == 1 ? node_families[0] : node_families[kind == NodeKind::Utterance ? 0 : 1];
}

template <typename T>
std::size_t GraphLayerParams<T>::edge_slot(EdgeType type) const {
  return edge_families.size() == 1 ? 0 : static_cast<std::size_t>(type);
}

template <typename T>
const EdgeTypeParams<T>& GraphLayerParams<T>::edge(EdgeType type) const {
  return edge_families[edge_slot(type)];
}

namespace {

template <typename T>
GraphLayerParams<T> create_graph_layer(ParameterSet<T>& params, const std::string& prefix,
                                       const EncoderConfig& config) {
  const std::size_t d = config.d;
  const std::size_t dh = d / config.heads;
  GraphLayerParams<T> layer;

  std::vector<std::string> node_names = config.node_types ? std::vector<std::string>{"utr", "itr"}
                                                          : std::vector<std::string>{"node"};
  for (const auto& name : node_names) {
    const auto p = prefix + "." + name;
    layer.node_families.push_back({Linear<T>::create(params, p + ".key", d, d),
                                   Linear<T>::create(params, p + ".query", d, d),
                                   Linear<T>::create(params, p + ".value", d, d),
                                   FeedForward<T>::create(params, p + ".ffn", d)});
  }

  std::vector<std::string> edge_names;
  if (config.edge_types) {
    for (auto e : kAllEdgeTypes) edge_names.emplace_back(to_string(e));
  } else {
    edge_names.emplace_back("edge");
  }
  for (const auto& name : edge_names) {
    const auto p = prefix + ".edge." + name;
    layer.edge_families.push_back({params.get(p + ".att", {d, dh}, Init::TruncatedNormal),
                                   params.get(p + ".msg", {d, d}, Init::TruncatedNormal),
                                   params.get(p + ".mu", {1}, T(1))});
  }

  layer.compress = Linear<T>::create(params, prefix + ".compress", 2 * d, d);
  layer.refresh = EncoderLayer<T>::create(params, prefix + ".refresh", d, config.heads);
  return layer;
}

template <typename T>
std::vector<std::size_t> iota_indices(std::size_t n) {
  std::vector<std::size_t> v(n);
  std::iota(v.begin(), v.end(), std::size_t{0});
  return v;
}

/// Per-iteration projections shared by every target.
template <typename T>
struct IterationCache {
  BasicTensor<T> queries;                  // N × d, dense order
  BasicTensor<T> keys;                     // rows: slot-major blocks of N
  BasicTensor<T> messages;                 // same layout as keys
  std::vector<std::size_t> slot_base;      // row offset of each edge slot
};

template <typename T>
BasicTensor<T> stack_node_vectors(const NodeStates<T>& states, NodeKind kind) {
  std::vector<BasicTensor<T>> rows;
  if (kind == NodeKind::Utterance) {
    for (const auto& u : states.utterances) rows.push_back(slice_rows(u, 0, 1));
  } else {
    rows = states.interlocutors;
  }
  return concat_rows(rows);
}

/// Applies the node-type-dependent map `fn` to every node, returning rows in
/// dense order (utterances, then interlocutors).
template <typename T, typename Fn>
BasicTensor<T> per_type(const NodeStates<T>& states, const GraphLayerParams<T>& layer, Fn&& fn) {
  std::vector<BasicTensor<T>> blocks;
  blocks.push_back(fn(layer.node(NodeKind::Utterance), stack_node_vectors(states, NodeKind::Utterance)));
  if (!states.interlocutors.empty()) {
    blocks.push_back(fn(layer.node(NodeKind::Interlocutor), stack_node_vectors(states, NodeKind::Interlocutor)));
  }
  return blocks.size() == 1 ? blocks.front() : concat_rows(blocks);
}

template <typename T>
IterationCache<T> build_cache(const HeteroGraph& graph, const NodeStates<T>& states,
                              const GraphLayerParams<T>& layer, std::size_t heads) {
  IterationCache<T> cache;
  const auto keys = per_type(states, layer, [](const NodeTypeParams<T>& p, const BasicTensor<T>& h) { return p.key(h); });
  const auto values = per_type(states, layer, [](const NodeTypeParams<T>& p, const BasicTensor<T>& h) { return p.value(h); });
  cache.queries = per_type(states, layer, [](const NodeTypeParams<T>& p, const BasicTensor<T>& h) { return p.query(h); });

  const std::size_t d = keys.cols();
  const std::size_t dh = d / heads;
  const T inv_sqrt = T(1) / std::sqrt(static_cast<T>(dh));

  std::vector<bool> used(layer.edge_families.size(), false);
  for (const auto& e : graph.edges()) used[layer.edge_slot(e.type)] = true;

  std::vector<BasicTensor<T>> key_blocks, message_blocks;
  cache.slot_base.assign(layer.edge_families.size(), 0);
  std::size_t base = 0;
  for (std::size_t slot = 0; slot < layer.edge_families.size(); ++slot) {
    if (!used[slot]) continue;
    const auto& edge = layer.edge_families[slot];
    std::vector<BasicTensor<T>> head_blocks;
    for (std::size_t h = 0; h < heads; ++h) {
      head_blocks.push_back(matmul(slice_cols(keys, h * dh, dh), slice_rows(edge.attention, h * dh, dh)));
    }
    key_blocks.push_back(scale(scale_by(concat_cols(head_blocks), edge.mu), inv_sqrt));
    message_blocks.push_back(matmul(values, edge.message));
    cache.slot_base[slot] = base;
    base += graph.num_nodes();
  }
  if (!key_blocks.empty()) {
    cache.keys = concat_rows(key_blocks);
    cache.messages = concat_rows(message_blocks);
  }
  return cache;
}

template <typename T>
struct Summary {
  BasicTensor<T> vector;
  std::vector<std::vector<T>> weights;
};

template <typename T>
Summary<T> summarize(const NodeId& target, const HeteroGraph& graph, const IterationCache<T>& cache,
                     const GraphLayerParams<T>& layer, std::size_t heads) {
  const std::size_t d = cache.queries.cols();
  const auto& sources = graph.incoming(target);
  Summary<T> out;
  if (sources.empty()) {
    out.vector = BasicTensor<T>::zeros({1, d});
    return out;
  }
  std::vector<std::size_t> rows;
  rows.reserve(sources.size());
  for (const auto& [source, type] : sources) {
    rows.push_back(cache.slot_base[layer.edge_slot(type)] + graph.dense_index(source));
  }
  const auto keys = gather_rows(cache.keys, rows);
  const auto messages = gather_rows(cache.messages, rows);
  const auto query = slice_rows(cache.queries, graph.dense_index(target), 1);
  const std::size_t dh = d / heads;
  std::vector<BasicTensor<T>> head_outputs;
  for (std::size_t h = 0; h < heads; ++h) {
    const auto logits = matmul(slice_cols(query, h * dh, dh), transpose(slice_cols(keys, h * dh, dh)));
    const auto weights = softmax(logits);
    out.weights.emplace_back(weights.data().begin(), weights.data().end());
    head_outputs.push_back(matmul(weights, slice_cols(messages, h * dh, dh)));
  }
  out.vector = concat_cols(head_outputs);
  return out;
}

}  // namespace

template <typename T>
HeterParams<T> HeterParams<T>::create(ParameterSet<T>& params, const EncoderConfig& config, std::size_t vocab_size) {
  config.validate();
  const std::size_t d = config.d;
  HeterParams out;
  out.token_embedding = params.get("embed.token", {vocab_size, d}, Init::TruncatedNormal);
  out.position_embedding = params.get("encoder.position", {config.max_utterance_length, d}, Init::TruncatedNormal);
  // Interlocutor vectors enter the graph with no layer norm in front of them, so
  // they start at the unit scale of the normalized utterance states.
  out.interlocutor_embedding = params.get("encoder.interlocutor", {config.max_interlocutors, d}, Init::UnitNormal);
  for (std::size_t i = 0; i < config.init_layers; ++i) {
    out.init.push_back(EncoderLayer<T>::create(params, "encoder.init" + std::to_string(i), d, config.heads));
  }
  if (config.graph_iterations > 0) {
    if (config.share_iteration_params) {
      out.graph.push_back(create_graph_layer(params, "graph", config));
    } else {
      for (std::size_t l = 0; l < config.graph_iterations; ++l) {
        out.graph.push_back(create_graph_layer(params, "graph.iter" + std::to_string(l), config));
      }
    }
  }
  return out;
}

template <typename T>
const GraphLayerParams<T>& HeterParams<T>::iteration(std::size_t l) const {
  return graph.size() == 1 ? graph.front() : graph.at(l);
}

template <typename T>
BasicTensor<T> NodeStates<T>::vector(const NodeId& node) const {
  if (node.kind == NodeKind::Utterance) return slice_rows(utterances.at(node.index), 0, 1);
  return interlocutors.at(node.index);
}

template <typename T>
std::vector<BasicTensor<T>> init_utterance_nodes(std::span<const std::vector<TokenId>> sequences,
                                                 const HeterParams<T>& params, const EncoderConfig& config) {
  std::vector<BasicTensor<T>> out;
  out.reserve(sequences.size());
  for (const auto& ids : sequences) {
    if (ids.empty() || ids.size() > config.max_utterance_length) {
      throw std::invalid_argument("utterance of " + std::to_string(ids.size()) + " tokens; expected 1.." +
                                  std::to_string(config.max_utterance_length));
    }
    std::vector<std::size_t> rows(ids.begin(), ids.end());
    auto x = add(gather_rows(params.token_embedding, rows), slice_rows(params.position_embedding, 0, ids.size()));
    for (const auto& layer : params.init) x = layer(x);
    out.push_back(x);
  }
  return out;
}

template <typename T>
std::vector<BasicTensor<T>> init_interlocutor_nodes(const HeteroGraph& graph, const HeterParams<T>& params,
                                                    const EncoderConfig& config) {
  if (graph.num_interlocutors() > config.max_interlocutors) {
    throw CapacityError("graph has " + std::to_string(graph.num_interlocutors()) + " interlocutors; the table holds " +
                        std::to_string(config.max_interlocutors));
  }
  std::vector<BasicTensor<T>> out;
  for (std::size_t i = 0; i < graph.num_interlocutors(); ++i) {
    out.push_back(gather_rows(params.interlocutor_embedding, std::vector<std::size_t>{i}));
  }
  return out;
}

template <typename T>
BasicTensor<T> hetero_attention_logit(const BasicTensor<T>& source, const BasicTensor<T>& target, EdgeType edge,
                                      NodeKind source_kind, NodeKind target_kind, const GraphLayerParams<T>& layer,
                                      std::size_t heads) {
  if (!is_legal(source_kind, edge, target_kind)) {
    throw std::invalid_argument("edge " + std::string(to_string(edge)) + " cannot connect " +
                                std::string(to_string(source_kind)) + " to " + std::string(to_string(target_kind)));
  }
  const auto k = layer.node(source_kind).key(source);
  const auto q = layer.node(target_kind).query(target);
  const auto& params = layer.edge(edge);
  const std::size_t dh = k.cols() / heads;
  std::vector<BasicTensor<T>> per_head;
  for (std::size_t h = 0; h < heads; ++h) {
    const auto projected = matmul(slice_cols(k, h * dh, dh), slice_rows(params.attention, h * dh, dh));
    per_head.push_back(matmul(projected, transpose(slice_cols(q, h * dh, dh))));
  }
  return scale(scale_by(concat_cols(per_head), params.mu), T(1) / std::sqrt(static_cast<T>(dh)));
}

template <typename T>
BasicTensor<T> hetero_message(const BasicTensor<T>& source, EdgeType edge, NodeKind source_kind,
                              const GraphLayerParams<T>& layer) {
  if (endpoint_kinds(edge).first != source_kind) {
    throw std::invalid_argument("edge " + std::string(to_string(edge)) + " does not leave a " +
                                std::string(to_string(source_kind)) + " node");
  }
  return matmul(layer.node(source_kind).value(source), layer.edge(edge).message);
}

template <typename T>
AggregateResult<T> aggregate_node(const NodeId& target, const HeteroGraph& graph, const NodeStates<T>& states,
                                  const GraphLayerParams<T>& layer, std::size_t heads) {
  const auto cache = build_cache(graph, states, layer, heads);
  auto summary = summarize(target, graph, cache, layer, heads);
  AggregateResult<T> out;
  out.summary = summary.vector;
  out.updated = add(layer.node(target.kind).ffn(summary.vector), states.vector(target));
  out.weights = std::move(summary.weights);
  return out;
}

template <typename T>
BasicTensor<T> utterance_token_refresh(const NodeId& node, const BasicTensor<T>& old_cls,
                                       const BasicTensor<T>& new_cls, const NodeStates<T>& states,
                                       const GraphLayerParams<T>& layer) {
  if (node.kind != NodeKind::Utterance) {
    throw std::invalid_argument("token refresh applies to utterance nodes only, got " + to_string(node));
  }
  const auto& tokens = states.utterances.at(node.index);
  const auto compressed = layer.compress(concat_cols(std::vector<BasicTensor<T>>{old_cls, new_cls}));
  const std::size_t k = tokens.rows();
  const auto replaced =
      k == 1 ? compressed : concat_rows(std::vector<BasicTensor<T>>{compressed, slice_rows(tokens, 1, k - 1)});
  return layer.refresh(replaced);
}

template <typename T>
NodeStates<T> graph_iteration(const HeteroGraph& graph, const NodeStates<T>& states,
                              const GraphLayerParams<T>& layer, std::size_t heads, std::span<const NodeId> order) {
  if (states.utterances.size() != graph.num_utterances() || states.interlocutors.size() != graph.num_interlocutors()) {
    throw std::invalid_argument("graph_iteration: node states do not match the graph");
  }
  const auto cache = build_cache(graph, states, layer, heads);

  std::vector<NodeId> visit;
  if (order.empty()) {
    for (std::size_t i = 0; i < graph.num_nodes(); ++i) visit.push_back(graph.node_at(i));
  } else {
    if (order.size() != graph.num_nodes()) throw std::invalid_argument("graph_iteration: order must list every node once");
    visit.assign(order.begin(), order.end());
  }
  std::vector<BasicTensor<T>> summaries(graph.num_nodes());
  for (const auto& node : visit) {
    auto& slot = summaries[graph.dense_index(node)];
    if (slot.defined()) throw std::invalid_argument("graph_iteration: node " + to_string(node) + " listed twice");
    slot = summarize(node, graph, cache, layer, heads).vector;
  }

  const std::size_t m = graph.num_utterances();
  const std::size_t n_itr = graph.num_interlocutors();
  NodeStates<T> next;

  const auto old_utr = stack_node_vectors(states, NodeKind::Utterance);
  const std::vector<BasicTensor<T>> utr_summaries(summaries.begin(), summaries.begin() + static_cast<std::ptrdiff_t>(m));
  const auto new_utr = add(layer.node(NodeKind::Utterance).ffn(concat_rows(utr_summaries)), old_utr);
  next.utterances.reserve(m);
  for (std::size_t u = 0; u < m; ++u) {
    next.utterances.push_back(utterance_token_refresh(NodeId::utterance(u), slice_rows(old_utr, u, 1),
                                                      slice_rows(new_utr, u, 1), states, layer));
  }

  if (n_itr > 0) {
    const auto old_itr = stack_node_vectors(states, NodeKind::Interlocutor);
    const std::vector<BasicTensor<T>> itr_summaries(summaries.begin() + static_cast<std::ptrdiff_t>(m), summaries.end());
    const auto new_itr = add(layer.node(NodeKind::Interlocutor).ffn(concat_rows(itr_summaries)), old_itr);
    for (std::size_t i = 0; i < n_itr; ++i) next.interlocutors.push_back(slice_rows(new_itr, i, 1));
  }
  return next;
}

template <typename T>
NodeStates<T> encode_graph(const HeteroGraph& graph, std::span<const std::vector<TokenId>> sequences,
                           const HeterParams<T>& params, const EncoderConfig& config) {
  config.validate();
  if (sequences.size() != graph.num_utterances()) {
    throw std::invalid_argument("encode_graph: " + std::to_string(sequences.size()) + " sequences for " +
                                std::to_string(graph.num_utterances()) + " utterance nodes");
  }
  NodeStates<T> states;
  states.utterances = init_utterance_nodes(sequences, params, config);
  states.interlocutors = init_interlocutor_nodes(graph, params, config);
  for (std::size_t l = 0; l < config.graph_iterations; ++l) {
    states = graph_iteration(graph, states, params.iteration(l), config.heads);
  }
  return states;
}

HeteroGraph without_interlocutors(const HeteroGraph& graph) {
  std::vector<Edge> kept;
  for (const auto& e : graph.edges()) {
    if (e.source.kind == NodeKind::Utterance && e.target.kind == NodeKind::Utterance) kept.push_back(e);
  }
  return HeteroGraph(graph.num_utterances(), 0, std::move(kept));
}

#define HETERMPC_INSTANTIATE_ENCODER(T)                                                                       \
  template struct GraphLayerParams<T>;                                                                        \
  template struct HeterParams<T>;                                                                             \
  template struct NodeStates<T>;                                                                              \
  template std::vector<BasicTensor<T>> init_utterance_nodes(std::span<const std::vector<TokenId>>,            \
                                                            const HeterParams<T>&, const EncoderConfig&);     \
  template std::vector<BasicTensor<T>> init_interlocutor_nodes(const HeteroGraph&, const HeterParams<T>&,     \
                                                               const EncoderConfig&);                         \
  template BasicTensor<T> hetero_attention_logit(const BasicTensor<T>&, const BasicTensor<T>&, EdgeType,      \
                                                 NodeKind, NodeKind, const GraphLayerParams<T>&, std::size_t); \
  template BasicTensor<T> hetero_message(const BasicTensor<T>&, EdgeType, NodeKind, const GraphLayerParams<T>&); \
  template AggregateResult<T> aggregate_node(const NodeId&, const HeteroGraph&, const NodeStates<T>&,         \
                                             const GraphLayerParams<T>&, std::size_t);                        \
  template BasicTensor<T> utterance_token_refresh(const NodeId&, const BasicTensor<T>&, const BasicTensor<T>&, \
                                                  const NodeStates<T>&, const GraphLayerParams<T>&);          \
  template NodeStates<T> graph_iteration(const HeteroGraph&, const NodeStates<T>&, const GraphLayerParams<T>&, \
                                         std::size_t, std::span<const NodeId>);                               \
  template NodeStates<T> encode_graph(const HeteroGraph&, std::span<const std::vector<TokenId>>,              \
                                      const HeterParams<T>&, const EncoderConfig&);

HETERMPC_INSTANTIATE_ENCODER(float)
HETERMPC_INSTANTIATE_ENCODER(double)

#undef HETERMPC_INSTANTIATE_ENCODER

}  // namespace hetermpc
