#pragma once

#include <span>
#include <vector>

#include "hetermpc/graph.hpp"
#include "hetermpc/layers.hpp"

namespace hetermpc {

struct EncoderConfig {
  std::size_t d = 64;
  std::size_t heads = 2;
  /// Transformer layers applied to each utterance on its own (L1).
  std::size_t init_layers = 9;
  /// Synchronous graph iterations (L2).
  std::size_t graph_iterations = 3;
  std::size_t max_interlocutors = kMaxInterlocutors;
  std::size_t max_utterance_length = 50;
  /// One set of graph parameters for all iterations, or one per iteration.
  bool share_iteration_params = true;
  /// Ablations: tie the UTR/ITR families, tie the six edge families, or drop
  /// interlocutor nodes (and every edge touching them) entirely.
  bool node_types = true;
  bool edge_types = true;
  bool interlocutor_nodes = true;

  void validate() const;
};

template <typename T>
struct NodeTypeParams {
  Linear<T> key;
  Linear<T> query;
  Linear<T> value;
  FeedForward<T> ffn;
};

template <typename T>
struct EdgeTypeParams {
  /// Per-head d/heads × d/heads blocks stacked vertically: shape d × d/heads.
  BasicTensor<T> attention;
  /// d × d message projection.
  BasicTensor<T> message;
  /// Adaptive attention scale, one value.
  BasicTensor<T> mu;
};

/// Everything one graph iteration reads.
template <typename T>
struct GraphLayerParams {
  std::vector<NodeTypeParams<T>> node_families;  // 2, or 1 when tied
  std::vector<EdgeTypeParams<T>> edge_families;  // 6, or 1 when tied
  /// [h_old ; h_new] · W (2d × d) + b
  Linear<T> compress;
  /// Intra-utterance layer run after the CLS row is replaced.
  EncoderLayer<T> refresh;

  const NodeTypeParams<T>& node(NodeKind kind) const;
  const EdgeTypeParams<T>& edge(EdgeType type) const;
  std::size_t edge_slot(EdgeType type) const;
};

template <typename T>
struct HeterParams {
  BasicTensor<T> token_embedding;         // V × d, shared with the decoder input
  BasicTensor<T> position_embedding;      // max_utterance_length × d
  BasicTensor<T> interlocutor_embedding;  // max_interlocutors × d
  std::vector<EncoderLayer<T>> init;
  std::vector<GraphLayerParams<T>> graph;  // 1 when shared, else L2

  static HeterParams create(ParameterSet<T>& params, const EncoderConfig& config, std::size_t vocab_size);
  const GraphLayerParams<T>& iteration(std::size_t l) const;
};

/// Utterance nodes hold k_m × d token matrices (row 0 is [CLS] and serves as
/// the node vector); interlocutor nodes hold 1 × d vectors.
template <typename T>
struct NodeStates {
  std::vector<BasicTensor<T>> utterances;
  std::vector<BasicTensor<T>> interlocutors;

  /// 1 × d node vector.
  BasicTensor<T> vector(const NodeId& node) const;
};

/// L1 shared Transformer layers over each utterance independently.
template <typename T>
std::vector<BasicTensor<T>> init_utterance_nodes(std::span<const std::vector<TokenId>> sequences,
                                                 const HeterParams<T>& params, const EncoderConfig& config);

/// Interlocutor j takes row j of the order-based embedding table.
template <typename T>
std::vector<BasicTensor<T>> init_interlocutor_nodes(const HeteroGraph& graph, const HeterParams<T>& params,
                                                    const EncoderConfig& config);

/// Unnormalized attention of one (source, edge, target) triple, 1 × heads.
template <typename T>
BasicTensor<T> hetero_attention_logit(const BasicTensor<T>& source, const BasicTensor<T>& target,
                                      EdgeType edge, NodeKind source_kind, NodeKind target_kind,
                                      const GraphLayerParams<T>& layer, std::size_t heads);

/// Message passed from a source along one edge type, 1 × d.
template <typename T>
BasicTensor<T> hetero_message(const BasicTensor<T>& source, EdgeType edge, NodeKind source_kind,
                              const GraphLayerParams<T>& layer);

template <typename T>
struct AggregateResult {
  BasicTensor<T> summary;  // h̄_t, softmax-weighted sum of incoming messages
  BasicTensor<T> updated;  // FFN(h̄_t) + h_t
  /// weights[h][i]: normalized weight of incoming edge i under head h, edges
  /// in HeteroGraph::incoming order.
  std::vector<std::vector<T>> weights;
};

/// Softmax aggregation over the target's incoming edges plus the
/// node-type FFN residual. A target without sources aggregates to zero.
template <typename T>
AggregateResult<T> aggregate_node(const NodeId& target, const HeteroGraph& graph, const NodeStates<T>& states,
                                  const GraphLayerParams<T>& layer, std::size_t heads);

/// Replaces the [CLS] row with [h_old ; h_new]·W_com + b_com, then runs the
/// extra intra-utterance layer. Throws for interlocutor nodes.
template <typename T>
BasicTensor<T> utterance_token_refresh(const NodeId& node, const BasicTensor<T>& old_cls,
                                       const BasicTensor<T>& new_cls, const NodeStates<T>& states,
                                       const GraphLayerParams<T>& layer);

/// One synchronous iteration: every target reads iteration-l states only.
/// `order`, when given, is the sequence in which targets are visited; it
/// cannot change the result.
template <typename T>
NodeStates<T> graph_iteration(const HeteroGraph& graph, const NodeStates<T>& states,
                              const GraphLayerParams<T>& layer, std::size_t heads,
                              std::span<const NodeId> order = {});

/// Node initialization followed by L2 graph iterations.
template <typename T>
NodeStates<T> encode_graph(const HeteroGraph& graph, std::span<const std::vector<TokenId>> sequences,
                           const HeterParams<T>& params, const EncoderConfig& config);

/// The graph with interlocutor nodes and their edges removed.
HeteroGraph without_interlocutors(const HeteroGraph& graph);

}  // namespace hetermpc
