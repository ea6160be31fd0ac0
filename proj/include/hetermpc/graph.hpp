#pragma once

#include <array>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace hetermpc {

inline constexpr std::size_t kMaxInterlocutors = 10;

enum class NodeKind : std::uint8_t { Utterance, Interlocutor };

struct NodeId {
  NodeKind kind = NodeKind::Utterance;
  std::size_t index = 0;

  static NodeId utterance(std::size_t i) { return {NodeKind::Utterance, i}; }
  static NodeId interlocutor(std::size_t i) { return {NodeKind::Interlocutor, i}; }

  auto operator<=>(const NodeId&) const = default;
};

enum class EdgeType : std::uint8_t { Reply, RepliedBy, Speak, SpokenBy, Address, AddressedBy };

inline constexpr std::size_t kNumEdgeTypes = 6;
inline constexpr std::array<EdgeType, kNumEdgeTypes> kAllEdgeTypes{
    EdgeType::Reply, EdgeType::RepliedBy, EdgeType::Speak,
    EdgeType::SpokenBy, EdgeType::Address, EdgeType::AddressedBy};

constexpr EdgeType inverse(EdgeType e) {
  switch (e) {
    case EdgeType::Reply: return EdgeType::RepliedBy;
    case EdgeType::RepliedBy: return EdgeType::Reply;
    case EdgeType::Speak: return EdgeType::SpokenBy;
    case EdgeType::SpokenBy: return EdgeType::Speak;
    case EdgeType::Address: return EdgeType::AddressedBy;
    case EdgeType::AddressedBy: return EdgeType::Address;
  }
  return e;
}

/// (source kind, target kind) that an edge of this type connects.
constexpr std::pair<NodeKind, NodeKind> endpoint_kinds(EdgeType e) {
  switch (e) {
    case EdgeType::Reply:
    case EdgeType::RepliedBy: return {NodeKind::Utterance, NodeKind::Utterance};
    case EdgeType::Speak:
    case EdgeType::AddressedBy: return {NodeKind::Interlocutor, NodeKind::Utterance};
    case EdgeType::SpokenBy:
    case EdgeType::Address: return {NodeKind::Utterance, NodeKind::Interlocutor};
  }
  return {NodeKind::Utterance, NodeKind::Utterance};
}

constexpr bool is_legal(NodeKind source, EdgeType e, NodeKind target) {
  const auto kinds = endpoint_kinds(e);
  return kinds.first == source && kinds.second == target;
}

std::string_view to_string(EdgeType e);
std::string_view to_string(NodeKind k);
EdgeType edge_type_from_string(std::string_view name);
std::string to_string(const NodeId& n);

struct Edge {
  NodeId source;
  EdgeType type;
  NodeId target;

  auto operator<=>(const Edge&) const = default;
};

/// One turn of a conversation. Labels are free-form speaker names.
struct Turn {
  std::string speaker;
  std::optional<std::string> addressee;
  std::optional<std::size_t> reply_to;
  std::string text;
  /// Set by apply_general_addressee: the turn addresses every interlocutor
  /// except its speaker.
  bool addresses_everyone = false;

  bool operator==(const Turn&) const = default;
};

struct ConversationRecord {
  std::vector<Turn> utterances;
  Turn response;

  bool operator==(const ConversationRecord&) const = default;
};

class CapacityError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class StructureError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Speaker labels in interlocutor-index order: first-speaking order over the
/// history, then the response speaker, then addressees that never speak, in
/// order of first mention.
std::vector<std::string> interlocutor_order(const ConversationRecord& record);

/// Checks reply_to indices and the interlocutor cap; throws StructureError or
/// CapacityError.
void validate_record(const ConversationRecord& record);

/// Immutable typed conversation graph. Utterance nodes 0..M-1 follow posting
/// order and the last one is the response; interlocutor nodes 0..I-1 follow
/// interlocutor_order. Edges are stored sorted.
class HeteroGraph {
 public:
  HeteroGraph(std::size_t num_utterances, std::size_t num_interlocutors, std::vector<Edge> edges);

  std::size_t num_utterances() const { return num_utterances_; }
  std::size_t num_interlocutors() const { return num_interlocutors_; }
  std::size_t num_nodes() const { return num_utterances_ + num_interlocutors_; }
  NodeId response_node() const { return NodeId::utterance(num_utterances_ - 1); }
  const std::vector<Edge>& edges() const { return edges_; }

  bool contains(const NodeId& n) const;
  /// Dense index: utterances first, then interlocutors.
  std::size_t dense_index(const NodeId& n) const;
  NodeId node_at(std::size_t dense) const;

  /// Incoming (source, edge type) pairs of `target`, ordered by source kind,
  /// source index, then edge type.
  const std::vector<std::pair<NodeId, EdgeType>>& incoming(const NodeId& target) const;

  std::array<std::size_t, kNumEdgeTypes> edge_type_counts() const;

 private:
  std::size_t num_utterances_;
  std::size_t num_interlocutors_;
  std::vector<Edge> edges_;
  std::vector<std::vector<std::pair<NodeId, EdgeType>>> incoming_;
};

/// Builds G(V, E) with the six meta relations. The response is the last
/// utterance node; its text plays no part in the structure.
HeteroGraph build_graph(const ConversationRecord& record);

/// Same as HeteroGraph::incoming, but throws for unknown nodes.
std::vector<std::pair<NodeId, EdgeType>> neighbors(const HeteroGraph& graph, const NodeId& target);

/// Directed BFS distance from a to b; nullopt when unreachable.
std::optional<std::size_t> hop_distance(const HeteroGraph& graph, const NodeId& a, const NodeId& b);

/// Marks every turn without an addressee as addressing all other interlocutors.
ConversationRecord apply_general_addressee(ConversationRecord record);

/// {"num_utterances", "num_interlocutors", "nodes":[{kind,index}], "edges":[{src,type,dst}]}
nlohmann::json graph_to_json(const HeteroGraph& graph);

/// Throws std::logic_error if the graph breaks inversion, legality, speaker
/// or reply-arity invariants.
void check_graph_invariants(const HeteroGraph& graph);

}  // namespace hetermpc
