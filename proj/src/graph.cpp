#include "hetermpc/graph.hpp"

#include <algorithm>
#include <deque>
#include <map>
#include <set>

namespace hetermpc {

std::string_view to_string(EdgeType e) {
  switch (e) {
    case EdgeType::Reply: return "Reply";
    case EdgeType::RepliedBy: return "RepliedBy";
    case EdgeType::Speak: return "Speak";
    case EdgeType::SpokenBy: return "SpokenBy";
    case EdgeType::Address: return "Address";
    case EdgeType::AddressedBy: return "AddressedBy";
  }
  return "?";
}

std::string_view to_string(NodeKind k) { return k == NodeKind::Utterance ? "UTR" : "ITR"; }

EdgeType edge_type_from_string(std::string_view name) {
  for (auto e : kAllEdgeTypes) {
    if (to_string(e) == name) return e;
  }
  throw std::invalid_argument("unknown edge type '" + std::string(name) + "'");
}

std::string to_string(const NodeId& n) {
  return (n.kind == NodeKind::Utterance ? "U" : "I") + std::to_string(n.index);
}

std::vector<std::string> interlocutor_order(const ConversationRecord& record) {
  std::vector<std::string> order;
  auto note = [&order](const std::string& label) {
    if (std::find(order.begin(), order.end(), label) == order.end()) order.push_back(label);
  };
  for (const auto& turn : record.utterances) note(turn.speaker);
  note(record.response.speaker);
  for (const auto& turn : record.utterances) {
    if (turn.addressee) note(*turn.addressee);
  }
  if (record.response.addressee) note(*record.response.addressee);
  return order;
}

void validate_record(const ConversationRecord& record) {
  const std::size_t history = record.utterances.size();
  for (std::size_t m = 0; m < history; ++m) {
    const auto& reply = record.utterances[m].reply_to;
    if (reply && *reply >= m) {
      throw StructureError("utterance " + std::to_string(m) + " replies to utterance " +
                           std::to_string(*reply) + ", which is not earlier");
    }
  }
  if (record.response.reply_to && *record.response.reply_to >= history) {
    throw StructureError("response replies to utterance " + std::to_string(*record.response.reply_to) +
                         " but the history has " + std::to_string(history) + " utterances");
  }
  const auto count = interlocutor_order(record).size();
  if (count > kMaxInterlocutors) {
    throw CapacityError("conversation has " + std::to_string(count) + " interlocutors; at most " +
                        std::to_string(kMaxInterlocutors) + " are supported");
  }
}

HeteroGraph::HeteroGraph(std::size_t num_utterances, std::size_t num_interlocutors,
                         std::vector<Edge> edges)
    : num_utterances_(num_utterances), num_interlocutors_(num_interlocutors), edges_(std::move(edges)) {
  if (num_utterances_ == 0) throw StructureError("graph needs at least the response utterance");
  std::sort(edges_.begin(), edges_.end());
  incoming_.resize(num_nodes());
  for (const auto& e : edges_) {
    if (!contains(e.source) || !contains(e.target)) {
      throw StructureError("edge " + to_string(e.source) + " -> " + to_string(e.target) +
                           " references a missing node");
    }
    incoming_[dense_index(e.target)].emplace_back(e.source, e.type);
  }
  for (auto& list : incoming_) std::sort(list.begin(), list.end());
}

bool HeteroGraph::contains(const NodeId& n) const {
  return n.kind == NodeKind::Utterance ? n.index < num_utterances_ : n.index < num_interlocutors_;
}

std::size_t HeteroGraph::dense_index(const NodeId& n) const {
  return n.kind == NodeKind::Utterance ? n.index : num_utterances_ + n.index;
}

NodeId HeteroGraph::node_at(std::size_t dense) const {
  return dense < num_utterances_ ? NodeId::utterance(dense) : NodeId::interlocutor(dense - num_utterances_);
}

const std::vector<std::pair<NodeId, EdgeType>>& HeteroGraph::incoming(const NodeId& target) const {
  return incoming_.at(dense_index(target));
}

std::array<std::size_t, kNumEdgeTypes> HeteroGraph::edge_type_counts() const {
  std::array<std::size_t, kNumEdgeTypes> counts{};
  for (const auto& e : edges_) ++counts[static_cast<std::size_t>(e.type)];
  return counts;
}

HeteroGraph build_graph(const ConversationRecord& record) {
  validate_record(record);
  const auto order = interlocutor_order(record);
  std::map<std::string, std::size_t> index_of;
  for (std::size_t i = 0; i < order.size(); ++i) index_of.emplace(order[i], i);

  const std::size_t num_utterances = record.utterances.size() + 1;
  std::vector<Edge> edges;
  auto link = [&edges](NodeId source, EdgeType type, NodeId target) {
    edges.push_back({source, type, target});
    edges.push_back({target, inverse(type), source});
  };

  for (std::size_t m = 0; m < num_utterances; ++m) {
    const Turn& turn = m + 1 < num_utterances ? record.utterances[m] : record.response;
    const auto utt = NodeId::utterance(m);
    const std::size_t speaker = index_of.at(turn.speaker);
    link(NodeId::interlocutor(speaker), EdgeType::Speak, utt);
    if (turn.reply_to) link(utt, EdgeType::Reply, NodeId::utterance(*turn.reply_to));
    if (turn.addressee) {
      link(utt, EdgeType::Address, NodeId::interlocutor(index_of.at(*turn.addressee)));
    } else if (turn.addresses_everyone) {
      for (std::size_t i = 0; i < order.size(); ++i) {
        if (i != speaker) link(utt, EdgeType::Address, NodeId::interlocutor(i));
      }
    }
  }
  return HeteroGraph(num_utterances, order.size(), std::move(edges));
}

std::vector<std::pair<NodeId, EdgeType>> neighbors(const HeteroGraph& graph, const NodeId& target) {
  if (!graph.contains(target)) throw std::out_of_range("neighbors: unknown node " + to_string(target));
  return graph.incoming(target);
}

std::optional<std::size_t> hop_distance(const HeteroGraph& graph, const NodeId& a, const NodeId& b) {
  if (!graph.contains(a) || !graph.contains(b)) {
    throw std::out_of_range("hop_distance: unknown node " + to_string(graph.contains(a) ? b : a));
  }
  std::vector<std::vector<std::size_t>> outgoing(graph.num_nodes());
  for (const auto& e : graph.edges()) {
    outgoing[graph.dense_index(e.source)].push_back(graph.dense_index(e.target));
  }
  std::vector<std::optional<std::size_t>> dist(graph.num_nodes());
  std::deque<std::size_t> frontier{graph.dense_index(a)};
  dist[frontier.front()] = 0;
  while (!frontier.empty()) {
    const auto u = frontier.front();
    frontier.pop_front();
    for (auto v : outgoing[u]) {
      if (dist[v]) continue;
      dist[v] = *dist[u] + 1;
      frontier.push_back(v);
    }
  }
  return dist[graph.dense_index(b)];
}

ConversationRecord apply_general_addressee(ConversationRecord record) {
  for (auto& turn : record.utterances) {
    if (!turn.addressee) turn.addresses_everyone = true;
  }
  if (!record.response.addressee) record.response.addresses_everyone = true;
  return record;
}

nlohmann::json graph_to_json(const HeteroGraph& graph) {
  auto node_json = [](const NodeId& n) {
    return nlohmann::json{{"kind", std::string(to_string(n.kind))}, {"index", n.index}};
  };
  nlohmann::json nodes = nlohmann::json::array();
  for (std::size_t i = 0; i < graph.num_nodes(); ++i) nodes.push_back(node_json(graph.node_at(i)));
  nlohmann::json edges = nlohmann::json::array();
  for (const auto& e : graph.edges()) {
    edges.push_back({{"src", node_json(e.source)},
                     {"type", std::string(to_string(e.type))},
                     {"dst", node_json(e.target)}});
  }
  return {{"num_utterances", graph.num_utterances()},
          {"num_interlocutors", graph.num_interlocutors()},
          {"response", node_json(graph.response_node())},
          {"nodes", nodes},
          {"edges", edges}};
}

void check_graph_invariants(const HeteroGraph& graph) {
  const std::set<Edge> edge_set(graph.edges().begin(), graph.edges().end());
  std::vector<std::size_t> spoken_by(graph.num_utterances(), 0);
  std::vector<std::size_t> replies(graph.num_utterances(), 0);
  for (const auto& e : graph.edges()) {
    if (!is_legal(e.source.kind, e.type, e.target.kind)) {
      throw std::logic_error("illegal edge " + to_string(e.source) + " -" + std::string(to_string(e.type)) +
                             "-> " + to_string(e.target));
    }
    if (e.source == e.target) throw std::logic_error("self-loop at " + to_string(e.source));
    if (!edge_set.count({e.target, inverse(e.type), e.source})) {
      throw std::logic_error("edge " + to_string(e.source) + " -" + std::string(to_string(e.type)) + "-> " +
                             to_string(e.target) + " has no inverse");
    }
    if (e.type == EdgeType::SpokenBy) ++spoken_by[e.source.index];
    if (e.type == EdgeType::Reply) ++replies[e.source.index];
  }
  for (std::size_t m = 0; m < graph.num_utterances(); ++m) {
    if (spoken_by[m] != 1) throw std::logic_error("utterance U" + std::to_string(m) + " lacks a unique speaker");
    if (replies[m] > 1) throw std::logic_error("utterance U" + std::to_string(m) + " replies more than once");
  }
}

}  // namespace hetermpc
