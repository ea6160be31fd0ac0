#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "fixtures.hpp"
#include "hetermpc/encoder.hpp"
#include "params_util.hpp"
#include "reference.hpp"

using namespace hetermpc;
using namespace hetermpc::testing;
namespace ref = hetermpc::reference;

namespace {

EncoderConfig small_encoder(std::size_t d, std::size_t heads, std::size_t l1, std::size_t l2) {
  EncoderConfig c;
  c.d = d;
  c.heads = heads;
  c.init_layers = l1;
  c.graph_iterations = l2;
  return c;
}

template <typename T>
std::vector<double> to_vec(const BasicTensor<T>& t) {
  return {t.data().begin(), t.data().end()};
}

template <typename T>
void expect_near(const BasicTensor<T>& t, const ref::Mat& m, double tol) {
  ASSERT_EQ(t.numel(), m.v.size());
  for (std::size_t i = 0; i < m.v.size(); ++i) EXPECT_NEAR(t.data()[i], m.v[i], tol) << "element " << i;
}

ref::Mat to_mat(const Tensor64& t) {
  ref::Mat m(t.rows(), t.cols());
  for (std::size_t i = 0; i < m.v.size(); ++i) m.v[i] = t.data()[i];
  return m;
}

Tensor64 row_vector(std::vector<double> v) {
  const auto n = v.size();
  return Tensor64::from_data({1, n}, std::move(v));
}

template <typename T>
bool same_states(const NodeStates<T>& a, const NodeStates<T>& b) {
  auto eq = [](const BasicTensor<T>& x, const BasicTensor<T>& y) {
    return x.shape() == y.shape() && std::equal(x.data().begin(), x.data().end(), y.data().begin());
  };
  if (a.utterances.size() != b.utterances.size() || a.interlocutors.size() != b.interlocutors.size()) return false;
  for (std::size_t i = 0; i < a.utterances.size(); ++i)
    if (!eq(a.utterances[i], b.utterances[i])) return false;
  for (std::size_t i = 0; i < a.interlocutors.size(); ++i)
    if (!eq(a.interlocutors[i], b.interlocutors[i])) return false;
  return true;
}

struct Setup64 {
  ParameterSet<double> params{5};
  EncoderConfig config;
  HeterParams<double> heter;

  Setup64(std::size_t d, std::size_t heads, std::size_t l1 = 1, std::size_t l2 = 1, std::size_t vocab = 20)
      : config(small_encoder(d, heads, l1, l2)), heter(HeterParams<double>::create(params, config, vocab)) {}
  const GraphLayerParams<double>& layer() const { return heter.iteration(0); }
};

}  // namespace

TEST(EncoderConfig, Validation) {
  EXPECT_THROW(small_encoder(6, 4, 1, 1).validate(), std::invalid_argument);
  EXPECT_THROW(small_encoder(8, 2, 0, 1).validate(), std::invalid_argument);
  EXPECT_NO_THROW(small_encoder(8, 2, 1, 0).validate());
}

TEST(HeterParams, FamilyCounts) {
  ParameterSet<float> p(1);
  const auto config = small_encoder(8, 2, 2, 3);
  const auto h = HeterParams<float>::create(p, config, 30);
  ASSERT_EQ(h.graph.size(), 1u);
  EXPECT_EQ(h.graph[0].node_families.size(), 2u);
  EXPECT_EQ(h.graph[0].edge_families.size(), 6u);
  for (const auto& e : h.graph[0].edge_families) EXPECT_GT(e.mu.item(), 0.0f);
  EXPECT_EQ(h.interlocutor_embedding.shape(), (Shape{10, 8}));
  EXPECT_EQ(h.position_embedding.shape(), (Shape{50, 8}));
  EXPECT_EQ(h.init.size(), 2u);

  auto separate = config;
  separate.share_iteration_params = false;
  ParameterSet<float> q(1);
  EXPECT_EQ(HeterParams<float>::create(q, separate, 30).graph.size(), 3u);
  EXPECT_GT(q.size(), p.size());

  auto tied = config;
  tied.node_types = false;
  tied.edge_types = false;
  ParameterSet<float> r(1);
  const auto t = HeterParams<float>::create(r, tied, 30);
  EXPECT_EQ(t.graph[0].node_families.size(), 1u);
  EXPECT_EQ(t.graph[0].edge_families.size(), 1u);
}

TEST(InitUtteranceNodes, IdenticalUtterancesGiveIdenticalOutputs) {
  Setup64 s(8, 2);
  const std::vector<std::vector<TokenId>> seqs{{1, 9, 10, 2}, {1, 9, 10, 2}};
  const auto out = init_utterance_nodes<double>(seqs, s.heter, s.config);
  EXPECT_EQ(to_vec(out[0]), to_vec(out[1]));
}

TEST(InitUtteranceNodes, PermutingInputsPermutesOutputs) {
  Setup64 s(8, 2);
  const std::vector<std::vector<TokenId>> seqs{{1, 9, 2}, {1, 11, 12, 13, 2}, {1, 3, 2}};
  const std::vector<std::vector<TokenId>> permuted{seqs[2], seqs[0], seqs[1]};
  const auto a = init_utterance_nodes<double>(seqs, s.heter, s.config);
  const auto b = init_utterance_nodes<double>(permuted, s.heter, s.config);
  EXPECT_EQ(to_vec(a[2]), to_vec(b[0]));
  EXPECT_EQ(to_vec(a[0]), to_vec(b[1]));
  EXPECT_EQ(to_vec(a[1]), to_vec(b[2]));
}

TEST(InitUtteranceNodes, SingleLayerMatchesOracle) {
  ParameterSet<float> p(6);
  const auto config = small_encoder(8, 2, 1, 0);
  const auto heter = HeterParams<float>::create(p, config, 20);
  randomize(p, 61);
  const std::vector<std::vector<TokenId>> seqs{{1, 8, 2}};
  const auto out = init_utterance_nodes<float>(seqs, heter, config);
  const auto expected = ref::encoder_layer(p, "encoder.init0", ref::embed(p, "embed.token", "encoder.position",
                                                                          {1, 8, 2}), 2);
  expect_near(out[0], expected, 1e-5);
}

TEST(InitUtteranceNodes, OverLongSequenceThrows) {
  Setup64 s(8, 2);
  const std::vector<std::vector<TokenId>> seqs{std::vector<TokenId>(51, 7)};
  EXPECT_THROW(init_utterance_nodes<double>(seqs, s.heter, s.config), std::invalid_argument);
}

TEST(InitInterlocutorNodes, RowsAreSharedAcrossConversations) {
  Setup64 s(8, 2);
  const auto g1 = build_graph(two_party_reply_record());
  const auto g2 = build_graph(six_turn_record());
  const auto a = init_interlocutor_nodes(g1, s.heter, s.config);
  const auto b = init_interlocutor_nodes(g2, s.heter, s.config);
  EXPECT_EQ(to_vec(a[0]), to_vec(b[0]));
  ConversationRecord solo;
  solo.response = turn("x", std::nullopt, std::nullopt);
  const auto c = init_interlocutor_nodes(build_graph(solo), s.heter, s.config);
  ASSERT_EQ(c.size(), 1u);
  const auto row0 = slice_rows(s.heter.interlocutor_embedding, 0, 1);
  EXPECT_EQ(to_vec(c[0]), to_vec(row0));
}

TEST(InitInterlocutorNodes, ElevenSpeakersExceedCapacity) {
  Setup64 s(8, 2);
  const HeteroGraph crowded(1, 11, {});
  EXPECT_THROW(init_interlocutor_nodes(crowded, s.heter, s.config), CapacityError);
}

namespace {

// Sets every key, query and attention map to I, biases to 0, μ to 1.
void identity_attention(Setup64& s) {
  const auto d = s.config.d;
  for (const auto& family : s.layer().node_families) {
    assign(family.key.weight, identity(d));
    assign(family.query.weight, identity(d));
    assign(family.value.weight, identity(d));
    fill(family.key.bias, 0);
    fill(family.query.bias, 0);
    fill(family.value.bias, 0);
  }
  for (const auto& e : s.layer().edge_families) {
    assign(e.attention, identity(d));
    assign(e.message, identity(d));
    fill(e.mu, 1);
  }
}

}  // namespace

TEST(HeteroAttention, IdentityParametersGiveScaledDotProduct) {
  Setup64 s(4, 1);
  identity_attention(s);
  const auto hs = row_vector({0.3, -1.2, 0.5, 2.0});
  const auto ht = row_vector({1.1, 0.4, -0.7, 0.2});
  const auto w = hetero_attention_logit(hs, ht, EdgeType::Speak, NodeKind::Interlocutor, NodeKind::Utterance,
                                        s.layer(), 1);
  double dot = 0;
  for (std::size_t i = 0; i < 4; ++i) dot += hs.at(i) * ht.at(i);
  EXPECT_NEAR(w.item(), dot / 2.0, 1e-12);
}

TEST(HeteroAttention, ZeroKeyGivesZeroLogit) {
  Setup64 s(4, 2);
  for (const auto& f : s.layer().node_families) fill(f.key.bias, 0);
  const auto w = hetero_attention_logit(row_vector({0, 0, 0, 0}), row_vector({1, 2, 3, 4}), EdgeType::Reply,
                                        NodeKind::Utterance, NodeKind::Utterance, s.layer(), 2);
  ASSERT_EQ(w.numel(), 2u);
  EXPECT_EQ(w.at(0), 0.0);
  EXPECT_EQ(w.at(1), 0.0);
}

TEST(HeteroAttention, MatchesArithmeticOracle) {
  Setup64 s(4, 1);
  randomize(s.params, 71);
  const auto hs = row_vector({0.5, -0.1, 0.9, -1.3});
  const auto ht = row_vector({-0.4, 0.8, 0.1, 0.6});
  const auto& layer = s.layer();
  for (auto e : kAllEdgeTypes) {
    const auto [sk, tk] = endpoint_kinds(e);
    const auto w = hetero_attention_logit(hs, ht, e, sk, tk, layer, 1);
    const std::string src = sk == NodeKind::Utterance ? "graph.utr" : "graph.itr";
    const std::string dst = tk == NodeKind::Utterance ? "graph.utr" : "graph.itr";
    const std::string edge = "graph.edge." + std::string(to_string(e));
    const auto k = ref::linear(s.params, src + ".key", to_mat(hs));
    const auto q = ref::linear(s.params, dst + ".query", to_mat(ht));
    const auto raw = ref::mm(ref::mm(k, ref::weight(s.params, edge + ".att")), ref::tr(q));
    EXPECT_NEAR(w.item(), raw(0, 0) * ref::weight(s.params, edge + ".mu")(0, 0) / 2.0, 1e-6) << to_string(e);
  }
}

TEST(HeteroAttention, IllegalTripleThrows) {
  Setup64 s(4, 1);
  EXPECT_THROW(hetero_attention_logit(row_vector({0, 0, 0, 0}), row_vector({0, 0, 0, 0}), EdgeType::Speak,
                                      NodeKind::Utterance, NodeKind::Utterance, s.layer(), 1),
               std::invalid_argument);
  EXPECT_THROW(hetero_message(row_vector({0, 0, 0, 0}), EdgeType::Speak, NodeKind::Utterance, s.layer()),
               std::invalid_argument);
}

TEST(HeteroMessage, IdentityParametersPassSourceThrough) {
  Setup64 s(4, 1);
  identity_attention(s);
  const auto hs = row_vector({0.3, -1.2, 0.5, 2.0});
  EXPECT_EQ(to_vec(hetero_message(hs, EdgeType::Reply, NodeKind::Utterance, s.layer())), to_vec(hs));
}

TEST(HeteroMessage, EdgeTypesProduceDifferentMessages) {
  Setup64 s(4, 1);
  const auto hs = row_vector({0.3, -1.2, 0.5, 2.0});
  EXPECT_NE(to_vec(hetero_message(hs, EdgeType::Reply, NodeKind::Utterance, s.layer())),
            to_vec(hetero_message(hs, EdgeType::RepliedBy, NodeKind::Utterance, s.layer())));
}

TEST(HeteroMessage, MatchesArithmeticOracle) {
  Setup64 s(4, 1);
  randomize(s.params, 72);
  const auto hs = row_vector({0.5, -0.1, 0.9, -1.3});
  const auto m = hetero_message(hs, EdgeType::Address, NodeKind::Utterance, s.layer());
  const auto v = ref::linear(s.params, "graph.utr.value", to_mat(hs));
  expect_near(m, ref::mm(v, ref::weight(s.params, "graph.edge.Address.msg")), 1e-6);
}

namespace {

NodeStates<double> random_states(const HeteroGraph& g, std::size_t d, std::uint64_t seed,
                                 std::size_t tokens = 3) {
  Rng rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  auto draw = [&](std::size_t rows) {
    std::vector<double> v(rows * d);
    for (auto& x : v) x = normal(rng);
    return Tensor64::from_data({rows, d}, std::move(v));
  };
  NodeStates<double> s;
  for (std::size_t i = 0; i < g.num_utterances(); ++i) s.utterances.push_back(draw(tokens));
  for (std::size_t i = 0; i < g.num_interlocutors(); ++i) s.interlocutors.push_back(draw(1));
  return s;
}

}  // namespace

TEST(AggregateNode, SingleSourceGetsFullWeight) {
  Setup64 s(4, 2);
  randomize(s.params, 73);
  ConversationRecord solo;
  solo.response = turn("x", std::nullopt, std::nullopt);
  const auto g = build_graph(solo);
  const auto states = random_states(g, 4, 1);
  const auto r = aggregate_node(NodeId::interlocutor(0), g, states, s.layer(), 2);
  ASSERT_EQ(r.weights.size(), 2u);
  for (const auto& head : r.weights) {
    ASSERT_EQ(head.size(), 1u);
    EXPECT_EQ(head[0], 1.0);
  }
  const auto message = hetero_message(states.vector(NodeId::utterance(0)), EdgeType::SpokenBy,
                                      NodeKind::Utterance, s.layer());
  for (std::size_t i = 0; i < 4; ++i) EXPECT_NEAR(r.summary.at(i), message.at(i), 1e-12);
}

TEST(AggregateNode, ZeroFeedForwardIsPureResidual) {
  Setup64 s(4, 2);
  randomize(s.params, 74);
  for (const auto& f : s.layer().node_families) {
    fill(f.ffn.down.weight, 0);
    fill(f.ffn.down.bias, 0);
  }
  const auto g = build_graph(six_turn_record());
  const auto states = random_states(g, 4, 2);
  for (std::size_t n = 0; n < g.num_nodes(); ++n) {
    const auto node = g.node_at(n);
    const auto r = aggregate_node(node, g, states, s.layer(), 2);
    EXPECT_EQ(to_vec(r.updated), to_vec(states.vector(node)));
  }
}

TEST(AggregateNode, TwoSourcesMatchHandArithmetic) {
  // d=2, one head, identity key/query/value, hand-set edge maps.
  Setup64 s(2, 1);
  identity_attention(s);
  const auto& layer = s.layer();
  assign(layer.edge(EdgeType::Reply).message, {2, 0, 0, 1});
  assign(layer.edge(EdgeType::Speak).attention, {0.5, 0, 0, 0.5});
  fill(layer.edge(EdgeType::Speak).mu, 2.0);
  for (const auto& f : layer.node_families) {
    fill(f.ffn.down.weight, 0);
    fill(f.ffn.down.bias, 0);
  }
  // U1 (by I1) replies to U0 (by I0): target U0 has sources U1 via Reply, I0 via Speak.
  ConversationRecord r;
  r.utterances = {turn("a", std::nullopt, std::nullopt)};
  r.response = turn("b", std::nullopt, 0);
  const auto g = build_graph(r);
  NodeStates<double> st;
  st.utterances = {Tensor64::from_data({1, 2}, {1.0, 0.0}), Tensor64::from_data({1, 2}, {0.5, 1.0})};
  st.interlocutors = {Tensor64::from_data({1, 2}, {0.0, 2.0}), Tensor64::from_data({1, 2}, {1.0, 1.0})};
  const auto out = aggregate_node(NodeId::utterance(0), g, st, layer, 1);

  // Sources in order: U1 (Reply), I0 (Speak).
  // logit(U1) = (0.5·1 + 1·0) / √2;  logit(I0) = 2 · (0·0.5·1 + 2·0.5·0) / √2 = 0.
  const double l1 = 0.5 / std::sqrt(2.0), l2 = 0.0;
  const double w1 = std::exp(l1) / (std::exp(l1) + std::exp(l2)), w2 = 1 - w1;
  // messages: U1 · diag(2,1) = (1, 1);  I0 · I = (0, 2).
  ASSERT_EQ(out.weights[0].size(), 2u);
  EXPECT_NEAR(out.weights[0][0], w1, 1e-12);
  EXPECT_NEAR(out.summary.at(0), w1 * 1.0 + w2 * 0.0, 1e-6);
  EXPECT_NEAR(out.summary.at(1), w1 * 1.0 + w2 * 2.0, 1e-6);
  EXPECT_NEAR(out.updated.at(0), 1.0, 1e-12);
  EXPECT_NEAR(out.updated.at(1), 0.0, 1e-12);
}

TEST(AggregateNode, WeightsSumToOnePerHead) {
  Setup64 s(8, 2);
  randomize(s.params, 75);
  Rng rng(76);
  for (int trial = 0; trial < 20; ++trial) {
    const auto g = build_graph(random_record(rng));
    const auto states = random_states(g, 8, static_cast<std::uint64_t>(trial));
    for (std::size_t n = 0; n < g.num_nodes(); ++n) {
      const auto r = aggregate_node(g.node_at(n), g, states, s.layer(), 2);
      for (const auto& head : r.weights) {
        double total = 0;
        for (double w : head) total += w;
        EXPECT_NEAR(total, 1.0, 1e-6);
      }
    }
  }
}

TEST(AggregateNode, IsolatedTargetAggregatesToZero) {
  Setup64 s(4, 2);
  const HeteroGraph g(1, 1, {});
  const auto states = random_states(g, 4, 3);
  const auto r = aggregate_node(NodeId::interlocutor(0), g, states, s.layer(), 2);
  for (double v : r.summary.data()) EXPECT_EQ(v, 0.0);
  EXPECT_TRUE(r.weights.empty());
}

TEST(TokenRefresh, FirstHalfProjectionRestoresOldCls) {
  Setup64 s(4, 2);
  randomize(s.params, 77);
  std::vector<double> select_old(8 * 4, 0.0);
  for (std::size_t i = 0; i < 4; ++i) select_old[i * 4 + i] = 1.0;
  assign(s.layer().compress.weight, select_old);
  fill(s.layer().compress.bias, 0);
  const auto g = build_graph(two_party_reply_record());
  const auto states = random_states(g, 4, 4);
  const auto old_cls = states.vector(NodeId::utterance(0));
  const auto new_cls = row_vector({9, 9, 9, 9});
  const auto out = utterance_token_refresh(NodeId::utterance(0), old_cls, new_cls, states, s.layer());
  const auto expected = s.layer().refresh(states.utterances[0]);
  EXPECT_EQ(to_vec(out), to_vec(expected));
}

TEST(TokenRefresh, MatchesComposedOracle) {
  Setup64 s(4, 2);
  randomize(s.params, 78);
  const auto g = build_graph(two_party_reply_record());
  const auto states = random_states(g, 4, 5);
  const auto old_cls = states.vector(NodeId::utterance(0));
  const auto new_cls = row_vector({0.1, -0.2, 0.3, 0.7});
  const auto out = utterance_token_refresh(NodeId::utterance(0), old_cls, new_cls, states, s.layer());

  ref::Mat joined(1, 8);
  for (std::size_t i = 0; i < 4; ++i) {
    joined(0, i) = old_cls.at(i);
    joined(0, 4 + i) = new_cls.at(i);
  }
  auto tokens = to_mat(states.utterances[0]);
  const auto cls = ref::linear(s.params, "graph.compress", joined);
  for (std::size_t i = 0; i < 4; ++i) tokens(0, i) = cls(0, i);
  // Rows 1.. are passed to the extra layer untouched.
  for (std::size_t r = 1; r < 3; ++r)
    for (std::size_t c = 0; c < 4; ++c) EXPECT_EQ(tokens(r, c), states.utterances[0].at(r, c));
  expect_near(out, ref::encoder_layer(s.params, "graph.refresh", tokens, 2), 1e-10);
}

TEST(TokenRefresh, InterlocutorNodeThrows) {
  Setup64 s(4, 2);
  const auto g = build_graph(two_party_reply_record());
  const auto states = random_states(g, 4, 6);
  const auto v = states.vector(NodeId::interlocutor(0));
  EXPECT_THROW(utterance_token_refresh(NodeId::interlocutor(0), v, v, states, s.layer()), std::invalid_argument);
}

TEST(EncodeGraph, ZeroIterationsReturnsInitialization) {
  Setup64 s(8, 2, 1, 0);
  const auto g = build_graph(six_turn_record());
  std::vector<std::vector<TokenId>> seqs(g.num_utterances(), std::vector<TokenId>{1, 8, 9, 2});
  seqs.back() = {1, 3, 2};
  const auto out = encode_graph<double>(g, seqs, s.heter, s.config);
  const auto init_u = init_utterance_nodes<double>(seqs, s.heter, s.config);
  const auto init_i = init_interlocutor_nodes(g, s.heter, s.config);
  for (std::size_t i = 0; i < init_u.size(); ++i) EXPECT_EQ(to_vec(out.utterances[i]), to_vec(init_u[i]));
  for (std::size_t i = 0; i < init_i.size(); ++i) EXPECT_EQ(to_vec(out.interlocutors[i]), to_vec(init_i[i]));
}

TEST(EncodeGraph, SequenceCountMustMatchGraph) {
  Setup64 s(8, 2);
  const auto g = build_graph(two_party_reply_record());
  const std::vector<std::vector<TokenId>> seqs{{1, 2}};
  EXPECT_THROW(encode_graph<double>(g, seqs, s.heter, s.config), std::invalid_argument);
}

TEST(EncodeGraph, MatchesDenseOracleOnRandomGraphs) {
  Rng rng(90);
  for (int trial = 0; trial < 5; ++trial) {
    ParameterSet<double> p(static_cast<std::uint64_t>(trial));
    const auto config = small_encoder(8, 2, 1, 2);
    const auto heter = HeterParams<double>::create(p, config, 30);
    randomize(p, 100 + static_cast<std::uint64_t>(trial));
    const auto g = build_graph(random_record(rng, 4, 3));
    std::vector<std::vector<TokenId>> seqs;
    std::vector<std::vector<int>> ids;
    for (std::size_t u = 0; u < g.num_utterances(); ++u) {
      std::vector<TokenId> seq{1};
      for (std::uint64_t k = 0; k < 1 + rng.below(4); ++k) seq.push_back(static_cast<TokenId>(7 + rng.below(20)));
      seq.push_back(2);
      seqs.push_back(seq);
      ids.emplace_back(seq.begin(), seq.end());
    }
    const auto out = encode_graph<double>(g, seqs, heter, config);
    const auto dense = ref::dense_encode(p, g, ids, 2, 1, 2);
    for (std::size_t u = 0; u < g.num_utterances(); ++u) expect_near(out.utterances[u], dense.utterances[u], 1e-9);
    for (std::size_t i = 0; i < g.num_interlocutors(); ++i)
      expect_near(out.interlocutors[i], dense.interlocutors[i], 1e-9);
  }
}

TEST(GraphIteration, VisitOrderDoesNotChangeResults) {
  Setup64 s(8, 2);
  randomize(s.params, 79);
  const auto g = build_graph(six_turn_record());
  const auto states = random_states(g, 8, 7);
  std::vector<NodeId> order;
  for (std::size_t n = g.num_nodes(); n-- > 0;) order.push_back(g.node_at(n));
  Rng rng(8);
  std::shuffle(order.begin(), order.end(), rng);
  const auto a = graph_iteration(g, states, s.layer(), 2);
  const auto b = graph_iteration(g, states, s.layer(), 2, order);
  EXPECT_TRUE(same_states(a, b));
  order.pop_back();
  EXPECT_THROW(graph_iteration(g, states, s.layer(), 2, order), std::invalid_argument);
}

TEST(GraphIteration, ShapesAreStable) {
  Setup64 s(8, 2);
  const auto g = build_graph(six_turn_record());
  const auto states = random_states(g, 8, 9, 5);
  const auto next = graph_iteration(g, states, s.layer(), 2);
  for (std::size_t i = 0; i < states.utterances.size(); ++i)
    EXPECT_EQ(next.utterances[i].shape(), states.utterances[i].shape());
  for (std::size_t i = 0; i < states.interlocutors.size(); ++i)
    EXPECT_EQ(next.interlocutors[i].shape(), states.interlocutors[i].shape());
}

TEST(EncodeGraph, TiedEdgeWeightsEqualEdgeAblation) {
  const auto g = build_graph(six_turn_record());
  std::vector<std::vector<TokenId>> seqs(g.num_utterances(), std::vector<TokenId>{1, 9, 10, 2});
  seqs.back() = {1, 3, 2};

  auto config = small_encoder(8, 2, 1, 2);
  ParameterSet<double> full(3);
  const auto heter = HeterParams<double>::create(full, config, 20);
  randomize(full, 80);

  auto ablate = config;
  ablate.edge_types = false;
  ParameterSet<double> tied(3);
  const auto heter_tied = HeterParams<double>::create(tied, ablate, 20);
  // Shared tensors get the same values; the single edge family takes Reply's.
  for (const auto& e : tied.entries()) {
    const auto name = e.name;
    const auto source = name.rfind("graph.edge.edge.", 0) == 0
                            ? "graph.edge.Reply." + name.substr(std::string("graph.edge.edge.").size())
                            : name;
    assign(e.tensor, to_vec(full.find(source)));
  }
  const auto ablated = encode_graph<double>(g, seqs, heter_tied, ablate);
  const auto untied = encode_graph<double>(g, seqs, heter, config);
  EXPECT_FALSE(same_states(ablated, untied));

  for (auto type : kAllEdgeTypes) {
    const auto& dst = heter.iteration(0).edge(type);
    const auto& src = heter.iteration(0).edge(EdgeType::Reply);
    assign(dst.attention, to_vec(src.attention));
    assign(dst.message, to_vec(src.message));
    assign(dst.mu, to_vec(src.mu));
  }
  const auto tied_out = encode_graph<double>(g, seqs, heter, config);
  for (std::size_t i = 0; i < g.num_utterances(); ++i)
    for (std::size_t k = 0; k < tied_out.utterances[i].numel(); ++k)
      EXPECT_NEAR(tied_out.utterances[i].at(k), ablated.utterances[i].at(k), 1e-12);
}

TEST(EncodeGraph, PerIterationParametersAreUsed) {
  const auto g = build_graph(two_party_reply_record());
  const std::vector<std::vector<TokenId>> seqs{{1, 9, 2}, {1, 3, 2}};
  auto config = small_encoder(8, 2, 1, 2);
  config.share_iteration_params = false;
  ParameterSet<double> p(4);
  const auto heter = HeterParams<double>::create(p, config, 20);
  randomize(p, 81);
  const auto before = encode_graph<double>(g, seqs, heter, config);
  fill(heter.iteration(1).compress.bias, 0.3);
  const auto after = encode_graph<double>(g, seqs, heter, config);
  EXPECT_FALSE(same_states(before, after));
}

TEST(WithoutInterlocutors, KeepsOnlyReplyEdges) {
  const auto g = without_interlocutors(build_graph(six_turn_record()));
  EXPECT_EQ(g.num_interlocutors(), 0u);
  EXPECT_EQ(g.edges().size(), 12u);
  for (const auto& e : g.edges()) EXPECT_TRUE(e.type == EdgeType::Reply || e.type == EdgeType::RepliedBy);
}
