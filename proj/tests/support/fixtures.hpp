#pragma once

#include <optional>
#include <string>
#include <vector>

#include "hetermpc/corpus.hpp"
#include "hetermpc/graph.hpp"
#include "hetermpc/model.hpp"
#include "hetermpc/random.hpp"

namespace hetermpc::testing {

inline Turn turn(std::string speaker, std::optional<std::string> addressee, std::optional<std::size_t> reply_to,
                 std::string text = "") {
  Turn t;
  t.speaker = std::move(speaker);
  t.addressee = std::move(addressee);
  t.reply_to = reply_to;
  t.text = std::move(text);
  return t;
}

/// One history utterance by "a"; the response by "b" addresses "a" and
/// replies to it. Eight edges.
inline ConversationRecord two_party_reply_record() {
  ConversationRecord r;
  r.utterances = {turn("a", std::nullopt, std::nullopt, "is anyone around")};
  r.response = turn("b", "a", 0, "yes i am here");
  return r;
}

/// Five history turns between two people, then a third person answers the
/// second. History: 24 edges; with the response: 30.
inline ConversationRecord five_turn_record() {
  ConversationRecord r;
  r.utterances = {turn("p1", std::nullopt, std::nullopt, "in the partition editor now"),
                  turn("p2", "p1", 0, "that command is missing here"),
                  turn("p1", "p2", 1, "install it from the terminal first"),
                  turn("p1", "p2", std::nullopt, "it will ask for your password"),
                  turn("p2", "p1", 3, "ok i will report back")};
  r.response = turn("p3", "p2", 4, "does the installer print a hint");
  return r;
}

/// Six history turns among three people.
/// Reply 6, RepliedBy 6, Speak 7, SpokenBy 7, Address 6, AddressedBy 6.
inline ConversationRecord six_turn_record() {
  ConversationRecord r;
  r.utterances = {turn("p1", std::nullopt, std::nullopt, "second drive shows busy on mount"),
                  turn("p2", "p1", 0, "list what is mounted first"),
                  turn("p1", "p2", 1, "it is not mounted"),
                  turn("p3", "p2", 1, "how do i see which module the camera uses"),
                  turn("p2", "p3", 3, "lsmod shows loaded modules"),
                  turn("p1", "p2", 2, "mounting by hand fails as busy")};
  r.response = turn("p2", "p1", 5, "try mounting from the command line");
  return r;
}

/// Reply chain U0 <- U1 <- ... <- U5, each by a new speaker addressing the
/// previous one; the response by a seventh speaker replies to U5.
inline ConversationRecord reply_chain_record() {
  ConversationRecord r;
  for (std::size_t i = 0; i < 6; ++i) {
    r.utterances.push_back(turn("s" + std::to_string(i),
                                i == 0 ? std::nullopt : std::optional<std::string>("s" + std::to_string(i - 1)),
                                i == 0 ? std::nullopt : std::optional<std::size_t>(i - 1),
                                "chain word" + std::to_string(i)));
  }
  r.response = turn("s6", "s5", 5, "end");
  return r;
}

/// Valid record with up to `max_speakers` participants and random structure.
inline ConversationRecord random_record(Rng& rng, std::size_t max_utterances = 8, std::size_t max_speakers = 5) {
  ConversationRecord r;
  const std::size_t n_speakers = 1 + rng.below(max_speakers);
  const std::size_t m = 1 + rng.below(max_utterances);
  auto name = [](std::uint64_t i) { return "x" + std::to_string(i); };
  for (std::size_t i = 0; i < m; ++i) {
    std::optional<std::string> addressee;
    if (rng.below(3) != 0) addressee = name(rng.below(n_speakers + 1));
    std::optional<std::size_t> reply_to;
    if (i > 0 && rng.below(4) != 0) reply_to = rng.below(i);
    r.utterances.push_back(turn(name(rng.below(n_speakers)), addressee, reply_to, "w" + std::to_string(rng.below(9))));
  }
  r.response = turn(name(rng.below(n_speakers)), name(rng.below(n_speakers)), rng.below(m), "reply");
  return r;
}

/// Tiny model configuration used by gradient and oracle tests.
inline ModelConfig tiny_model(std::size_t d = 8, std::size_t heads = 2, std::size_t l1 = 1, std::size_t l2 = 1,
                              std::size_t l3 = 1) {
  ModelConfig c;
  c.encoder.d = d;
  c.encoder.heads = heads;
  c.encoder.init_layers = l1;
  c.encoder.graph_iterations = l2;
  c.decoder.d = d;
  c.decoder.heads = heads;
  c.decoder.layers = l3;
  return c;
}

}  // namespace hetermpc::testing
