#pragma once

#include <span>
#include <vector>

#include "hetermpc/encoder.hpp"

namespace hetermpc {

struct DecoderConfig {
  std::size_t d = 64;
  std::size_t heads = 2;
  /// Decoder layers (L3).
  std::size_t layers = 6;
  /// Longest generated response, and the longest accepted prefix.
  std::size_t max_gen_len = 50;
  /// Cross-attend to [CLS] rows only instead of every token row.
  bool cls_only_memory = false;

  void validate() const;
};

template <typename T>
struct DecoderParams {
  BasicTensor<T> token_embedding;     // shared with the encoder
  BasicTensor<T> position_embedding;  // max_gen_len × d
  std::vector<DecoderLayer<T>> layers;
  Linear<T> lm_head;                  // d → V

  static DecoderParams create(ParameterSet<T>& params, const DecoderConfig& config, std::size_t vocab_size);
};

/// Utterance token rows in posting order (the response placeholder included),
/// then interlocutor vectors. With `cls_only`, one row per utterance.
template <typename T>
BasicTensor<T> build_memory(const NodeStates<T>& states, bool cls_only = false);

/// Logits, prefix length × V. Throws std::invalid_argument for an empty or
/// over-long prefix.
template <typename T>
BasicTensor<T> decoder_forward(std::span<const TokenId> prefix, const BasicTensor<T>& memory,
                               const DecoderParams<T>& params, const DecoderConfig& config);

/// Teacher-forced log P(response | memory). `response` must end with EOS.
template <typename T>
BasicTensor<T> response_log_prob(std::span<const TokenId> response, const BasicTensor<T>& memory,
                                 const DecoderParams<T>& params, const DecoderConfig& config);

/// Mean per-token cross-entropy of `response`, the training loss.
template <typename T>
BasicTensor<T> response_loss(std::span<const TokenId> response, const BasicTensor<T>& memory,
                             const DecoderParams<T>& params, const DecoderConfig& config);

/// Greedy decoding from BOS. The returned tokens exclude BOS and EOS.
template <typename T>
std::vector<TokenId> generate_greedy(const BasicTensor<T>& memory, const DecoderParams<T>& params,
                                     const DecoderConfig& config);

/// Words truncated to max_gen_len - 1, then EOS.
std::vector<TokenId> response_targets(std::span<const TokenId> words, std::size_t max_gen_len);

}  // namespace hetermpc
