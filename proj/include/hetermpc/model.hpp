#pragma once

#include <vector>

#include "hetermpc/corpus.hpp"
#include "hetermpc/decoder.hpp"
#include "hetermpc/encoder.hpp"

namespace hetermpc {

struct ModelConfig {
  EncoderConfig encoder;
  DecoderConfig decoder;
  /// Turns without an addressee address everyone but their speaker.
  bool general_addressee = true;

  void validate() const;
};

/// A record turned into model inputs.
struct PreparedSample {
  HeteroGraph graph;
  /// Token ids per utterance node; the last is the response placeholder.
  std::vector<std::vector<TokenId>> sequences;
  /// Response words followed by EOS.
  std::vector<TokenId> target;
};

PreparedSample prepare_sample(const ConversationRecord& record, const Vocabulary& vocab, const ModelConfig& config);
std::vector<PreparedSample> prepare_corpus(const std::vector<ConversationRecord>& records, const Vocabulary& vocab,
                                           const ModelConfig& config);

/// Encoder and decoder bound to one ParameterSet.
template <typename T>
class HeterMPC {
 public:
  HeterMPC(ParameterSet<T>& params, const ModelConfig& config, std::size_t vocab_size);

  const ModelConfig& config() const { return config_; }
  const HeterParams<T>& encoder() const { return encoder_; }
  const DecoderParams<T>& decoder() const { return decoder_; }

  NodeStates<T> encode(const PreparedSample& sample) const;
  BasicTensor<T> memory(const PreparedSample& sample) const;
  /// Mean per-token cross-entropy of the gold response.
  BasicTensor<T> loss(const PreparedSample& sample) const;
  BasicTensor<T> log_prob(const PreparedSample& sample) const;
  std::vector<TokenId> generate(const PreparedSample& sample) const;

 private:
  ModelConfig config_;
  HeterParams<T> encoder_;
  DecoderParams<T> decoder_;
};

extern template class HeterMPC<float>;
extern template class HeterMPC<double>;

}  // namespace hetermpc
