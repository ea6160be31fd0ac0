#include "hetermpc/model.hpp"

namespace hetermpc {

void ModelConfig::validate() const {
  encoder.validate();
  decoder.validate();
  if (encoder.d != decoder.d) {
    throw std::invalid_argument("encoder width " + std::to_string(encoder.d) + " differs from decoder width " +
                                std::to_string(decoder.d));
  }
}

PreparedSample prepare_sample(const ConversationRecord& record, const Vocabulary& vocab, const ModelConfig& config) {
  const auto structured = config.general_addressee ? apply_general_addressee(record) : record;
  auto graph = build_graph(structured);
  if (!config.encoder.interlocutor_nodes) graph = without_interlocutors(graph);
  std::vector<std::vector<TokenId>> sequences;
  sequences.reserve(record.utterances.size() + 1);
  for (const auto& u : record.utterances) {
    sequences.push_back(encode_utterance(u.text, vocab, config.encoder.max_utterance_length));
  }
  sequences.push_back(encode_response_node(config.encoder.max_utterance_length));
  const auto words = vocab.encode_words(record.response.text);
  return {std::move(graph), std::move(sequences), response_targets(words, config.decoder.max_gen_len)};
}

std::vector<PreparedSample> prepare_corpus(const std::vector<ConversationRecord>& records, const Vocabulary& vocab,
                                           const ModelConfig& config) {
  std::vector<PreparedSample> out;
  out.reserve(records.size());
  for (const auto& r : records) out.push_back(prepare_sample(r, vocab, config));
  return out;
}

template <typename T>
HeterMPC<T>::HeterMPC(ParameterSet<T>& params, const ModelConfig& config, std::size_t vocab_size)
    : config_(config),
      encoder_((config.validate(), HeterParams<T>::create(params, config.encoder, vocab_size))),
      decoder_(DecoderParams<T>::create(params, config.decoder, vocab_size)) {}

template <typename T>
NodeStates<T> HeterMPC<T>::encode(const PreparedSample& sample) const {
  return encode_graph(sample.graph, std::span<const std::vector<TokenId>>(sample.sequences), encoder_,
                      config_.encoder);
}

template <typename T>
BasicTensor<T> HeterMPC<T>::memory(const PreparedSample& sample) const {
  return build_memory(encode(sample), config_.decoder.cls_only_memory);
}

template <typename T>
BasicTensor<T> HeterMPC<T>::loss(const PreparedSample& sample) const {
  return response_loss(std::span<const TokenId>(sample.target), memory(sample), decoder_, config_.decoder);
}

template <typename T>
BasicTensor<T> HeterMPC<T>::log_prob(const PreparedSample& sample) const {
  return response_log_prob(std::span<const TokenId>(sample.target), memory(sample), decoder_, config_.decoder);
}

template <typename T>
std::vector<TokenId> HeterMPC<T>::generate(const PreparedSample& sample) const {
  NoGradGuard no_grad;
  return generate_greedy(memory(sample), decoder_, config_.decoder);
}

template class HeterMPC<float>;
template class HeterMPC<double>;

}  // namespace hetermpc
