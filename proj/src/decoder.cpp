#include "hetermpc/decoder.hpp"

#include <algorithm>

#include "hetermpc/corpus.hpp"

namespace hetermpc {

void DecoderConfig::validate() const {
  if (d == 0 || heads == 0 || d % heads != 0) {
    throw std::invalid_argument("decoder: d=" + std::to_string(d) + " must be a positive multiple of heads=" +
                                std::to_string(heads));
  }
  if (layers < 1) throw std::invalid_argument("decoder: at least one layer is required");
  if (max_gen_len < 1) throw std::invalid_argument("decoder: max_gen_len must be positive");
}

template <typename T>
DecoderParams<T> DecoderParams<T>::create(ParameterSet<T>& params, const DecoderConfig& config,
                                          std::size_t vocab_size) {
  config.validate();
  DecoderParams out;
  out.token_embedding = params.get("embed.token", {vocab_size, config.d}, Init::TruncatedNormal);
  out.position_embedding = params.get("decoder.position", {config.max_gen_len, config.d}, Init::TruncatedNormal);
  for (std::size_t i = 0; i < config.layers; ++i) {
    out.layers.push_back(DecoderLayer<T>::create(params, "decoder.layer" + std::to_string(i), config.d, config.heads));
  }
  out.lm_head = Linear<T>::create(params, "decoder.lm_head", config.d, vocab_size);
  return out;
}

template <typename T>
BasicTensor<T> build_memory(const NodeStates<T>& states, bool cls_only) {
  std::vector<BasicTensor<T>> rows;
  for (const auto& u : states.utterances) rows.push_back(cls_only ? slice_rows(u, 0, 1) : u);
  for (const auto& i : states.interlocutors) rows.push_back(i);
  if (rows.empty()) throw std::invalid_argument("build_memory: no node states");
  return concat_rows(rows);
}

template <typename T>
BasicTensor<T> decoder_forward(std::span<const TokenId> prefix, const BasicTensor<T>& memory,
                               const DecoderParams<T>& params, const DecoderConfig& config) {
  if (prefix.empty() || prefix.size() > config.max_gen_len) {
    throw std::invalid_argument("decoder prefix of " + std::to_string(prefix.size()) + " tokens; expected 1.." +
                                std::to_string(config.max_gen_len));
  }
  std::vector<std::size_t> rows(prefix.begin(), prefix.end());
  auto x = add(gather_rows(params.token_embedding, rows), slice_rows(params.position_embedding, 0, prefix.size()));
  for (const auto& layer : params.layers) x = layer(x, memory);
  return params.lm_head(x);
}

namespace {

std::vector<TokenId> teacher_prefix(std::span<const TokenId> response) {
  if (response.empty()) throw std::invalid_argument("response is empty");
  if (response.back() != special::kEos) throw std::invalid_argument("response must end with EOS");
  std::vector<TokenId> prefix{special::kBos};
  prefix.insert(prefix.end(), response.begin(), response.end() - 1);
  return prefix;
}

}  // namespace

template <typename T>
BasicTensor<T> response_log_prob(std::span<const TokenId> response, const BasicTensor<T>& memory,
                                 const DecoderParams<T>& params, const DecoderConfig& config) {
  const auto prefix = teacher_prefix(response);
  const auto logits = decoder_forward(std::span<const TokenId>(prefix), memory, params, config);
  return scale(cross_entropy(logits, response, -1, Reduction::Sum), T(-1));
}

template <typename T>
BasicTensor<T> response_loss(std::span<const TokenId> response, const BasicTensor<T>& memory,
                             const DecoderParams<T>& params, const DecoderConfig& config) {
  const auto prefix = teacher_prefix(response);
  const auto logits = decoder_forward(std::span<const TokenId>(prefix), memory, params, config);
  return cross_entropy(logits, response, -1, Reduction::Mean);
}

template <typename T>
std::vector<TokenId> generate_greedy(const BasicTensor<T>& memory, const DecoderParams<T>& params,
                                     const DecoderConfig& config) {
  NoGradGuard no_grad;
  std::vector<TokenId> prefix{special::kBos};
  std::vector<TokenId> out;
  while (out.size() < config.max_gen_len && prefix.size() <= config.max_gen_len) {
    const auto logits = decoder_forward(std::span<const TokenId>(prefix), memory, params, config);
    const std::size_t v = logits.cols();
    const auto last = logits.data().subspan((logits.rows() - 1) * v, v);
    // max_element returns the first maximum, so ties go to the lowest id.
    const auto next = static_cast<TokenId>(std::max_element(last.begin(), last.end()) - last.begin());
    if (next == special::kEos) break;
    out.push_back(next);
    prefix.push_back(next);
  }
  return out;
}

std::vector<TokenId> response_targets(std::span<const TokenId> words, std::size_t max_gen_len) {
  if (max_gen_len < 1) throw std::invalid_argument("response_targets: max_gen_len must be positive");
  std::vector<TokenId> out(words.begin(), words.begin() + static_cast<std::ptrdiff_t>(
                                                            std::min(words.size(), max_gen_len - 1)));
  out.push_back(special::kEos);
  return out;
}

#define HETERMPC_INSTANTIATE_DECODER(T)                                                                  \
  template struct DecoderParams<T>;                                                                      \
  template BasicTensor<T> build_memory(const NodeStates<T>&, bool);                                      \
  template BasicTensor<T> decoder_forward(std::span<const TokenId>, const BasicTensor<T>&,               \
                                          const DecoderParams<T>&, const DecoderConfig&);                \
  template BasicTensor<T> response_log_prob(std::span<const TokenId>, const BasicTensor<T>&,             \
                                            const DecoderParams<T>&, const DecoderConfig&);              \
  template BasicTensor<T> response_loss(std::span<const TokenId>, const BasicTensor<T>&,                 \
                                        const DecoderParams<T>&, const DecoderConfig&);                  \
  template std::vector<TokenId> generate_greedy(const BasicTensor<T>&, const DecoderParams<T>&,          \
                                                const DecoderConfig&);

HETERMPC_INSTANTIATE_DECODER(float)
HETERMPC_INSTANTIATE_DECODER(double)

#undef HETERMPC_INSTANTIATE_DECODER

}  // namespace hetermpc
