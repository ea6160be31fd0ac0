#include "hetermpc/layers.hpp"

#include <cmath>

namespace hetermpc {

template <typename T>
Linear<T> Linear<T>::create(ParameterSet<T>& params, const std::string& name, std::size_t in,
                            std::size_t out) {
  return {params.get(name + ".w", {in, out}, Init::TruncatedNormal), params.get(name + ".b", {out}, Init::Zeros)};
}

template <typename T>
BasicTensor<T> Linear<T>::operator()(const BasicTensor<T>& x) const {
  return add_row(matmul(x, weight), bias);
}

template <typename T>
LayerNorm<T> LayerNorm<T>::create(ParameterSet<T>& params, const std::string& name, std::size_t d) {
  return {params.get(name + ".gain", {d}, Init::Ones), params.get(name + ".bias", {d}, Init::Zeros)};
}

template <typename T>
BasicTensor<T> LayerNorm<T>::operator()(const BasicTensor<T>& x) const {
  return layer_norm(x, gain, bias);
}

template <typename T>
FeedForward<T> FeedForward<T>::create(ParameterSet<T>& params, const std::string& name, std::size_t d) {
  return {Linear<T>::create(params, name + ".up", d, 4 * d), Linear<T>::create(params, name + ".down", 4 * d, d)};
}

template <typename T>
BasicTensor<T> FeedForward<T>::operator()(const BasicTensor<T>& x) const {
  return down(gelu(up(x)));
}

template <typename T>
MultiHeadAttention<T> MultiHeadAttention<T>::create(ParameterSet<T>& params, const std::string& name,
                                                    std::size_t d, std::size_t heads) {
  if (heads == 0 || d % heads != 0) {
    throw std::invalid_argument("attention: width " + std::to_string(d) + " not divisible by " +
                                std::to_string(heads) + " heads");
  }
  return {Linear<T>::create(params, name + ".q", d, d), Linear<T>::create(params, name + ".k", d, d),
          Linear<T>::create(params, name + ".v", d, d), Linear<T>::create(params, name + ".o", d, d), heads};
}

template <typename T>
BasicTensor<T> MultiHeadAttention<T>::operator()(const BasicTensor<T>& queries,
                                                 const BasicTensor<T>& keys_values, bool causal) const {
  if (causal && queries.rows() != keys_values.rows()) {
    throw DimensionError("causal attention needs equal query and key lengths");
  }
  const auto q = query(queries);
  const auto k = key(keys_values);
  const auto v = value(keys_values);
  const std::size_t d = q.cols();
  const std::size_t dh = d / heads;
  const T inv_sqrt = T(1) / std::sqrt(static_cast<T>(dh));
  std::vector<BasicTensor<T>> per_head;
  per_head.reserve(heads);
  for (std::size_t h = 0; h < heads; ++h) {
    const auto qh = slice_cols(q, h * dh, dh);
    const auto kh = slice_cols(k, h * dh, dh);
    const auto vh = slice_cols(v, h * dh, dh);
    const auto weights = softmax(scale(matmul(qh, transpose(kh)), inv_sqrt), causal);
    per_head.push_back(matmul(weights, vh));
  }
  return output(concat_cols(per_head));
}

template <typename T>
EncoderLayer<T> EncoderLayer<T>::create(ParameterSet<T>& params, const std::string& name, std::size_t d,
                                        std::size_t heads) {
  return {MultiHeadAttention<T>::create(params, name + ".attn", d, heads),
          LayerNorm<T>::create(params, name + ".attn_norm", d), FeedForward<T>::create(params, name + ".ffn", d),
          LayerNorm<T>::create(params, name + ".ffn_norm", d)};
}

template <typename T>
BasicTensor<T> EncoderLayer<T>::operator()(const BasicTensor<T>& x) const {
  const auto h = attention_norm(add(x, attention(x, x)));
  return ffn_norm(add(h, ffn(h)));
}

template <typename T>
DecoderLayer<T> DecoderLayer<T>::create(ParameterSet<T>& params, const std::string& name, std::size_t d,
                                        std::size_t heads) {
  return {MultiHeadAttention<T>::create(params, name + ".self_attn", d, heads),
          LayerNorm<T>::create(params, name + ".self_norm", d),
          MultiHeadAttention<T>::create(params, name + ".cross_attn", d, heads),
          LayerNorm<T>::create(params, name + ".cross_norm", d), FeedForward<T>::create(params, name + ".ffn", d),
          LayerNorm<T>::create(params, name + ".ffn_norm", d)};
}

template <typename T>
BasicTensor<T> DecoderLayer<T>::operator()(const BasicTensor<T>& x, const BasicTensor<T>& memory) const {
  const auto a = self_norm(add(x, self_attention(x, x, true)));
  const auto c = cross_norm(add(a, cross_attention(a, memory)));
  return ffn_norm(add(c, ffn(c)));
}

template struct Linear<float>;
template struct Linear<double>;
template struct LayerNorm<float>;
template struct LayerNorm<double>;
template struct FeedForward<float>;
template struct FeedForward<double>;
template struct MultiHeadAttention<float>;
template struct MultiHeadAttention<double>;
template struct EncoderLayer<float>;
template struct EncoderLayer<double>;
template struct DecoderLayer<float>;
template struct DecoderLayer<double>;

}  // namespace hetermpc
