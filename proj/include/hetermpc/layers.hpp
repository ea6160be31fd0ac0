#pragma once

#include <string>

#include "hetermpc/ops.hpp"
#include "hetermpc/parameters.hpp"

namespace hetermpc {

// Standard Transformer pieces. Each `create` registers its tensors in a
// ParameterSet under `name` + suffix, or binds to them if already present.

template <typename T>
struct Linear {
  BasicTensor<T> weight;  // in × out
  BasicTensor<T> bias;    // out

  static Linear create(ParameterSet<T>& params, const std::string& name, std::size_t in, std::size_t out);
  BasicTensor<T> operator()(const BasicTensor<T>& x) const;
};

template <typename T>
struct LayerNorm {
  BasicTensor<T> gain;
  BasicTensor<T> bias;

  static LayerNorm create(ParameterSet<T>& params, const std::string& name, std::size_t d);
  BasicTensor<T> operator()(const BasicTensor<T>& x) const;
};

/// d → 4d → d with GELU.
template <typename T>
struct FeedForward {
  Linear<T> up;
  Linear<T> down;

  static FeedForward create(ParameterSet<T>& params, const std::string& name, std::size_t d);
  BasicTensor<T> operator()(const BasicTensor<T>& x) const;
};

template <typename T>
struct MultiHeadAttention {
  Linear<T> query, key, value, output;
  std::size_t heads = 1;

  static MultiHeadAttention create(ParameterSet<T>& params, const std::string& name, std::size_t d,
                                   std::size_t heads);
  /// Rows of `queries` attend over rows of `keys_values`. `causal` requires
  /// the two to have the same row count.
  BasicTensor<T> operator()(const BasicTensor<T>& queries, const BasicTensor<T>& keys_values,
                            bool causal = false) const;
};

/// Post-norm encoder layer: LN(x + MHA(x)), then LN(h + FFN(h)).
template <typename T>
struct EncoderLayer {
  MultiHeadAttention<T> attention;
  LayerNorm<T> attention_norm;
  FeedForward<T> ffn;
  LayerNorm<T> ffn_norm;

  static EncoderLayer create(ParameterSet<T>& params, const std::string& name, std::size_t d,
                             std::size_t heads);
  BasicTensor<T> operator()(const BasicTensor<T>& x) const;
};

/// Post-norm decoder layer: causal self-attention, cross-attention over the
/// memory, FFN; each followed by a residual and layer norm.
template <typename T>
struct DecoderLayer {
  MultiHeadAttention<T> self_attention;
  LayerNorm<T> self_norm;
  MultiHeadAttention<T> cross_attention;
  LayerNorm<T> cross_norm;
  FeedForward<T> ffn;
  LayerNorm<T> ffn_norm;

  static DecoderLayer create(ParameterSet<T>& params, const std::string& name, std::size_t d,
                             std::size_t heads);
  BasicTensor<T> operator()(const BasicTensor<T>& x, const BasicTensor<T>& memory) const;
};

}  // namespace hetermpc
