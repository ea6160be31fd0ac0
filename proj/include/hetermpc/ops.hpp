#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "hetermpc/tensor.hpp"

namespace hetermpc {

using TokenId = std::int32_t;

enum class Reduction { Mean, Sum };

// Differentiable ops. Rank-2 ops name their operands by rows/cols; rank-1
// tensors are accepted as a single row where noted.

/// a[m×k] · b[k×n]. Throws DimensionError naming both shapes on mismatch.
template <typename T>
BasicTensor<T> matmul(const BasicTensor<T>& a, const BasicTensor<T>& b);

template <typename T>
BasicTensor<T> transpose(const BasicTensor<T>& x);

template <typename T>
BasicTensor<T> add(const BasicTensor<T>& a, const BasicTensor<T>& b);

template <typename T>
BasicTensor<T> mul(const BasicTensor<T>& a, const BasicTensor<T>& b);

/// x[m×n] + bias[n], broadcast over rows.
template <typename T>
BasicTensor<T> add_row(const BasicTensor<T>& x, const BasicTensor<T>& bias);

template <typename T>
BasicTensor<T> scale(const BasicTensor<T>& x, T factor);

/// x times a learnable one-element tensor.
template <typename T>
BasicTensor<T> scale_by(const BasicTensor<T>& x, const BasicTensor<T>& factor);

template <typename T>
BasicTensor<T> sum(const BasicTensor<T>& x);

template <typename T>
BasicTensor<T> gelu(const BasicTensor<T>& x);

/// Softmax over the last axis (rank 1 or 2), max-subtracted. With `causal`,
/// row i attends to columns 0..i only and masked entries are exactly zero.
template <typename T>
BasicTensor<T> softmax(const BasicTensor<T>& x, bool causal = false);

/// Normalizes each row of x over its last axis, then applies gain and bias.
template <typename T>
BasicTensor<T> layer_norm(const BasicTensor<T>& x, const BasicTensor<T>& gain,
                          const BasicTensor<T>& bias, T eps = T(1e-5));

template <typename T>
BasicTensor<T> slice_rows(const BasicTensor<T>& x, std::size_t offset, std::size_t count);

template <typename T>
BasicTensor<T> slice_cols(const BasicTensor<T>& x, std::size_t offset, std::size_t count);

template <typename T>
BasicTensor<T> concat_rows(std::span<const BasicTensor<T>> parts);

template <typename T>
BasicTensor<T> concat_cols(std::span<const BasicTensor<T>> parts);

/// Rows of `table` selected by index, in order; repeats are allowed.
template <typename T>
BasicTensor<T> gather_rows(const BasicTensor<T>& table, std::span<const std::size_t> rows);

template <typename T>
BasicTensor<T> reshape(const BasicTensor<T>& x, Shape shape);

/// Negative log-softmax of the target column per row of logits[n×V], reduced
/// over rows whose target differs from `ignore_index`.
template <typename T>
BasicTensor<T> cross_entropy(const BasicTensor<T>& logits, std::span<const TokenId> targets,
                             TokenId ignore_index = -1, Reduction reduction = Reduction::Mean);

template <typename T>
BasicTensor<T> concat_rows(const std::vector<BasicTensor<T>>& parts) {
  return concat_rows(std::span<const BasicTensor<T>>(parts));
}

template <typename T>
BasicTensor<T> concat_cols(const std::vector<BasicTensor<T>>& parts) {
  return concat_cols(std::span<const BasicTensor<T>>(parts));
}

template <typename T>
BasicTensor<T> gather_rows(const BasicTensor<T>& table, const std::vector<std::size_t>& rows) {
  return gather_rows(table, std::span<const std::size_t>(rows));
}

template <typename T>
BasicTensor<T> cross_entropy(const BasicTensor<T>& logits, const std::vector<TokenId>& targets,
                             TokenId ignore_index = -1, Reduction reduction = Reduction::Mean) {
  return cross_entropy(logits, std::span<const TokenId>(targets), ignore_index, reduction);
}

}  // namespace hetermpc
