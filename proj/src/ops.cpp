#include "hetermpc/ops.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "hetermpc/kernels.hpp"

namespace hetermpc {

namespace {

template <typename T>
void require_matrix(const BasicTensor<T>& x, const char* op) {
  if (!x.defined() || x.rank() != 2) {
    throw DimensionError(std::string(op) + ": expected a matrix, got " +
                         (x.defined() ? shape_str(x.shape()) : std::string("undefined")));
  }
}

template <typename T>
void require_same_shape(const BasicTensor<T>& a, const BasicTensor<T>& b, const char* op) {
  if (a.shape() != b.shape()) {
    throw DimensionError(std::string(op) + ": shape mismatch " + shape_str(a.shape()) + " vs " +
                         shape_str(b.shape()));
  }
}

template <typename T>
using Node = TensorNode<T>;

template <typename T>
bool wants(const Node<T>& n) {
  return n.requires_grad;
}

}  // namespace

template <typename T>
BasicTensor<T> matmul(const BasicTensor<T>& a, const BasicTensor<T>& b) {
  if (!a.defined() || !b.defined() || a.rank() != 2 || b.rank() != 2 || a.dim(1) != b.dim(0)) {
    throw DimensionError("matmul: cannot multiply " +
                         (a.defined() ? shape_str(a.shape()) : std::string("undefined")) + " by " +
                         (b.defined() ? shape_str(b.shape()) : std::string("undefined")));
  }
  const std::size_t m = a.dim(0), k = a.dim(1), n = b.dim(1);
  std::vector<T> out(m * n);
  kernels::gemm<T>({false, false, m, n, k, false}, a.data().data(), b.data().data(), out.data());
  return BasicTensor<T>::from_op({m, n}, std::move(out), {a, b}, [m, k, n](Node<T>& o) {
    auto& na = *o.inputs[0];
    auto& nb = *o.inputs[1];
    if (wants(na)) {
      // dA += dC · Bᵀ
      kernels::gemm<T>({false, true, m, k, n, true}, o.grad.data(), nb.data->data(),
                       na.ensure_grad().data());
    }
    if (wants(nb)) {
      // dB += Aᵀ · dC
      kernels::gemm<T>({true, false, k, n, m, true}, na.data->data(), o.grad.data(),
                       nb.ensure_grad().data());
    }
  });
}

template <typename T>
BasicTensor<T> transpose(const BasicTensor<T>& x) {
  require_matrix(x, "transpose");
  const std::size_t r = x.dim(0), c = x.dim(1);
  std::vector<T> out(r * c);
  const auto src = x.data();
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < c; ++j) out[j * r + i] = src[i * c + j];
  return BasicTensor<T>::from_op({c, r}, std::move(out), {x}, [r, c](Node<T>& o) {
    auto& nx = *o.inputs[0];
    auto& g = nx.ensure_grad();
    for (std::size_t i = 0; i < r; ++i)
      for (std::size_t j = 0; j < c; ++j) g[i * c + j] += o.grad[j * r + i];
  });
}

template <typename T>
BasicTensor<T> add(const BasicTensor<T>& a, const BasicTensor<T>& b) {
  require_same_shape(a, b, "add");
  std::vector<T> out(a.numel());
  const auto da = a.data();
  const auto db = b.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = da[i] + db[i];
  return BasicTensor<T>::from_op(a.shape(), std::move(out), {a, b}, [](Node<T>& o) {
    for (auto& in : o.inputs) {
      if (!wants(*in)) continue;
      auto& g = in->ensure_grad();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += o.grad[i];
    }
  });
}

template <typename T>
BasicTensor<T> mul(const BasicTensor<T>& a, const BasicTensor<T>& b) {
  require_same_shape(a, b, "mul");
  std::vector<T> out(a.numel());
  const auto da = a.data();
  const auto db = b.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = da[i] * db[i];
  return BasicTensor<T>::from_op(a.shape(), std::move(out), {a, b}, [](Node<T>& o) {
    auto& na = *o.inputs[0];
    auto& nb = *o.inputs[1];
    if (wants(na)) {
      auto& g = na.ensure_grad();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += o.grad[i] * (*nb.data)[i];
    }
    if (wants(nb)) {
      auto& g = nb.ensure_grad();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += o.grad[i] * (*na.data)[i];
    }
  });
}

template <typename T>
BasicTensor<T> add_row(const BasicTensor<T>& x, const BasicTensor<T>& bias) {
  const std::size_t rows = x.rows(), cols = x.cols();
  if (bias.numel() != cols) {
    throw DimensionError("add_row: bias " + shape_str(bias.shape()) + " does not match " +
                         shape_str(x.shape()));
  }
  std::vector<T> out(x.data().begin(), x.data().end());
  const auto db = bias.data();
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t j = 0; j < cols; ++j) out[i * cols + j] += db[j];
  return BasicTensor<T>::from_op(x.shape(), std::move(out), {x, bias}, [rows, cols](Node<T>& o) {
    auto& nx = *o.inputs[0];
    auto& nb = *o.inputs[1];
    if (wants(nx)) {
      auto& g = nx.ensure_grad();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += o.grad[i];
    }
    if (wants(nb)) {
      auto& g = nb.ensure_grad();
      for (std::size_t i = 0; i < rows; ++i)
        for (std::size_t j = 0; j < cols; ++j) g[j] += o.grad[i * cols + j];
    }
  });
}

template <typename T>
BasicTensor<T> scale(const BasicTensor<T>& x, T factor) {
  std::vector<T> out(x.data().begin(), x.data().end());
  for (auto& v : out) v *= factor;
  return BasicTensor<T>::from_op(x.shape(), std::move(out), {x}, [factor](Node<T>& o) {
    auto& g = o.inputs[0]->ensure_grad();
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += o.grad[i] * factor;
  });
}

template <typename T>
BasicTensor<T> scale_by(const BasicTensor<T>& x, const BasicTensor<T>& factor) {
  if (factor.numel() != 1) {
    throw DimensionError("scale_by: factor must hold one value, got " + shape_str(factor.shape()));
  }
  const T f = factor.item();
  std::vector<T> out(x.data().begin(), x.data().end());
  for (auto& v : out) v *= f;
  return BasicTensor<T>::from_op(x.shape(), std::move(out), {x, factor}, [](Node<T>& o) {
    auto& nx = *o.inputs[0];
    auto& nf = *o.inputs[1];
    const T f = (*nf.data)[0];
    if (wants(nx)) {
      auto& g = nx.ensure_grad();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += o.grad[i] * f;
    }
    if (wants(nf)) {
      T acc = T(0);
      for (std::size_t i = 0; i < o.grad.size(); ++i) acc += o.grad[i] * (*nx.data)[i];
      nf.ensure_grad()[0] += acc;
    }
  });
}

template <typename T>
BasicTensor<T> sum(const BasicTensor<T>& x) {
  T total = T(0);
  for (T v : x.data()) total += v;
  return BasicTensor<T>::from_op({1}, {total}, {x}, [](Node<T>& o) {
    auto& g = o.inputs[0]->ensure_grad();
    for (auto& v : g) v += o.grad[0];
  });
}

template <typename T>
BasicTensor<T> gelu(const BasicTensor<T>& x) {
  std::vector<T> out(x.numel());
  kernels::gelu<T>(x.data().data(), out.data(), out.size());
  return BasicTensor<T>::from_op(x.shape(), std::move(out), {x}, [](Node<T>& o) {
    auto& nx = *o.inputs[0];
    auto& g = nx.ensure_grad();
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += o.grad[i] * kernels::gelu_grad_scalar((*nx.data)[i]);
  });
}

template <typename T>
BasicTensor<T> softmax(const BasicTensor<T>& x, bool causal) {
  if (!x.defined() || x.numel() == 0) throw DimensionError("softmax: empty input");
  const std::size_t rows = x.rows(), cols = x.cols();
  std::vector<T> out(x.numel());
  kernels::softmax_rows<T>(x.data().data(), out.data(), rows, cols, causal);
  return BasicTensor<T>::from_op(x.shape(), std::move(out), {x}, [rows, cols](Node<T>& o) {
    auto& g = o.inputs[0]->ensure_grad();
    const auto& y = *o.data;
    for (std::size_t i = 0; i < rows; ++i) {
      const std::size_t base = i * cols;
      T dot = T(0);
      for (std::size_t j = 0; j < cols; ++j) dot += y[base + j] * o.grad[base + j];
      for (std::size_t j = 0; j < cols; ++j) g[base + j] += y[base + j] * (o.grad[base + j] - dot);
    }
  });
}

template <typename T>
BasicTensor<T> layer_norm(const BasicTensor<T>& x, const BasicTensor<T>& gain,
                          const BasicTensor<T>& bias, T eps) {
  const std::size_t rows = x.rows(), cols = x.cols();
  if (gain.numel() != cols || bias.numel() != cols) {
    throw DimensionError("layer_norm: gain " + shape_str(gain.shape()) + " / bias " +
                         shape_str(bias.shape()) + " do not match last axis of " +
                         shape_str(x.shape()));
  }
  std::vector<T> out(x.numel());
  auto xhat = std::make_shared<std::vector<T>>(x.numel());
  auto rstd = std::make_shared<std::vector<T>>(rows);
  kernels::layer_norm_rows<T>(x.data().data(), gain.data().data(), bias.data().data(), out.data(),
                              xhat->data(), rstd->data(), rows, cols, eps);
  return BasicTensor<T>::from_op(
      x.shape(), std::move(out), {x, gain, bias}, [rows, cols, xhat, rstd](Node<T>& o) {
        auto& nx = *o.inputs[0];
        auto& ng = *o.inputs[1];
        auto& nb = *o.inputs[2];
        const auto& xh = *xhat;
        if (wants(ng)) {
          auto& g = ng.ensure_grad();
          for (std::size_t i = 0; i < rows; ++i)
            for (std::size_t j = 0; j < cols; ++j) g[j] += o.grad[i * cols + j] * xh[i * cols + j];
        }
        if (wants(nb)) {
          auto& g = nb.ensure_grad();
          for (std::size_t i = 0; i < rows; ++i)
            for (std::size_t j = 0; j < cols; ++j) g[j] += o.grad[i * cols + j];
        }
        if (wants(nx)) {
          auto& g = nx.ensure_grad();
          const auto& gain_v = *ng.data;
          const T n = static_cast<T>(cols);
          for (std::size_t i = 0; i < rows; ++i) {
            const std::size_t base = i * cols;
            T sum_d = T(0), sum_dx = T(0);
            for (std::size_t j = 0; j < cols; ++j) {
              const T d = o.grad[base + j] * gain_v[j];
              sum_d += d;
              sum_dx += d * xh[base + j];
            }
            const T r = (*rstd)[i];
            for (std::size_t j = 0; j < cols; ++j) {
              const T d = o.grad[base + j] * gain_v[j];
              g[base + j] += r / n * (n * d - sum_d - xh[base + j] * sum_dx);
            }
          }
        }
      });
}

template <typename T>
BasicTensor<T> slice_rows(const BasicTensor<T>& x, std::size_t offset, std::size_t count) {
  require_matrix(x, "slice_rows");
  const std::size_t cols = x.dim(1);
  if (offset + count > x.dim(0)) {
    throw DimensionError("slice_rows: rows [" + std::to_string(offset) + ", " +
                         std::to_string(offset + count) + ") out of range for " + shape_str(x.shape()));
  }
  const auto src = x.data();
  std::vector<T> out(src.begin() + static_cast<std::ptrdiff_t>(offset * cols),
                     src.begin() + static_cast<std::ptrdiff_t>((offset + count) * cols));
  return BasicTensor<T>::from_op({count, cols}, std::move(out), {x}, [offset, cols](Node<T>& o) {
    auto& g = o.inputs[0]->ensure_grad();
    for (std::size_t i = 0; i < o.grad.size(); ++i) g[offset * cols + i] += o.grad[i];
  });
}

template <typename T>
BasicTensor<T> slice_cols(const BasicTensor<T>& x, std::size_t offset, std::size_t count) {
  const std::size_t rows = x.rows(), cols = x.cols();
  if (offset + count > cols) {
    throw DimensionError("slice_cols: cols [" + std::to_string(offset) + ", " +
                         std::to_string(offset + count) + ") out of range for " + shape_str(x.shape()));
  }
  const auto src = x.data();
  std::vector<T> out(rows * count);
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t j = 0; j < count; ++j) out[i * count + j] = src[i * cols + offset + j];
  return BasicTensor<T>::from_op({rows, count}, std::move(out), {x},
                                 [rows, cols, offset, count](Node<T>& o) {
                                   auto& g = o.inputs[0]->ensure_grad();
                                   for (std::size_t i = 0; i < rows; ++i)
                                     for (std::size_t j = 0; j < count; ++j)
                                       g[i * cols + offset + j] += o.grad[i * count + j];
                                 });
}

template <typename T>
BasicTensor<T> concat_rows(std::span<const BasicTensor<T>> parts) {
  if (parts.empty()) throw DimensionError("concat_rows: no inputs");
  const std::size_t cols = parts.front().cols();
  std::size_t rows = 0;
  for (const auto& p : parts) {
    if (p.cols() != cols) {
      throw DimensionError("concat_rows: column mismatch " + shape_str(parts.front().shape()) +
                           " vs " + shape_str(p.shape()));
    }
    rows += p.rows();
  }
  std::vector<T> out;
  out.reserve(rows * cols);
  for (const auto& p : parts) out.insert(out.end(), p.data().begin(), p.data().end());
  std::vector<BasicTensor<T>> inputs(parts.begin(), parts.end());
  return BasicTensor<T>::from_op({rows, cols}, std::move(out), std::move(inputs), [](Node<T>& o) {
    std::size_t offset = 0;
    for (auto& in : o.inputs) {
      const std::size_t n = in->data->size();
      if (wants(*in)) {
        auto& g = in->ensure_grad();
        for (std::size_t i = 0; i < n; ++i) g[i] += o.grad[offset + i];
      }
      offset += n;
    }
  });
}

template <typename T>
BasicTensor<T> concat_cols(std::span<const BasicTensor<T>> parts) {
  if (parts.empty()) throw DimensionError("concat_cols: no inputs");
  const std::size_t rows = parts.front().rows();
  std::size_t cols = 0;
  std::vector<std::size_t> widths;
  for (const auto& p : parts) {
    if (p.rows() != rows) {
      throw DimensionError("concat_cols: row mismatch " + shape_str(parts.front().shape()) +
                           " vs " + shape_str(p.shape()));
    }
    widths.push_back(p.cols());
    cols += p.cols();
  }
  std::vector<T> out(rows * cols);
  std::size_t offset = 0;
  for (std::size_t k = 0; k < parts.size(); ++k) {
    const auto src = parts[k].data();
    for (std::size_t i = 0; i < rows; ++i)
      for (std::size_t j = 0; j < widths[k]; ++j) out[i * cols + offset + j] = src[i * widths[k] + j];
    offset += widths[k];
  }
  std::vector<BasicTensor<T>> inputs(parts.begin(), parts.end());
  return BasicTensor<T>::from_op({rows, cols}, std::move(out), std::move(inputs),
                                 [rows, cols, widths](Node<T>& o) {
                                   std::size_t offset = 0;
                                   for (std::size_t k = 0; k < o.inputs.size(); ++k) {
                                     auto& in = *o.inputs[k];
                                     if (wants(in)) {
                                       auto& g = in.ensure_grad();
                                       for (std::size_t i = 0; i < rows; ++i)
                                         for (std::size_t j = 0; j < widths[k]; ++j)
                                           g[i * widths[k] + j] += o.grad[i * cols + offset + j];
                                     }
                                     offset += widths[k];
                                   }
                                 });
}

template <typename T>
BasicTensor<T> gather_rows(const BasicTensor<T>& table, std::span<const std::size_t> rows) {
  require_matrix(table, "gather_rows");
  const std::size_t n = table.dim(0), cols = table.dim(1);
  std::vector<T> out;
  out.reserve(rows.size() * cols);
  const auto src = table.data();
  for (auto r : rows) {
    if (r >= n) {
      throw DimensionError("gather_rows: row " + std::to_string(r) + " out of range for " +
                           shape_str(table.shape()));
    }
    out.insert(out.end(), src.begin() + static_cast<std::ptrdiff_t>(r * cols),
               src.begin() + static_cast<std::ptrdiff_t>((r + 1) * cols));
  }
  std::vector<std::size_t> index(rows.begin(), rows.end());
  Shape shape{index.size(), cols};
  return BasicTensor<T>::from_op(std::move(shape), std::move(out), {table},
                                 [index = std::move(index), cols](Node<T>& o) {
                                   auto& g = o.inputs[0]->ensure_grad();
                                   for (std::size_t i = 0; i < index.size(); ++i)
                                     for (std::size_t j = 0; j < cols; ++j)
                                       g[index[i] * cols + j] += o.grad[i * cols + j];
                                 });
}

template <typename T>
BasicTensor<T> reshape(const BasicTensor<T>& x, Shape shape) {
  if (shape_numel(shape) != x.numel()) {
    throw DimensionError("reshape: cannot view " + shape_str(x.shape()) + " as " + shape_str(shape));
  }
  std::vector<T> out(x.data().begin(), x.data().end());
  return BasicTensor<T>::from_op(std::move(shape), std::move(out), {x}, [](Node<T>& o) {
    auto& g = o.inputs[0]->ensure_grad();
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += o.grad[i];
  });
}

template <typename T>
BasicTensor<T> cross_entropy(const BasicTensor<T>& logits, std::span<const TokenId> targets,
                             TokenId ignore_index, Reduction reduction) {
  require_matrix(logits, "cross_entropy");
  const std::size_t n = logits.dim(0), vocab = logits.dim(1);
  if (targets.size() != n) {
    throw DimensionError("cross_entropy: " + std::to_string(targets.size()) + " targets for logits " +
                         shape_str(logits.shape()));
  }
  std::size_t counted = 0;
  for (auto t : targets) {
    if (t == ignore_index) continue;
    if (t < 0 || static_cast<std::size_t>(t) >= vocab) {
      throw DimensionError("cross_entropy: target " + std::to_string(t) + " outside vocabulary of " +
                           std::to_string(vocab));
    }
    ++counted;
  }
  if (counted == 0) throw std::invalid_argument("cross_entropy: every position is ignored");

  auto probs = std::make_shared<std::vector<T>>(n * vocab);
  kernels::softmax_rows<T>(logits.data().data(), probs->data(), n, vocab, false);
  const auto x = logits.data();
  T total = T(0);
  for (std::size_t i = 0; i < n; ++i) {
    if (targets[i] == ignore_index) continue;
    const T* row = x.data() + i * vocab;
    T peak = -std::numeric_limits<T>::infinity();
    for (std::size_t j = 0; j < vocab; ++j) peak = std::max(peak, row[j]);
    T acc = T(0);
    for (std::size_t j = 0; j < vocab; ++j) acc += std::exp(row[j] - peak);
    total += peak + std::log(acc) - row[static_cast<std::size_t>(targets[i])];
  }
  const T denom = reduction == Reduction::Mean ? static_cast<T>(counted) : T(1);
  std::vector<TokenId> tgt(targets.begin(), targets.end());
  return BasicTensor<T>::from_op(
      {1}, {total / denom}, {logits},
      [probs, tgt = std::move(tgt), n, vocab, ignore_index, denom](Node<T>& o) {
        auto& g = o.inputs[0]->ensure_grad();
        const T upstream = o.grad[0] / denom;
        for (std::size_t i = 0; i < n; ++i) {
          if (tgt[i] == ignore_index) continue;
          for (std::size_t j = 0; j < vocab; ++j) g[i * vocab + j] += upstream * (*probs)[i * vocab + j];
          g[i * vocab + static_cast<std::size_t>(tgt[i])] -= upstream;
        }
      });
}

#define HETERMPC_INSTANTIATE_OPS(T)                                                                \
  template BasicTensor<T> matmul(const BasicTensor<T>&, const BasicTensor<T>&);                    \
  template BasicTensor<T> transpose(const BasicTensor<T>&);                                        \
  template BasicTensor<T> add(const BasicTensor<T>&, const BasicTensor<T>&);                       \
  template BasicTensor<T> mul(const BasicTensor<T>&, const BasicTensor<T>&);                       \
  template BasicTensor<T> add_row(const BasicTensor<T>&, const BasicTensor<T>&);                   \
  template BasicTensor<T> scale(const BasicTensor<T>&, T);                                         \
  template BasicTensor<T> scale_by(const BasicTensor<T>&, const BasicTensor<T>&);                  \
  template BasicTensor<T> sum(const BasicTensor<T>&);                                              \
  template BasicTensor<T> gelu(const BasicTensor<T>&);                                             \
  template BasicTensor<T> softmax(const BasicTensor<T>&, bool);                                    \
  template BasicTensor<T> layer_norm(const BasicTensor<T>&, const BasicTensor<T>&,                 \
                                     const BasicTensor<T>&, T);                                    \
  template BasicTensor<T> slice_rows(const BasicTensor<T>&, std::size_t, std::size_t);             \
  template BasicTensor<T> slice_cols(const BasicTensor<T>&, std::size_t, std::size_t);             \
  template BasicTensor<T> concat_rows(std::span<const BasicTensor<T>>);                            \
  template BasicTensor<T> concat_cols(std::span<const BasicTensor<T>>);                            \
  template BasicTensor<T> gather_rows(const BasicTensor<T>&, std::span<const std::size_t>);        \
  template BasicTensor<T> reshape(const BasicTensor<T>&, Shape);                                   \
  template BasicTensor<T> cross_entropy(const BasicTensor<T>&, std::span<const TokenId>, TokenId, \
                                        Reduction);

HETERMPC_INSTANTIATE_OPS(float)
HETERMPC_INSTANTIATE_OPS(double)

#undef HETERMPC_INSTANTIATE_OPS

}  // namespace hetermpc
