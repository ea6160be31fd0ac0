#include "hetermpc/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <omp.h>

#include "hetermpc/parallel.hpp"

namespace hetermpc::kernels {

namespace {

// Row bodies shared by both back ends; only the row loop differs.

template <typename T>
void gemm_row(const GemmArgs& g, const T* a, const T* b, T* c, std::size_t i) {
  T* ci = c + i * g.n;
  if (!g.accumulate) {
    for (std::size_t j = 0; j < g.n; ++j) ci[j] = T(0);
  }
  for (std::size_t p = 0; p < g.k; ++p) {
    const T aip = g.trans_a ? a[p * g.m + i] : a[i * g.k + p];
    if (g.trans_b) {
      for (std::size_t j = 0; j < g.n; ++j) ci[j] += aip * b[j * g.k + p];
    } else {
      const T* bp = b + p * g.n;
      for (std::size_t j = 0; j < g.n; ++j) ci[j] += aip * bp[j];
    }
  }
}

template <typename T>
void softmax_row(const T* x, T* y, std::size_t cols, std::size_t valid) {
  T peak = -std::numeric_limits<T>::infinity();
  for (std::size_t j = 0; j < valid; ++j) peak = std::max(peak, x[j]);
  T total = T(0);
  for (std::size_t j = 0; j < valid; ++j) {
    y[j] = std::exp(x[j] - peak);
    total += y[j];
  }
  for (std::size_t j = 0; j < valid; ++j) y[j] /= total;
  for (std::size_t j = valid; j < cols; ++j) y[j] = T(0);
}

template <typename T>
void layer_norm_row(const T* x, const T* gain, const T* bias, T* y, T* xhat, T* rstd,
                    std::size_t cols, T eps) {
  T mean = T(0);
  for (std::size_t j = 0; j < cols; ++j) mean += x[j];
  mean /= static_cast<T>(cols);
  T var = T(0);
  for (std::size_t j = 0; j < cols; ++j) {
    const T c = x[j] - mean;
    var += c * c;
  }
  var /= static_cast<T>(cols);
  const T inv = T(1) / std::sqrt(var + eps);
  *rstd = inv;
  for (std::size_t j = 0; j < cols; ++j) {
    xhat[j] = (x[j] - mean) * inv;
    y[j] = xhat[j] * gain[j] + bias[j];
  }
}

}  // namespace

template <typename T>
T gelu_scalar(T x) {
  return T(0.5) * x * (T(1) + std::erf(x / std::sqrt(T(2))));
}

template <typename T>
T gelu_grad_scalar(T x) {
  const T cdf = T(0.5) * (T(1) + std::erf(x / std::sqrt(T(2))));
  const T pdf = std::exp(T(-0.5) * x * x) / std::sqrt(T(2) * std::acos(T(-1)));
  return cdf + x * pdf;
}

namespace serial {

template <typename T>
void gemm(const GemmArgs& args, const T* a, const T* b, T* c) {
  for (std::size_t i = 0; i < args.m; ++i) gemm_row(args, a, b, c, i);
}

template <typename T>
void softmax_rows(const T* x, T* y, std::size_t rows, std::size_t cols, bool causal) {
  for (std::size_t i = 0; i < rows; ++i) {
    const std::size_t valid = causal ? std::min(cols, i + 1) : cols;
    softmax_row(x + i * cols, y + i * cols, cols, valid);
  }
}

template <typename T>
void layer_norm_rows(const T* x, const T* gain, const T* bias, T* y, T* xhat, T* rstd,
                     std::size_t rows, std::size_t cols, T eps) {
  for (std::size_t i = 0; i < rows; ++i) {
    layer_norm_row(x + i * cols, gain, bias, y + i * cols, xhat + i * cols, rstd + i, cols, eps);
  }
}

template <typename T>
void gelu(const T* x, T* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] = gelu_scalar(x[i]);
}

}  // namespace serial

namespace omp {

template <typename T>
void gemm(const GemmArgs& args, const T* a, const T* b, T* c) {
  const auto m = static_cast<std::ptrdiff_t>(args.m);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < m; ++i) gemm_row(args, a, b, c, static_cast<std::size_t>(i));
}

template <typename T>
void softmax_rows(const T* x, T* y, std::size_t rows, std::size_t cols, bool causal) {
  const auto n = static_cast<std::ptrdiff_t>(rows);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t s = 0; s < n; ++s) {
    const auto i = static_cast<std::size_t>(s);
    const std::size_t valid = causal ? std::min(cols, i + 1) : cols;
    softmax_row(x + i * cols, y + i * cols, cols, valid);
  }
}

template <typename T>
void layer_norm_rows(const T* x, const T* gain, const T* bias, T* y, T* xhat, T* rstd,
                     std::size_t rows, std::size_t cols, T eps) {
  const auto n = static_cast<std::ptrdiff_t>(rows);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t s = 0; s < n; ++s) {
    const auto i = static_cast<std::size_t>(s);
    layer_norm_row(x + i * cols, gain, bias, y + i * cols, xhat + i * cols, rstd + i, cols, eps);
  }
}

template <typename T>
void gelu(const T* x, T* y, std::size_t n) {
  const auto count = static_cast<std::ptrdiff_t>(n);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < count; ++i) y[i] = gelu_scalar(x[i]);
}

}  // namespace omp

namespace {
bool go_parallel(std::size_t work) {
  return work >= kParallelThreshold && !in_parallel_region() && omp_get_max_threads() > 1;
}
}  // namespace

template <typename T>
void gemm(const GemmArgs& args, const T* a, const T* b, T* c) {
  if (go_parallel(args.m * args.n * args.k) && args.m > 1) {
    omp::gemm(args, a, b, c);
  } else {
    serial::gemm(args, a, b, c);
  }
}

template <typename T>
void softmax_rows(const T* x, T* y, std::size_t rows, std::size_t cols, bool causal) {
  if (go_parallel(rows * cols * 8) && rows > 1) {
    omp::softmax_rows(x, y, rows, cols, causal);
  } else {
    serial::softmax_rows(x, y, rows, cols, causal);
  }
}

template <typename T>
void layer_norm_rows(const T* x, const T* gain, const T* bias, T* y, T* xhat, T* rstd,
                     std::size_t rows, std::size_t cols, T eps) {
  if (go_parallel(rows * cols * 8) && rows > 1) {
    omp::layer_norm_rows(x, gain, bias, y, xhat, rstd, rows, cols, eps);
  } else {
    serial::layer_norm_rows(x, gain, bias, y, xhat, rstd, rows, cols, eps);
  }
}

template <typename T>
void gelu(const T* x, T* y, std::size_t n) {
  if (go_parallel(n * 16)) {
    omp::gelu(x, y, n);
  } else {
    serial::gelu(x, y, n);
  }
}

#define HETERMPC_INSTANTIATE_KERNELS(T)                                                         \
  template T gelu_scalar<T>(T);                                                                 \
  template T gelu_grad_scalar<T>(T);                                                            \
  template void serial::gemm<T>(const GemmArgs&, const T*, const T*, T*);                       \
  template void omp::gemm<T>(const GemmArgs&, const T*, const T*, T*);                          \
  template void gemm<T>(const GemmArgs&, const T*, const T*, T*);                               \
  template void serial::softmax_rows<T>(const T*, T*, std::size_t, std::size_t, bool);          \
  template void omp::softmax_rows<T>(const T*, T*, std::size_t, std::size_t, bool);             \
  template void softmax_rows<T>(const T*, T*, std::size_t, std::size_t, bool);                  \
  template void serial::layer_norm_rows<T>(const T*, const T*, const T*, T*, T*, T*,            \
                                           std::size_t, std::size_t, T);                        \
  template void omp::layer_norm_rows<T>(const T*, const T*, const T*, T*, T*, T*, std::size_t,  \
                                        std::size_t, T);                                        \
  template void layer_norm_rows<T>(const T*, const T*, const T*, T*, T*, T*, std::size_t,       \
                                   std::size_t, T);                                             \
  template void serial::gelu<T>(const T*, T*, std::size_t);                                     \
  template void omp::gelu<T>(const T*, T*, std::size_t);                                        \
  template void gelu<T>(const T*, T*, std::size_t);

HETERMPC_INSTANTIATE_KERNELS(float)
HETERMPC_INSTANTIATE_KERNELS(double)

#undef HETERMPC_INSTANTIATE_KERNELS

}  // namespace hetermpc::kernels
