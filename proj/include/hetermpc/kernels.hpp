#pragma once

// Dense inner loops behind the tensor ops. `serial` is the reference;
// `omp` splits the same per-row arithmetic across threads, so the two agree
// bit-for-bit. The unqualified entry points pick one by problem size.

#include <cstddef>

namespace hetermpc::kernels {

/// C[m×n] (+)= op(A)·op(B), op(A) is m×k, op(B) is k×n. With trans_a the
/// buffer `a` holds a k×m matrix; with trans_b `b` holds n×k.
struct GemmArgs {
  bool trans_a = false;
  bool trans_b = false;
  std::size_t m = 0, n = 0, k = 0;
  bool accumulate = false;
};

namespace serial {
template <typename T>
void gemm(const GemmArgs& args, const T* a, const T* b, T* c);
/// Row-wise softmax. With `causal`, column j of row i is kept only if j <= i.
template <typename T>
void softmax_rows(const T* x, T* y, std::size_t rows, std::size_t cols, bool causal);
/// Writes y, plus the normalized input and per-row 1/std needed by backward.
template <typename T>
void layer_norm_rows(const T* x, const T* gain, const T* bias, T* y, T* xhat, T* rstd,
                     std::size_t rows, std::size_t cols, T eps);
template <typename T>
void gelu(const T* x, T* y, std::size_t n);
}  // namespace serial

namespace omp {
template <typename T>
void gemm(const GemmArgs& args, const T* a, const T* b, T* c);
template <typename T>
void softmax_rows(const T* x, T* y, std::size_t rows, std::size_t cols, bool causal);
template <typename T>
void layer_norm_rows(const T* x, const T* gain, const T* bias, T* y, T* xhat, T* rstd,
                     std::size_t rows, std::size_t cols, T eps);
template <typename T>
void gelu(const T* x, T* y, std::size_t n);
}  // namespace omp

/// Work (in multiply-adds) below which dispatch stays serial.
inline constexpr std::size_t kParallelThreshold = std::size_t{1} << 15;

template <typename T>
void gemm(const GemmArgs& args, const T* a, const T* b, T* c);
template <typename T>
void softmax_rows(const T* x, T* y, std::size_t rows, std::size_t cols, bool causal);
template <typename T>
void layer_norm_rows(const T* x, const T* gain, const T* bias, T* y, T* xhat, T* rstd,
                     std::size_t rows, std::size_t cols, T eps);
template <typename T>
void gelu(const T* x, T* y, std::size_t n);

/// Scalar GELU (erf form) and its derivative.
template <typename T>
T gelu_scalar(T x);
template <typename T>
T gelu_grad_scalar(T x);

}  // namespace hetermpc::kernels
