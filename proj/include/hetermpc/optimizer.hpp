#pragma once

#include <vector>

#include "hetermpc/parameters.hpp"

namespace hetermpc {

/// Decoupled-weight-decay Adam. Decay applies to rank-2 tensors only.
template <typename T>
class AdamW {
 public:
  struct Options {
    T beta1 = T(0.9);
    T beta2 = T(0.999);
    T eps = T(1e-8);
    T weight_decay = T(0.01);
  };

  AdamW() : AdamW(Options{}) {}
  explicit AdamW(Options options) : options_(options) {}

  /// One update of every tensor with a populated gradient.
  void step(ParameterSet<T>& params, T lr);
  std::size_t steps_taken() const { return t_; }

 private:
  Options options_;
  std::size_t t_ = 0;
  std::vector<std::vector<T>> m_, v_;
};

/// lr(step) = lr0 · (1 − step / total), reaching 0 at step == total.
class LinearDecay {
 public:
  LinearDecay(double lr0, std::size_t total_steps);
  double at(std::size_t step) const;
  std::size_t total_steps() const { return total_; }

 private:
  double lr0_;
  std::size_t total_;
};

template <typename T>
double global_grad_norm(const ParameterSet<T>& params);

/// Scales every gradient by max_norm / (g + 1e-6) when the global norm g exceeds
/// max_norm. Returns the factor applied (1 when unchanged).
template <typename T>
double clip_gradients(ParameterSet<T>& params, double max_norm);

extern template class AdamW<float>;
extern template class AdamW<double>;

}  // namespace hetermpc
