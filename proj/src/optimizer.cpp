#include "hetermpc/optimizer.hpp"

#include <cmath>
#include <stdexcept>

namespace hetermpc {

template <typename T>
void AdamW<T>::step(ParameterSet<T>& params, T lr) {
  const auto& entries = params.entries();
  if (m_.empty()) {
    m_.resize(entries.size());
    v_.resize(entries.size());
  } else if (m_.size() != entries.size()) {
    throw std::logic_error("AdamW: parameter set changed size between steps");
  }
  ++t_;
  const T b1 = options_.beta1, b2 = options_.beta2;
  const T bias1 = T(1) - std::pow(b1, static_cast<T>(t_));
  const T bias2 = T(1) - std::pow(b2, static_cast<T>(t_));
  for (std::size_t i = 0; i < entries.size(); ++i) {
    auto tensor = entries[i].tensor;
    if (!tensor.has_grad()) continue;
    auto value = tensor.data();
    const auto grad = tensor.grad();
    auto& m = m_[i];
    auto& v = v_[i];
    if (m.empty()) {
      m.assign(value.size(), T(0));
      v.assign(value.size(), T(0));
    }
    const T decay = tensor.rank() == 2 ? options_.weight_decay : T(0);
    for (std::size_t j = 0; j < value.size(); ++j) {
      m[j] = b1 * m[j] + (T(1) - b1) * grad[j];
      v[j] = b2 * v[j] + (T(1) - b2) * grad[j] * grad[j];
      const T m_hat = m[j] / bias1;
      const T v_hat = v[j] / bias2;
      value[j] -= lr * decay * value[j];
      value[j] -= lr * m_hat / (std::sqrt(v_hat) + options_.eps);
    }
  }
}

LinearDecay::LinearDecay(double lr0, std::size_t total_steps) : lr0_(lr0), total_(total_steps) {
  if (total_steps == 0) throw std::invalid_argument("LinearDecay: total_steps must be positive");
  if (!(lr0 > 0)) throw std::invalid_argument("LinearDecay: initial learning rate must be positive");
}

double LinearDecay::at(std::size_t step) const {
  if (step >= total_) return 0.0;
  return lr0_ * (1.0 - static_cast<double>(step) / static_cast<double>(total_));
}

template <typename T>
double global_grad_norm(const ParameterSet<T>& params) {
  double sq = 0;
  for (const auto& e : params.entries()) {
    for (T g : e.tensor.grad()) sq += static_cast<double>(g) * static_cast<double>(g);
  }
  return std::sqrt(sq);
}

template <typename T>
double clip_gradients(ParameterSet<T>& params, double max_norm) {
  if (!(max_norm > 0)) throw std::invalid_argument("clip_gradients: max_norm must be positive");
  const double norm = global_grad_norm(params);
  if (!(norm > max_norm)) return 1.0;
  // The small offset keeps the clipped norm at or below max_norm after the
  // scaled gradients are rounded back to T.
  const double factor = max_norm / (norm + 1e-6);
  for (const auto& e : params.entries()) {
    auto tensor = e.tensor;
    if (!tensor.has_grad()) continue;
    for (auto& g : tensor.mutable_grad()) g = static_cast<T>(g * factor);
  }
  return factor;
}

template class AdamW<float>;
template class AdamW<double>;
template double global_grad_norm(const ParameterSet<float>&);
template double global_grad_norm(const ParameterSet<double>&);
template double clip_gradients(ParameterSet<float>&, double);
template double clip_gradients(ParameterSet<double>&, double);

}  // namespace hetermpc
