#include "hetermpc/parameters.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

namespace hetermpc {

namespace {
constexpr double kInitStd = 0.02;
}

template <typename T>
BasicTensor<T> ParameterSet<T>::create(const std::string& name, const Shape& shape,
                                       std::vector<T> values) {
  auto tensor = BasicTensor<T>::from_data(shape, std::move(values), true);
  index_.emplace(name, entries_.size());
  entries_.push_back({name, tensor});
  return tensor;
}

template <typename T>
BasicTensor<T> ParameterSet<T>::get(const std::string& name, const Shape& shape, Init init) {
  if (auto it = index_.find(name); it != index_.end()) {
    const auto& existing = entries_[it->second].tensor;
    if (existing.shape() != shape) {
      throw DimensionError("parameter '" + name + "' has shape " + shape_str(existing.shape()) +
                           ", expected " + shape_str(shape));
    }
    return existing;
  }
  std::vector<T> values(shape_numel(shape), T(0));
  switch (init) {
    case Init::Zeros:
      break;
    case Init::Ones:
      std::fill(values.begin(), values.end(), T(1));
      break;
    case Init::TruncatedNormal: {
      std::normal_distribution<double> normal(0.0, 1.0);
      for (auto& v : values) {
        double z = normal(rng_);
        while (std::abs(z) > 2.0) z = normal(rng_);
        v = static_cast<T>(z * kInitStd);
      }
      break;
    }
    case Init::UnitNormal: {
      std::normal_distribution<double> normal(0.0, 1.0);
      for (auto& v : values) v = static_cast<T>(normal(rng_));
      break;
    }
  }
  return create(name, shape, std::move(values));
}

template <typename T>
BasicTensor<T> ParameterSet<T>::get(const std::string& name, const Shape& shape, T constant) {
  if (contains(name)) return get(name, shape, Init::Zeros);
  return create(name, shape, std::vector<T>(shape_numel(shape), constant));
}

template <typename T>
BasicTensor<T> ParameterSet<T>::find(const std::string& name) const {
  auto it = index_.find(name);
  return it == index_.end() ? BasicTensor<T>() : entries_[it->second].tensor;
}

template <typename T>
std::size_t ParameterSet<T>::total_elements() const {
  std::size_t n = 0;
  for (const auto& e : entries_) n += e.tensor.numel();
  return n;
}

template <typename T>
ParameterSet<T> ParameterSet<T>::replica() const {
  ParameterSet out;
  out.rng_ = rng_;
  out.index_ = index_;
  out.entries_.reserve(entries_.size());
  for (const auto& e : entries_) out.entries_.push_back({e.name, e.tensor.alias()});
  return out;
}

template <typename T>
ParameterSet<T> ParameterSet<T>::clone() const {
  ParameterSet out;
  out.rng_ = rng_;
  out.index_ = index_;
  out.entries_.reserve(entries_.size());
  for (const auto& e : entries_) {
    auto copy = e.tensor.detach();
    copy.node()->requires_grad = true;
    out.entries_.push_back({e.name, copy});
  }
  return out;
}

template <typename T>
void ParameterSet<T>::zero_grad() {
  for (auto& e : entries_) e.tensor.zero_grad();
}

template <typename T>
void ParameterSet<T>::accumulate_grads(const ParameterSet& other, T weight) {
  for (const auto& src : other.entries_) {
    if (!src.tensor.has_grad()) continue;
    auto it = index_.find(src.name);
    if (it == index_.end()) throw std::invalid_argument("accumulate_grads: unknown parameter " + src.name);
    auto dst = entries_[it->second].tensor.mutable_grad();
    const auto g = src.tensor.grad();
    for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += weight * g[i];
  }
}

template <typename T>
void ParameterSet<T>::copy_values_from(const ParameterSet& other) {
  for (const auto& src : other.entries_) {
    auto it = index_.find(src.name);
    if (it == index_.end()) throw std::invalid_argument("copy_values_from: unknown parameter " + src.name);
    auto dst = entries_[it->second].tensor.data();
    const auto v = src.tensor.data();
    if (dst.size() != v.size()) throw DimensionError("copy_values_from: size mismatch for " + src.name);
    std::copy(v.begin(), v.end(), dst.begin());
  }
}

template class ParameterSet<float>;
template class ParameterSet<double>;

}  // namespace hetermpc
