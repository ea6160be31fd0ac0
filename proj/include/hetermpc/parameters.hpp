#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "hetermpc/random.hpp"
#include "hetermpc/tensor.hpp"

namespace hetermpc {

enum class Init {
  Zeros,
  Ones,
  /// Normal(0, 0.02) resampled outside two standard deviations.
  TruncatedNormal,
  /// Normal(0, 1).
  UnitNormal,
};

/// Named, ordered collection of trainable tensors.
///
/// `get` creates a tensor the first time a name is seen (drawing its initial
/// values from the set's generator, so creation order fixes the values) and
/// returns the existing tensor afterwards. A replica aliases every tensor's
/// storage but owns fresh gradients, which lets independent tapes run
/// concurrently and be reduced into the master afterwards.
template <typename T>
class ParameterSet {
 public:
  struct Entry {
    std::string name;
    BasicTensor<T> tensor;
  };

  explicit ParameterSet(std::uint64_t seed = 0) : rng_(seed) {}

  BasicTensor<T> get(const std::string& name, const Shape& shape, Init init);
  BasicTensor<T> get(const std::string& name, const Shape& shape, T constant);

  /// Existing tensor or an undefined handle.
  BasicTensor<T> find(const std::string& name) const;
  bool contains(const std::string& name) const { return index_.count(name) != 0; }

  const std::vector<Entry>& entries() const { return entries_; }
  std::size_t size() const { return entries_.size(); }
  std::size_t total_elements() const;

  ParameterSet replica() const;
  ParameterSet clone() const;

  void zero_grad();
  /// grad += weight · other.grad for every tensor, matched by name.
  void accumulate_grads(const ParameterSet& other, T weight = T(1));
  /// Copies values (not gradients) from `other`, matched by name.
  void copy_values_from(const ParameterSet& other);

 private:
  BasicTensor<T> create(const std::string& name, const Shape& shape, std::vector<T> values);

  Rng rng_;
  std::vector<Entry> entries_;
  std::map<std::string, std::size_t> index_;
};

extern template class ParameterSet<float>;
extern template class ParameterSet<double>;

}  // namespace hetermpc
