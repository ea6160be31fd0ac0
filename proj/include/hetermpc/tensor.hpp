#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace hetermpc {

using Shape = std::vector<std::size_t>;

std::size_t shape_numel(const Shape& shape);
std::string shape_str(const Shape& shape);

class DimensionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// True unless a NoGradGuard is alive on this thread.
bool grad_enabled();

/// Disables tape recording on the current thread for its lifetime.
class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

namespace detail {
std::uint64_t next_sequence_number();
}

/// One value on the tape. Leaves have no inputs and no backward function.
/// `seq` is taken from a process-wide counter at creation, so sorting the
/// reachable set by descending `seq` replays ops in reverse execution order.
template <typename T>
struct TensorNode {
  Shape shape;
  std::shared_ptr<std::vector<T>> data;
  std::vector<T> grad;
  bool requires_grad = false;
  std::uint64_t seq = 0;
  std::vector<std::shared_ptr<TensorNode>> inputs;
  std::function<void(TensorNode&)> backward;

  std::vector<T>& ensure_grad() {
    if (grad.empty()) grad.assign(data->size(), T(0));
    return grad;
  }
};

/// Dense row-major tensor handle. Copies share the underlying node.
template <typename T>
class BasicTensor {
 public:
  using value_type = T;
  using Node = TensorNode<T>;
  using BackwardFn = std::function<void(Node&)>;

  BasicTensor() = default;

  static BasicTensor zeros(Shape shape, bool requires_grad = false);
  static BasicTensor full(Shape shape, T value, bool requires_grad = false);
  static BasicTensor from_data(Shape shape, std::vector<T> values, bool requires_grad = false);
  static BasicTensor scalar(T value, bool requires_grad = false);

  /// Result of a differentiable op. Records `backward` on the tape only when
  /// recording is enabled and at least one input requires a gradient.
  static BasicTensor from_op(Shape shape, std::vector<T> values,
                             std::vector<BasicTensor> inputs, BackwardFn backward);

  bool defined() const { return node_ != nullptr; }
  const Shape& shape() const { return node_->shape; }
  std::size_t rank() const { return node_->shape.size(); }
  std::size_t dim(std::size_t axis) const;
  std::size_t numel() const { return node_->data->size(); }
  /// Rows/cols of a rank-1 or rank-2 tensor; rank-1 is a single row.
  std::size_t rows() const;
  std::size_t cols() const;

  std::span<T> data() { return {node_->data->data(), node_->data->size()}; }
  std::span<const T> data() const { return {node_->data->data(), node_->data->size()}; }
  std::span<const T> grad() const { return {node_->grad.data(), node_->grad.size()}; }
  std::span<T> mutable_grad() {
    auto& g = node_->ensure_grad();
    return {g.data(), g.size()};
  }
  bool has_grad() const { return !node_->grad.empty(); }

  T item() const;
  T at(std::size_t i) const { return (*node_->data)[i]; }
  T at(std::size_t r, std::size_t c) const { return (*node_->data)[r * cols() + c]; }

  bool requires_grad() const { return node_->requires_grad; }
  void zero_grad() { node_->grad.clear(); }

  /// Reverse-mode sweep from this scalar; grads accumulate into leaves.
  void backward() const;

  /// New leaf sharing this tensor's storage with an independent gradient.
  BasicTensor alias() const;
  /// Deep copy with no tape history.
  BasicTensor detach() const;

  const std::shared_ptr<Node>& node() const { return node_; }

 private:
  explicit BasicTensor(std::shared_ptr<Node> node) : node_(std::move(node)) {}
  std::shared_ptr<Node> node_;
};

using Tensor = BasicTensor<float>;
using Tensor64 = BasicTensor<double>;

extern template class BasicTensor<float>;
extern template class BasicTensor<double>;

}  // namespace hetermpc
