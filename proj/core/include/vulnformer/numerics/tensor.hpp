#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "vulnformer/error.hpp"

namespace vulnformer::numerics {

using Shape = std::vector<std::size_t>;

std::string shape_string(const Shape& shape);
std::size_t element_count(const Shape& shape);

template <typename T>
struct TensorNode {
  Shape shape;
  std::vector<T> value;
  std::vector<T> grad;  // empty until the first accumulation
  bool requires_grad = false;
  std::vector<std::shared_ptr<TensorNode>> parents;
  // Propagates this node's grad into its parents' grads.
  std::function<void(TensorNode&)> backward;

  void ensure_grad() {
    if (grad.size() != value.size()) grad.assign(value.size(), T(0));
  }
};

// Dense row-major array with optional gradient. Copies share storage (a
// handle, like a framework tensor); use detach() for an independent copy.
template <typename T>
class BasicTensor {
 public:
  using value_type = T;

  BasicTensor() = default;
  explicit BasicTensor(std::shared_ptr<TensorNode<T>> node) : node_(std::move(node)) {}

  static BasicTensor zeros(Shape shape, bool requires_grad = false);
  static BasicTensor full(Shape shape, T fill, bool requires_grad = false);
  static BasicTensor from_values(Shape shape, std::vector<T> values, bool requires_grad = false);
  static BasicTensor scalar(T value) { return from_values({1}, {value}); }

  bool defined() const { return node_ != nullptr; }
  const Shape& shape() const { return node_->shape; }
  std::size_t rank() const { return node_->shape.size(); }
  std::size_t size() const { return node_->value.size(); }
  std::size_t rows() const { return node_->shape.at(0); }
  std::size_t cols() const { return node_->shape.size() > 1 ? node_->shape[1] : 1; }

  std::span<const T> values() const { return node_->value; }
  std::span<T> mutable_values() { return node_->value; }
  T operator()(std::size_t row, std::size_t col) const { return node_->value[row * cols() + col]; }
  T item() const;

  bool requires_grad() const { return node_->requires_grad; }
  void set_requires_grad(bool on) { node_->requires_grad = on; }
  bool has_grad() const { return node_->grad.size() == node_->value.size() && !node_->value.empty(); }
  std::span<const T> grad() const { return node_->grad; }
  std::span<T> mutable_grad() {
    node_->ensure_grad();
    return node_->grad;
  }
  void zero_grad() { node_->grad.assign(node_->value.size(), T(0)); }

  // Same values, no graph history, fresh storage.
  BasicTensor detach() const { return from_values(shape(), node_->value, false); }

  TensorNode<T>& node() const { return *node_; }
  const std::shared_ptr<TensorNode<T>>& handle() const { return node_; }

 private:
  std::shared_ptr<TensorNode<T>> node_;
};

using Tensor = BasicTensor<float>;
using Tensor64 = BasicTensor<double>;

// Graph recording switch (thread-local). Inside a NoGradGuard scope ops do
// not keep parents, so inference allocates no backward state.
bool grad_enabled();

class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

// Reverse-mode accumulation from a one-element loss. Every leaf reachable
// from `loss` receives d(loss)/d(leaf) added to its grad; each tensor in
// `ensure_leaves` ends with a grad buffer (zeros when unreachable).
// Throws Error(kNonScalarLoss) for losses with more than one element.
template <typename T>
void backward(const BasicTensor<T>& loss, std::span<BasicTensor<T>> ensure_leaves = {});

}  // namespace vulnformer::numerics
