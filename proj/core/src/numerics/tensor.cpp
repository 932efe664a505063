#include "vulnformer/numerics/tensor.hpp"

#include <unordered_set>

namespace vulnformer::numerics {

std::string shape_string(const Shape& shape) {
  std::string out = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i > 0) out += "x";
    out += std::to_string(shape[i]);
  }
  return out + "]";
}

std::size_t element_count(const Shape& shape) {
  std::size_t n = 1;
  for (std::size_t d : shape) n *= d;
  return n;
}

template <typename T>
BasicTensor<T> BasicTensor<T>::zeros(Shape shape, bool requires_grad) {
  return full(std::move(shape), T(0), requires_grad);
}

template <typename T>
BasicTensor<T> BasicTensor<T>::full(Shape shape, T fill, bool requires_grad) {
  auto node = std::make_shared<TensorNode<T>>();
  node->value.assign(element_count(shape), fill);
  node->shape = std::move(shape);
  node->requires_grad = requires_grad;
  return BasicTensor(std::move(node));
}

template <typename T>
BasicTensor<T> BasicTensor<T>::from_values(Shape shape, std::vector<T> values, bool requires_grad) {
  if (element_count(shape) != values.size()) {
    throw Error(ErrorKind::kShapeMismatch, "tensor of shape " + shape_string(shape) + " cannot hold " +
                                               std::to_string(values.size()) + " values");
  }
  auto node = std::make_shared<TensorNode<T>>();
  node->shape = std::move(shape);
  node->value = std::move(values);
  node->requires_grad = requires_grad;
  return BasicTensor(std::move(node));
}

template <typename T>
T BasicTensor<T>::item() const {
  if (size() != 1) throw Error(ErrorKind::kShapeMismatch, "item() on tensor of shape " + shape_string(shape()));
  return node_->value[0];
}

namespace {
thread_local bool g_grad_enabled = true;
}  // namespace

bool grad_enabled() { return g_grad_enabled; }

NoGradGuard::NoGradGuard() : previous_(g_grad_enabled) { g_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { g_grad_enabled = previous_; }

template <typename T>
void backward(const BasicTensor<T>& loss, std::span<BasicTensor<T>> ensure_leaves) {
  if (loss.size() != 1) {
    throw Error(ErrorKind::kNonScalarLoss, "backward() needs a one-element loss, got " + shape_string(loss.shape()));
  }
  if (loss.requires_grad()) {
    // Iterative post-order DFS gives a topological order.
    std::vector<TensorNode<T>*> order;
    std::unordered_set<TensorNode<T>*> seen;
    std::vector<std::pair<TensorNode<T>*, std::size_t>> stack{{&loss.node(), 0}};
    seen.insert(&loss.node());
    while (!stack.empty()) {
      auto& [node, next_parent] = stack.back();
      if (next_parent < node->parents.size()) {
        TensorNode<T>* parent = node->parents[next_parent++].get();
        if (parent->requires_grad && seen.insert(parent).second) stack.emplace_back(parent, 0);
      } else {
        order.push_back(node);
        stack.pop_back();
      }
    }
    loss.node().ensure_grad();
    loss.node().grad[0] += T(1);
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
      TensorNode<T>* node = *it;
      if (node->backward && !node->grad.empty()) node->backward(*node);
    }
    // Interior nodes are done; drop their links so the graph frees early.
    for (TensorNode<T>* node : order) {
      if (node->backward) {
        node->backward = nullptr;
        node->parents.clear();
      }
    }
  }
  for (BasicTensor<T>& leaf : ensure_leaves) leaf.node().ensure_grad();
}

template class BasicTensor<float>;
template class BasicTensor<double>;
template void backward<float>(const BasicTensor<float>&, std::span<BasicTensor<float>>);
template void backward<double>(const BasicTensor<double>&, std::span<BasicTensor<double>>);

}  // namespace vulnformer::numerics
