#pragma once

#include <functional>
#include <memory>
#include <unordered_set>
#include <utility>
#include <vector>

#include "aesust/tensor.hpp"

namespace aesust {

namespace detail {
inline thread_local bool grad_recording = true;
}

/// Disables graph recording on the current thread for its lifetime.
class NoGradGuard {
 public:
  NoGradGuard() : previous_(detail::grad_recording) { detail::grad_recording = false; }
  ~NoGradGuard() { detail::grad_recording = previous_; }
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

inline bool grad_recording() { return detail::grad_recording; }

template <typename T>
struct Node {
  Tensor<T> value;
  Tensor<T> grad;
  bool requires_grad = false;
  std::vector<std::shared_ptr<Node>> inputs;
  // Pushes `grad` into the inputs' grads.
  std::function<void(const Tensor<T>&)> backward;

  void accumulate(const Tensor<T>& g) {
    if (grad.empty()) {
      grad = g;
    } else {
      grad.data() += g.data();
    }
  }
  Tensor<T>& grad_buffer() {
    if (grad.empty()) grad = Tensor<T>(value.shape());
    return grad;
  }
};

/// Handle to a node of the computation graph. Copies share the node.
template <typename T>
class Var {
 public:
  Var() = default;
  explicit Var(Tensor<T> value, bool requires_grad = false) : node_(std::make_shared<Node<T>>()) {
    node_->value = std::move(value);
    node_->requires_grad = requires_grad;
  }

  bool defined() const { return static_cast<bool>(node_); }
  const Tensor<T>& value() const { return node_->value; }
  Tensor<T>& mutable_value() { return node_->value; }
  const Shape& shape() const { return node_->value.shape(); }
  Index dim(Index i) const { return node_->value.dim(i); }

  bool requires_grad() const { return node_->requires_grad; }
  void set_requires_grad(bool on) { node_->requires_grad = on; }

  bool has_grad() const { return !node_->grad.empty(); }
  const Tensor<T>& grad() const { return node_->grad; }
  void zero_grad() { node_->grad = Tensor<T>(); }

  const std::shared_ptr<Node<T>>& node() const { return node_; }

  /// Builds an op result. Inputs are recorded only when grad recording is on
  /// and at least one input requires a gradient.
  static Var make(Tensor<T> value, std::vector<Var> inputs,
                  std::function<void(const Tensor<T>&)> backward) {
    Var out(std::move(value));
    if (!grad_recording()) return out;
    bool any = false;
    for (const auto& in : inputs) any = any || in.requires_grad();
    if (!any) return out;
    out.node_->requires_grad = true;
    for (auto& in : inputs) out.node_->inputs.push_back(in.node_);
    out.node_->backward = std::move(backward);
    return out;
  }

  /// Adds `g` into this node's gradient if it participates in differentiation.
  void accumulate(const Tensor<T>& g) const {
    if (node_->requires_grad) node_->accumulate(g);
  }
  Tensor<T>* grad_target() const { return node_->requires_grad ? &node_->grad_buffer() : nullptr; }

 private:
  std::shared_ptr<Node<T>> node_;
};

/// Reverse-mode sweep from a scalar. Leaf gradients accumulate across calls.
template <typename T>
void backward(const Var<T>& root) {
  if (root.value().size() != 1) throw ShapeError("backward: root must be a scalar");
  if (!root.requires_grad()) return;

  std::vector<Node<T>*> order;
  std::unordered_set<Node<T>*> seen;
  std::vector<std::pair<Node<T>*, std::size_t>> stack{{root.node().get(), 0}};
  seen.insert(root.node().get());
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->inputs.size()) {
      Node<T>* child = node->inputs[next++].get();
      if (child->requires_grad && seen.insert(child).second) stack.emplace_back(child, 0);
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }

  root.node()->accumulate(Tensor<T>::constant(root.shape(), T(1)));
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node<T>* node = *it;
    if (!node->backward || node->grad.empty()) continue;
    node->backward(node->grad);
    // Interior grads are not needed after propagation.
    node->grad = Tensor<T>();
  }
}

/// Returns a graph-free copy of `v`.
template <typename T>
Var<T> detach(const Var<T>& v) {
  return Var<T>(v.value());
}

}  // namespace aesust
