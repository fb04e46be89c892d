#pragma once

// Reverse-mode automatic differentiation over Tensors. Each op records its
// parents and a closure that pushes the node's gradient into theirs; backward()
// runs those closures in reverse topological order.

#include "handkin/nn/tensor.hpp"

#include <functional>
#include <memory>
#include <span>
#include <vector>

namespace handkin::nn {

struct Node {
  Tensor value;
  Tensor grad;  // allocated on demand, same shape as value
  bool requires_grad = false;
  std::vector<std::shared_ptr<Node>> parents;
  std::function<void()> backward_fn;

  Tensor& ensure_grad() {
    if (grad.size() != value.size()) grad = Tensor::zeros_like(value);
    return grad;
  }
};

using Var = std::shared_ptr<Node>;

Var constant(Tensor value);
Var parameter(Tensor value);

// Builds an op output; requires_grad is inherited from the parents.
Var make_node(Tensor value, std::vector<Var> parents);

// Seeds d(root)/d(root) = 1 (root must hold one element) and back-propagates.
void backward(const Var& root);

void zero_grad(std::span<const Var> params);

}  // namespace handkin::nn
