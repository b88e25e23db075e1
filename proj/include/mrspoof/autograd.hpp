// Copyright 2026 The mrspoof Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef MRSPOOF_AUTOGRAD_HPP_
#define MRSPOOF_AUTOGRAD_HPP_

#include <functional>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "mrspoof/tensor.hpp"

namespace mrspoof {

/// One vertex of the reverse-mode graph. A node owns its forward value and,
/// once backward has reached it, the gradient of the seed w.r.t. that value.
template <typename T>
struct Node {
  Tensor<T> value;
  Tensor<T> grad;
  bool requires_grad = false;
  std::string op = "leaf";
  std::vector<std::shared_ptr<Node>> inputs;
  // Reads `self.grad` and accumulates into the grads of `self.inputs`.
  std::function<void(Node& self)> backward_fn;

  /// Returns the gradient buffer, zero-initialised on first use.
  Tensor<T>& grad_buffer() {
    if (grad.empty()) grad = Tensor<T>(value.shape(), T{0});
    return grad;
  }
};

/// Graph recording is on by default and is thread-local.
bool grad_enabled();

/// Disables graph recording for the current thread while in scope.
class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

/// Shared handle to a graph node. Copies alias the same node.
template <typename T>
class Variable {
 public:
  Variable() = default;

  explicit Variable(Tensor<T> value, bool requires_grad = false)
      : node_(std::make_shared<Node<T>>()) {
    node_->value = std::move(value);
    node_->requires_grad = requires_grad;
  }

  explicit Variable(std::shared_ptr<Node<T>> node) : node_(std::move(node)) {}

  bool defined() const { return node_ != nullptr; }
  const Tensor<T>& value() const { return node_->value; }
  Tensor<T>& mutable_value() { return node_->value; }
  const Shape& shape() const { return node_->value.shape(); }
  bool requires_grad() const { return node_->requires_grad; }
  bool has_grad() const { return !node_->grad.empty(); }
  const Tensor<T>& grad() const { return node_->grad; }
  Tensor<T>& mutable_grad() { return node_->grad_buffer(); }
  void zero_grad() { node_->grad = Tensor<T>(); }
  const std::string& op() const { return node_->op; }
  const std::shared_ptr<Node<T>>& node() const { return node_; }

  /// Backpropagates from a scalar (single-element) variable with seed 1.
  void backward() const;

  /// Backpropagates with an explicit seed congruent with value().
  void backward(const Tensor<T>& seed) const;

 private:
  std::shared_ptr<Node<T>> node_;
};

/// Creates the output node of an op. Records `inputs` and `fn` only when
/// grad mode is on and some input requires a gradient; otherwise the result
/// is a constant and the inputs are released immediately.
template <typename T>
Variable<T> make_result(Tensor<T> value, std::string op,
                        std::vector<Variable<T>> inputs,
                        std::function<void(Node<T>&)> fn);

/// Throws NumericError naming `where` if `t` holds NaN or Inf.
template <typename T>
void require_finite(const Tensor<T>& t, const std::string& where);

extern template class Variable<float>;
extern template class Variable<double>;

}  // namespace mrspoof

#endif  // MRSPOOF_AUTOGRAD_HPP_
