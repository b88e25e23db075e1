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

#include "mrspoof/autograd.hpp"

#include <sstream>
#include <unordered_set>

namespace mrspoof {

std::string shape_to_string(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << 'x';
    os << shape[i];
  }
  os << ']';
  return os.str();
}

namespace {
thread_local bool g_grad_enabled = true;
}  // namespace

bool grad_enabled() { return g_grad_enabled; }

NoGradGuard::NoGradGuard() : previous_(g_grad_enabled) {
  g_grad_enabled = false;
}

NoGradGuard::~NoGradGuard() { g_grad_enabled = previous_; }

template <typename T>
void require_finite(const Tensor<T>& t, const std::string& where) {
  const auto data = t.data();
  for (std::size_t i = 0; i < data.size(); ++i) {
    if (!std::isfinite(data[i])) {
      throw NumericError("non-finite value at flat index " + std::to_string(i) +
                         " in " + where);
    }
  }
}

template <typename T>
Variable<T> make_result(Tensor<T> value, std::string op,
                        std::vector<Variable<T>> inputs,
                        std::function<void(Node<T>&)> fn) {
  require_finite(value, op + " output");
  auto node = std::make_shared<Node<T>>();
  node->value = std::move(value);
  node->op = std::move(op);
  bool needs = false;
  if (grad_enabled()) {
    for (const auto& in : inputs) needs = needs || in.requires_grad();
  }
  if (needs) {
    node->requires_grad = true;
    node->inputs.reserve(inputs.size());
    for (auto& in : inputs) node->inputs.push_back(in.node());
    node->backward_fn = std::move(fn);
  }
  return Variable<T>(std::move(node));
}

template <typename T>
void Variable<T>::backward() const {
  if (node_->value.numel() != 1) {
    throw DimensionError("backward() without a seed needs a scalar, got shape " +
                         shape_to_string(node_->value.shape()));
  }
  backward(Tensor<T>(node_->value.shape(), T{1}));
}

template <typename T>
void Variable<T>::backward(const Tensor<T>& seed) const {
  if (seed.shape() != node_->value.shape()) {
    throw DimensionError("backward seed shape " + shape_to_string(seed.shape()) +
                         " does not match value shape " +
                         shape_to_string(node_->value.shape()));
  }
  if (!node_->requires_grad) return;

  // Iterative post-order DFS gives a topological order (inputs first).
  std::vector<Node<T>*> order;
  std::unordered_set<Node<T>*> visited;
  std::vector<std::pair<Node<T>*, std::size_t>> stack;
  stack.emplace_back(node_.get(), 0);
  visited.insert(node_.get());
  while (!stack.empty()) {
    auto& [n, next] = stack.back();
    if (next < n->inputs.size()) {
      Node<T>* child = n->inputs[next++].get();
      if (child->requires_grad && visited.insert(child).second) {
        stack.emplace_back(child, 0);
      }
    } else {
      order.push_back(n);
      stack.pop_back();
    }
  }

  Tensor<T>& g = node_->grad_buffer();
  for (std::size_t i = 0; i < g.numel(); ++i) g[i] += seed[i];

  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node<T>* n = *it;
    if (!n->backward_fn || n->grad.empty()) continue;
    n->backward_fn(*n);
    for (const auto& in : n->inputs) {
      if (in->requires_grad && !in->grad.empty()) {
        require_finite(in->grad, "gradient flowing out of " + n->op);
      }
    }
  }
}

template class Variable<float>;
template class Variable<double>;
template Variable<float> make_result(Tensor<float>, std::string,
                                     std::vector<Variable<float>>,
                                     std::function<void(Node<float>&)>);
template Variable<double> make_result(Tensor<double>, std::string,
                                      std::vector<Variable<double>>,
                                      std::function<void(Node<double>&)>);
template void require_finite(const Tensor<float>&, const std::string&);
template void require_finite(const Tensor<double>&, const std::string&);

}  // namespace mrspoof
