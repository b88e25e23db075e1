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

// Differentiable layer set for the LCNN, ResNet18 and SENet50 graphs.
// Every op takes and returns Variables; gradients are recorded only when
// some input requires one and grad mode is on (see NoGradGuard).

#ifndef MRSPOOF_OPS_HPP_
#define MRSPOOF_OPS_HPP_

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "mrspoof/autograd.hpp"

namespace mrspoof {

struct Size2 {
  std::size_t h = 1;
  std::size_t w = 1;
};

enum class Mode { kTrain, kEval };

/// Affine batch normalisation over the channel axis of an NxCxHxW input.
template <typename T>
struct BatchNormState {
  Variable<T> gamma;
  Variable<T> beta;
  Tensor<T> running_mean;
  Tensor<T> running_var;
  double momentum = 0.1;
  double epsilon = 1e-5;
  bool stats_recorded = false;

  explicit BatchNormState(std::size_t channels);
  std::size_t channels() const { return running_mean.numel(); }
};

/// Output length of a strided window sweep: floor((in + 2 pad - k) / s) + 1.
std::size_t conv_out_size(std::size_t in, std::size_t kernel, std::size_t stride,
                          std::size_t pad);

namespace ops {

/// 2-D cross-correlation. input NxC_inxHxW, weight C_outxC_inxkHxkW.
template <typename T>
Variable<T> conv2d(const Variable<T>& input, const Variable<T>& weight,
                   const std::optional<Variable<T>>& bias, Size2 stride,
                   Size2 padding);

/// Floor-mode max pooling without padding; ties go to the first index.
template <typename T>
Variable<T> maxpool2d(const Variable<T>& input, Size2 kernel, Size2 stride);

/// Max-feature-map: out[:, k] = max(in[:, k], in[:, k + C]) for 2C inputs.
/// Accepts NxC2xHxW or NxC2. Ties send the gradient to the first half.
template <typename T>
Variable<T> mfm(const Variable<T>& input);

/// input NxD_in, weight D_outxD_in.
template <typename T>
Variable<T> linear(const Variable<T>& input, const Variable<T>& weight,
                   const std::optional<Variable<T>>& bias);

/// Train mode normalises with batch statistics and updates running stats;
/// eval mode uses the running stats.
template <typename T>
Variable<T> batchnorm2d(const Variable<T>& input, BatchNormState<T>& state,
                        Mode mode);

template <typename T>
Variable<T> relu(const Variable<T>& input);

template <typename T>
Variable<T> sigmoid(const Variable<T>& input);

/// NxCxHxW -> NxC spatial mean.
template <typename T>
Variable<T> global_avg_pool(const Variable<T>& input);

template <typename T>
Variable<T> add(const Variable<T>& a, const Variable<T>& b);

/// y[n,c,h,w] = x[n,c,h,w] * scale[n,c]. Used by squeeze-excitation.
template <typename T>
Variable<T> channel_scale(const Variable<T>& input, const Variable<T>& scale);

/// Reshape keeping the element order.
template <typename T>
Variable<T> reshape(const Variable<T>& input, Shape shape);

/// NxAxB... -> Nx(A*B*...).
template <typename T>
Variable<T> flatten(const Variable<T>& input);

/// Scalar sum(input * probe). Used to reduce op outputs for gradient checks.
template <typename T>
Variable<T> weighted_sum(const Variable<T>& input, const Tensor<T>& probe);

/// Mean over the batch of -log softmax(logits)[n, target[n]].
template <typename T>
Variable<T> softmax_cross_entropy(const Variable<T>& logits,
                                  std::span<const int> targets);

}  // namespace ops

/// Row-wise log-softmax of an NxK tensor (no graph).
template <typename T>
Tensor<T> log_softmax(const Tensor<T>& logits);

/// Row-wise softmax of an NxK tensor (no graph).
template <typename T>
Tensor<T> softmax(const Tensor<T>& logits);

}  // namespace mrspoof

#endif  // MRSPOOF_OPS_HPP_
