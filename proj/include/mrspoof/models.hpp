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

// Reference spoofing-detection CNNs. Each network consumes an
// n_c x 257 x 400 multi-resolution stack; only the first convolution
// depends on n_c.

#ifndef MRSPOOF_MODELS_HPP_
#define MRSPOOF_MODELS_HPP_

#include <cstdint>
#include <memory>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "mrspoof/ops.hpp"

namespace mrspoof {

enum class Arch { kLcnn, kResNet18, kSENet50 };

Arch parse_arch(const std::string& name);
std::string to_string(Arch arch);

struct ModelSpec {
  Arch arch = Arch::kLcnn;
  std::size_t n_input_channels = 1;
  std::size_t n_classes = 10;
  std::size_t input_height = 257;
  std::size_t input_width = 400;

  /// c1: output channels of the first convolution.
  std::size_t first_conv_channels() const {
    return arch == Arch::kLcnn ? 32 : 16;
  }
  /// Kernel side of the first convolution.
  std::size_t first_conv_kernel() const { return arch == Arch::kLcnn ? 5 : 7; }
  void validate() const;

  friend bool operator==(const ModelSpec&, const ModelSpec&) = default;
};

struct Parameter {
  std::string name;
  Variable<float> tensor;
};

/// Non-trainable state saved with a model (batch-norm running statistics).
struct Buffer {
  std::string name;
  Tensor<float>* tensor;
  bool* stats_recorded;  // owning batch norm's flag, set when loaded
};

/// (stage name, activation shape) pairs recorded during a forward pass.
using ForwardTrace = std::vector<std::pair<std::string, Shape>>;

/// Owns named parameters. Layers hold Variables aliasing the same nodes.
class ParameterRegistry {
 public:
  explicit ParameterRegistry(std::uint64_t seed) : rng_(seed) {}

  /// Normal init with std = sqrt(gain / fan_in); gain 2 (He) by default.
  Variable<float> fan_in_normal(const std::string& name, Shape shape, std::size_t fan_in);
  void set_init_gain(double gain) { init_gain_ = gain; }
  Variable<float> zeros(const std::string& name, Shape shape);
  BatchNormState<float>& batch_norm(const std::string& name, std::size_t channels);

  const std::vector<Parameter>& parameters() const { return params_; }
  const std::vector<Buffer>& buffers() const { return buffers_; }

 private:
  Variable<float> add(const std::string& name, Tensor<float> t);

  std::mt19937_64 rng_;
  double init_gain_ = 2.0;
  std::vector<Parameter> params_;
  std::vector<Buffer> buffers_;
  std::vector<std::unique_ptr<BatchNormState<float>>> bn_states_;
};

namespace layers {

struct Conv2d {
  Conv2d() = default;
  Conv2d(ParameterRegistry& reg, const std::string& name, std::size_t in,
         std::size_t out, std::size_t kernel, std::size_t stride, std::size_t pad,
         bool with_bias);
  Variable<float> operator()(const Variable<float>& x) const;

  Variable<float> weight;
  std::optional<Variable<float>> bias;
  Size2 stride;
  Size2 padding;
};

struct Linear {
  Linear() = default;
  Linear(ParameterRegistry& reg, const std::string& name, std::size_t in,
         std::size_t out, bool with_bias);
  Variable<float> operator()(const Variable<float>& x) const;

  Variable<float> weight;
  std::optional<Variable<float>> bias;
};

/// Conv followed by batch norm, as used by residual branches and projections.
struct ConvBn {
  ConvBn() = default;
  ConvBn(ParameterRegistry& reg, const std::string& conv_name,
         const std::string& bn_name, std::size_t in, std::size_t out,
         std::size_t kernel, std::size_t stride, std::size_t pad);
  Variable<float> operator()(const Variable<float>& x, Mode mode) const;

  Conv2d conv;
  BatchNormState<float>* bn = nullptr;
};

/// Two 3x3 conv+BN with identity or 1x1 projection shortcut.
class BasicBlock {
 public:
  BasicBlock(ParameterRegistry& reg, const std::string& name, std::size_t in,
             std::size_t out, std::size_t stride);
  Variable<float> forward(const Variable<float>& x, Mode mode) const;
  ConvBn& conv_a() { return a_; }
  ConvBn& conv_b() { return b_; }
  bool has_projection() const { return proj_.has_value(); }

 private:
  ConvBn a_, b_;
  std::optional<ConvBn> proj_;
};

/// Channel gating: sigmoid(FC(ReLU(FC(GAP(x))))) rescales each channel.
class SqueezeExcitation {
 public:
  SqueezeExcitation(ParameterRegistry& reg, const std::string& name,
                    std::size_t channels, std::size_t reduction);
  Variable<float> forward(const Variable<float>& x) const;
  Linear& squeeze() { return fc1_; }
  Linear& excite() { return fc2_; }

 private:
  Linear fc1_, fc2_;
};

/// 1x1 reduce -> 3x3 -> 1x1 expand with squeeze-excitation on the branch.
class BottleneckBlock {
 public:
  static constexpr std::size_t kExpansion = 2;
  static constexpr std::size_t kSeReduction = 16;

  BottleneckBlock(ParameterRegistry& reg, const std::string& name, std::size_t in,
                  std::size_t width, std::size_t stride, bool project);
  Variable<float> forward(const Variable<float>& x, Mode mode) const;
  std::size_t out_channels() const { return width_ * kExpansion; }

 private:
  std::size_t width_;
  ConvBn a_, b_, c_;
  SqueezeExcitation se_;
  std::optional<ConvBn> proj_;
};

}  // namespace layers

class Model {
 public:
  virtual ~Model() = default;
  Model(const Model&) = delete;
  Model& operator=(const Model&) = delete;

  const ModelSpec& spec() const { return spec_; }
  const std::vector<Parameter>& parameters() const { return registry_.parameters(); }
  const std::vector<Buffer>& buffers() const { return registry_.buffers(); }
  void zero_grad() const;

  /// batch: N x n_c x H x W. Returns N x n_classes logits.
  Variable<float> forward(const Variable<float>& batch, Mode mode,
                          ForwardTrace* trace = nullptr) const;

 protected:
  Model(ModelSpec spec, std::uint64_t seed) : spec_(spec), registry_(seed) {}
  virtual Variable<float> run(const Variable<float>& x, Mode mode,
                              ForwardTrace* trace) const = 0;

  ModelSpec spec_;
  ParameterRegistry registry_;
};

std::unique_ptr<Model> build_lcnn(const ModelSpec& spec, std::uint64_t seed = 0);
std::unique_ptr<Model> build_resnet18(const ModelSpec& spec, std::uint64_t seed = 0);
std::unique_ptr<Model> build_senet50(const ModelSpec& spec, std::uint64_t seed = 0);
/// Dispatches on spec.arch.
std::unique_ptr<Model> build_model(const ModelSpec& spec, std::uint64_t seed = 0);

/// Changes only the first convolution's input dimension.
ModelSpec set_input_channels(const ModelSpec& spec, std::size_t n_channels);

struct ParamReport {
  // Layer name (parameter name minus its last component) -> count.
  std::vector<std::pair<std::string, std::size_t>> per_layer;
  std::size_t total = 0;
  // total - total of the same spec with one input channel.
  long long delta_vs_single_channel = 0;
};

ParamReport count_parameters(const Model& model);

/// Closed form (n_c - 1) * k * k * c1.
long long expected_channel_delta(const ModelSpec& spec);

/// Checks the channel count against the spec, then runs the network.
Tensor<float> forward(const Model& model, const Tensor<float>& batch, Mode mode);

}  // namespace mrspoof

#endif  // MRSPOOF_MODELS_HPP_
