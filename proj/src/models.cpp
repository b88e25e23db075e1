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

#include "mrspoof/models.hpp"

#include <array>
#include <cmath>

namespace mrspoof {

Arch parse_arch(const std::string& name) {
  if (name == "lcnn") return Arch::kLcnn;
  if (name == "resnet18") return Arch::kResNet18;
  if (name == "senet50") return Arch::kSENet50;
  throw ConfigError("unknown architecture '" + name +
                    "' (expected lcnn, resnet18 or senet50)");
}

std::string to_string(Arch arch) {
  switch (arch) {
    case Arch::kLcnn:
      return "lcnn";
    case Arch::kResNet18:
      return "resnet18";
    case Arch::kSENet50:
      return "senet50";
  }
  return "lcnn";
}

void ModelSpec::validate() const {
  if (n_input_channels < 1) throw ConfigError("model needs at least one input channel");
  if (n_classes < 2) throw ConfigError("model needs at least two classes");
  if (input_height == 0 || input_width == 0) {
    throw ConfigError("model input size must be positive");
  }
}

Variable<float> ParameterRegistry::add(const std::string& name, Tensor<float> t) {
  for (const auto& p : params_) {
    if (p.name == name) throw ConfigError("duplicate parameter name " + name);
  }
  Variable<float> v(std::move(t), true);
  params_.push_back({name, v});
  return v;
}

Variable<float> ParameterRegistry::fan_in_normal(const std::string& name, Shape shape,
                                                 std::size_t fan_in) {
  Tensor<float> t(std::move(shape));
  std::normal_distribution<double> dist(0.0,
                                        std::sqrt(init_gain_ / static_cast<double>(fan_in)));
  for (float& v : t.storage()) v = static_cast<float>(dist(rng_));
  return add(name, std::move(t));
}

Variable<float> ParameterRegistry::zeros(const std::string& name, Shape shape) {
  return add(name, Tensor<float>(std::move(shape), 0.0f));
}

BatchNormState<float>& ParameterRegistry::batch_norm(const std::string& name,
                                                     std::size_t channels) {
  auto state = std::make_unique<BatchNormState<float>>(channels);
  params_.push_back({name + ".weight", state->gamma});
  params_.push_back({name + ".bias", state->beta});
  buffers_.push_back({name + ".running_mean", &state->running_mean, &state->stats_recorded});
  buffers_.push_back({name + ".running_var", &state->running_var, &state->stats_recorded});
  bn_states_.push_back(std::move(state));
  return *bn_states_.back();
}

namespace layers {

Conv2d::Conv2d(ParameterRegistry& reg, const std::string& name, std::size_t in,
               std::size_t out, std::size_t kernel, std::size_t stride_,
               std::size_t pad, bool with_bias)
    : weight(reg.fan_in_normal(name + ".weight", {out, in, kernel, kernel},
                               in * kernel * kernel)),
      stride{stride_, stride_},
      padding{pad, pad} {
  if (with_bias) bias = reg.zeros(name + ".bias", {out});
}

Variable<float> Conv2d::operator()(const Variable<float>& x) const {
  return ops::conv2d(x, weight, bias, stride, padding);
}

Linear::Linear(ParameterRegistry& reg, const std::string& name, std::size_t in,
               std::size_t out, bool with_bias)
    : weight(reg.fan_in_normal(name + ".weight", {out, in}, in)) {
  if (with_bias) bias = reg.zeros(name + ".bias", {out});
}

Variable<float> Linear::operator()(const Variable<float>& x) const {
  return ops::linear(x, weight, bias);
}

ConvBn::ConvBn(ParameterRegistry& reg, const std::string& conv_name,
               const std::string& bn_name, std::size_t in, std::size_t out,
               std::size_t kernel, std::size_t stride, std::size_t pad)
    : conv(reg, conv_name, in, out, kernel, stride, pad, false),
      bn(&reg.batch_norm(bn_name, out)) {}

Variable<float> ConvBn::operator()(const Variable<float>& x, Mode mode) const {
  return ops::batchnorm2d(conv(x), *bn, mode);
}

BasicBlock::BasicBlock(ParameterRegistry& reg, const std::string& name,
                       std::size_t in, std::size_t out, std::size_t stride)
    : a_(reg, name + ".conv_a", name + ".bn_a", in, out, 3, stride, 1),
      b_(reg, name + ".conv_b", name + ".bn_b", out, out, 3, 1, 1) {
  if (stride != 1 || in != out) {
    proj_.emplace(reg, name + ".proj.conv", name + ".proj.bn", in, out, 1, stride, 0);
  }
}

Variable<float> BasicBlock::forward(const Variable<float>& x, Mode mode) const {
  Variable<float> y = ops::relu(a_(x, mode));
  y = b_(y, mode);
  const Variable<float> shortcut = proj_ ? (*proj_)(x, mode) : x;
  return ops::relu(ops::add(y, shortcut));
}

SqueezeExcitation::SqueezeExcitation(ParameterRegistry& reg, const std::string& name,
                                     std::size_t channels, std::size_t reduction)
    : fc1_(reg, name + ".fc1", channels, channels / reduction, false),
      fc2_(reg, name + ".fc2", channels / reduction, channels, false) {}

Variable<float> SqueezeExcitation::forward(const Variable<float>& x) const {
  Variable<float> s = ops::global_avg_pool(x);
  s = ops::sigmoid(fc2_(ops::relu(fc1_(s))));
  return ops::channel_scale(x, s);
}

BottleneckBlock::BottleneckBlock(ParameterRegistry& reg, const std::string& name,
                                 std::size_t in, std::size_t width,
                                 std::size_t stride, bool project)
    : width_(width),
      a_(reg, name + ".conv_a", name + ".bn_a", in, width, 1, 1, 0),
      b_(reg, name + ".conv_b", name + ".bn_b", width, width, 3, stride, 1),
      c_(reg, name + ".conv_c", name + ".bn_c", width, width * kExpansion, 1, 1, 0),
      se_(reg, name + ".se", width * kExpansion, kSeReduction) {
  if (project) {
    proj_.emplace(reg, name + ".proj.conv", name + ".proj.bn", in,
                  width * kExpansion, 1, stride, 0);
  }
}

Variable<float> BottleneckBlock::forward(const Variable<float>& x, Mode mode) const {
  Variable<float> y = ops::relu(a_(x, mode));
  y = ops::relu(b_(y, mode));
  y = se_.forward(c_(y, mode));
  const Variable<float> shortcut = proj_ ? (*proj_)(x, mode) : x;
  return ops::relu(ops::add(y, shortcut));
}

}  // namespace layers

void Model::zero_grad() const {
  for (const auto& p : parameters()) {
    Variable<float> v = p.tensor;
    v.zero_grad();
  }
}

Variable<float> Model::forward(const Variable<float>& batch, Mode mode,
                               ForwardTrace* trace) const {
  const Shape& s = batch.shape();
  if (s.size() != 4 || s[1] != spec_.n_input_channels) {
    throw DimensionError("model expects N x " + std::to_string(spec_.n_input_channels) +
                         " x H x W input (n_input_channels = " +
                         std::to_string(spec_.n_input_channels) + " in the model spec), got " +
                         shape_to_string(s));
  }
  return run(batch, mode, trace);
}

namespace {

void record(ForwardTrace* trace, const std::string& name, const Variable<float>& v) {
  if (trace) trace->emplace_back(name, v.shape());
}

class Lcnn final : public Model {
 public:
  Lcnn(const ModelSpec& spec, std::uint64_t seed) : Model(spec, seed) {
    // MFM passes the full variance of the winning half, unlike ReLU.
    registry_.set_init_gain(1.0);
    const std::size_t nc = spec.n_input_channels;
    conv1_ = layers::Conv2d(registry_, "conv1", nc, 32, 5, 1, 2, true);
    // (name, in, out of 1x1, out of 3x3) for the four a/b groups
    struct Group {
      const char* name;
      std::size_t in, mid, out;
    };
    const std::array<Group, 4> groups{{{"2", 16, 32, 48},
                                       {"3", 24, 48, 64},
                                       {"4", 32, 64, 32},
                                       {"5", 16, 32, 32}}};
    for (const auto& g : groups) {
      const std::string n = g.name;
      convs_a_.emplace_back(registry_, "conv" + n + "a", g.in, g.mid, 1, 1, 0, true);
      convs_b_.emplace_back(registry_, "conv" + n + "b", g.mid / 2, g.out, 3, 1, 1, true);
    }
    std::size_t h = spec.input_height, w = spec.input_width;
    for (int i = 0; i < 5; ++i) {
      h = conv_out_size(h, 2, 2, 0);
      w = conv_out_size(w, 2, 3, 0);
    }
    fc6_in_ = 16 * h * w;
    fc6_ = layers::Linear(registry_, "fc6", fc6_in_, 128, true);
    fc7_ = layers::Linear(registry_, "fc7", 64, spec.n_classes, false);
  }

  std::size_t fc6_in() const { return fc6_in_; }

 protected:
  Variable<float> run(const Variable<float>& x, Mode, ForwardTrace* trace) const override {
    const Size2 pk{2, 2}, ps{2, 3};
    Variable<float> y = conv1_(x);
    record(trace, "conv1", y);
    y = ops::mfm(y);
    record(trace, "mfm1", y);
    y = ops::maxpool2d(y, pk, ps);
    record(trace, "maxpool1", y);
    for (std::size_t g = 0; g < convs_a_.size(); ++g) {
      const std::string n = std::to_string(g + 2);
      y = convs_a_[g](y);
      record(trace, "conv" + n + "a", y);
      y = ops::mfm(y);
      record(trace, "mfm" + n + "a", y);
      y = convs_b_[g](y);
      record(trace, "conv" + n + "b", y);
      y = ops::mfm(y);
      record(trace, "mfm" + n + "b", y);
      y = ops::maxpool2d(y, pk, ps);
      record(trace, "maxpool" + n, y);
    }
    y = ops::flatten(y);
    record(trace, "flatten", y);
    y = fc6_(y);
    record(trace, "fc6", y);
    y = ops::mfm(y);
    record(trace, "mfm6", y);
    y = fc7_(y);
    record(trace, "fc7", y);
    return y;
  }

 private:
  layers::Conv2d conv1_;
  std::vector<layers::Conv2d> convs_a_, convs_b_;
  std::size_t fc6_in_ = 0;
  layers::Linear fc6_, fc7_;
};

constexpr std::array<std::size_t, 4> kStageWidths{16, 32, 64, 128};

class ResNet18 final : public Model {
 public:
  ResNet18(const ModelSpec& spec, std::uint64_t seed)
      : Model(spec, seed),
        stem_(registry_, "stem.conv", "stem.bn", spec.n_input_channels, 16, 7, 2, 3) {
    std::size_t in = 16;
    for (std::size_t s = 0; s < kStageWidths.size(); ++s) {
      for (std::size_t u = 0; u < 2; ++u) {
        const std::size_t stride = (s > 0 && u == 0) ? 2 : 1;
        blocks_.emplace_back(registry_,
                             "stage" + std::to_string(s + 1) + ".unit" + std::to_string(u),
                             in, kStageWidths[s], stride);
        in = kStageWidths[s];
      }
    }
    fc_ = layers::Linear(registry_, "fc", in, spec.n_classes, false);
  }

 protected:
  Variable<float> run(const Variable<float>& x, Mode mode,
                      ForwardTrace* trace) const override {
    Variable<float> y = ops::relu(stem_(x, mode));
    y = ops::maxpool2d(y, {3, 3}, {2, 2});
    record(trace, "stem", y);
    for (std::size_t i = 0; i < blocks_.size(); ++i) {
      y = blocks_[i].forward(y, mode);
      if (i % 2 == 1) record(trace, "stage" + std::to_string(i / 2 + 1), y);
    }
    y = ops::global_avg_pool(y);
    record(trace, "pool", y);
    y = fc_(y);
    record(trace, "fc", y);
    return y;
  }

 private:
  layers::ConvBn stem_;
  std::vector<layers::BasicBlock> blocks_;
  layers::Linear fc_;
};

class SENet50 final : public Model {
 public:
  SENet50(const ModelSpec& spec, std::uint64_t seed)
      : Model(spec, seed),
        stem_(registry_, "stem.conv", "stem.bn", spec.n_input_channels, 16, 7, 2, 3) {
    constexpr std::array<std::size_t, 4> units{3, 4, 6, 3};
    std::size_t in = 16;
    for (std::size_t s = 0; s < kStageWidths.size(); ++s) {
      for (std::size_t u = 0; u < units[s]; ++u) {
        const std::size_t stride = (s > 0 && u == 0) ? 2 : 1;
        blocks_.emplace_back(registry_,
                             "stage" + std::to_string(s + 1) + ".unit" + std::to_string(u),
                             in, kStageWidths[s], stride, u == 0);
        in = blocks_.back().out_channels();
      }
      stage_ends_.push_back(blocks_.size() - 1);
    }
    fc_ = layers::Linear(registry_, "fc", in, spec.n_classes, false);
  }

 protected:
  Variable<float> run(const Variable<float>& x, Mode mode,
                      ForwardTrace* trace) const override {
    Variable<float> y = ops::relu(stem_(x, mode));
    y = ops::maxpool2d(y, {3, 3}, {2, 2});
    record(trace, "stem", y);
    std::size_t stage = 0;
    for (std::size_t i = 0; i < blocks_.size(); ++i) {
      y = blocks_[i].forward(y, mode);
      if (i == stage_ends_[stage]) record(trace, "stage" + std::to_string(++stage), y);
    }
    y = ops::global_avg_pool(y);
    record(trace, "pool", y);
    y = fc_(y);
    record(trace, "fc", y);
    return y;
  }

 private:
  layers::ConvBn stem_;
  std::vector<layers::BottleneckBlock> blocks_;
  std::vector<std::size_t> stage_ends_;
  layers::Linear fc_;
};

void require_arch(const ModelSpec& spec, Arch arch) {
  spec.validate();
  if (spec.arch != arch) {
    throw ConfigError("spec is for " + to_string(spec.arch) + ", not " + to_string(arch));
  }
}

}  // namespace

std::unique_ptr<Model> build_lcnn(const ModelSpec& spec, std::uint64_t seed) {
  require_arch(spec, Arch::kLcnn);
  return std::make_unique<Lcnn>(spec, seed);
}

std::unique_ptr<Model> build_resnet18(const ModelSpec& spec, std::uint64_t seed) {
  require_arch(spec, Arch::kResNet18);
  return std::make_unique<ResNet18>(spec, seed);
}

std::unique_ptr<Model> build_senet50(const ModelSpec& spec, std::uint64_t seed) {
  require_arch(spec, Arch::kSENet50);
  return std::make_unique<SENet50>(spec, seed);
}

std::unique_ptr<Model> build_model(const ModelSpec& spec, std::uint64_t seed) {
  switch (spec.arch) {
    case Arch::kLcnn:
      return build_lcnn(spec, seed);
    case Arch::kResNet18:
      return build_resnet18(spec, seed);
    case Arch::kSENet50:
      return build_senet50(spec, seed);
  }
  throw ConfigError("unknown architecture");
}

ModelSpec set_input_channels(const ModelSpec& spec, std::size_t n_channels) {
  if (n_channels == 0) throw ConfigError("input channel count must be at least 1");
  ModelSpec out = spec;
  out.n_input_channels = n_channels;
  return out;
}

namespace {

std::size_t total_of(const Model& model) {
  std::size_t total = 0;
  for (const auto& p : model.parameters()) total += p.tensor.value().numel();
  return total;
}

}  // namespace

ParamReport count_parameters(const Model& model) {
  ParamReport report;
  for (const auto& p : model.parameters()) {
    const std::size_t n = p.tensor.value().numel();
    const std::string layer = p.name.substr(0, p.name.rfind('.'));
    if (report.per_layer.empty() || report.per_layer.back().first != layer) {
      report.per_layer.emplace_back(layer, 0);
    }
    report.per_layer.back().second += n;
    report.total += n;
  }
  if (model.spec().n_input_channels == 1) {
    report.delta_vs_single_channel = 0;
  } else {
    const auto single = build_model(set_input_channels(model.spec(), 1));
    report.delta_vs_single_channel = static_cast<long long>(report.total) -
                                     static_cast<long long>(total_of(*single));
  }
  return report;
}

long long expected_channel_delta(const ModelSpec& spec) {
  const auto k = static_cast<long long>(spec.first_conv_kernel());
  return (static_cast<long long>(spec.n_input_channels) - 1) * k * k *
         static_cast<long long>(spec.first_conv_channels());
}

Tensor<float> forward(const Model& model, const Tensor<float>& batch, Mode mode) {
  NoGradGuard guard;
  return model.forward(Variable<float>(batch), mode).value();
}

}  // namespace mrspoof
