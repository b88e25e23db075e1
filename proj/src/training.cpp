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

#include "mrspoof/training.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>
#include <random>

#include "mrspoof/errors.hpp"
#include "mrspoof/ops.hpp"

namespace mrspoof {

namespace {

constexpr const char* kMomentPrefix = "adam.m/";
constexpr const char* kVariancePrefix = "adam.v/";

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace

void TrainConfig::validate() const {
  if (batch_size == 0) throw ConfigError("batch_size must be positive");
  if (!(beta1 > 0 && beta1 < 1)) throw ConfigError("beta1 must lie in (0, 1)");
  if (!(beta2 > 0 && beta2 < 1)) throw ConfigError("beta2 must lie in (0, 1)");
  if (!(weight_decay >= 0)) throw ConfigError("weight_decay must be non-negative");
  if (warmup_steps < 1) throw ConfigError("warmup_steps must be at least 1");
  if (!(peak_lr > 0)) throw ConfigError("peak_lr must be positive");
  if (!(epsilon > 0)) throw ConfigError("adam epsilon must be positive");
  if (epochs == 0) throw ConfigError("epochs must be positive");
}

double noam_lr(std::uint64_t step, std::uint64_t warmup_steps, double peak_lr) {
  if (step == 0) throw DomainError("noam_lr: step must be >= 1");
  if (warmup_steps == 0) throw DomainError("noam_lr: warmup_steps must be >= 1");
  const double s = static_cast<double>(step);
  const double w = static_cast<double>(warmup_steps);
  return peak_lr * std::min(s / w, std::sqrt(w / s));
}

OptimizerState OptimizerState::for_parameters(const std::vector<Parameter>& params) {
  OptimizerState st;
  for (const auto& p : params) {
    st.m.emplace_back(p.tensor.shape());
    st.v.emplace_back(p.tensor.shape());
  }
  return st;
}

template <typename T>
void adam_update(std::span<T> theta, std::span<const T> grad, std::span<T> m, std::span<T> v,
                 std::uint64_t t, double lr, const TrainConfig& c) {
  if (grad.size() != theta.size() || m.size() != theta.size() || v.size() != theta.size()) {
    throw DimensionError("adam_update: parameter, gradient and moments differ in size");
  }
  if (t == 0) throw DomainError("adam_update: step must be >= 1");
  const double bc1 = 1.0 - std::pow(c.beta1, static_cast<double>(t));
  const double bc2 = 1.0 - std::pow(c.beta2, static_cast<double>(t));
  for (std::size_t i = 0; i < theta.size(); ++i) {
    const double th = theta[i];
    const double g = static_cast<double>(grad[i]) + c.weight_decay * th;
    const double mi = c.beta1 * static_cast<double>(m[i]) + (1.0 - c.beta1) * g;
    const double vi = c.beta2 * static_cast<double>(v[i]) + (1.0 - c.beta2) * g * g;
    m[i] = static_cast<T>(mi);
    v[i] = static_cast<T>(vi);
    const double mhat = mi / bc1;
    const double vhat = vi / bc2;
    theta[i] = static_cast<T>(th - lr * mhat / (std::sqrt(vhat) + c.epsilon));
  }
}

template void adam_update<float>(std::span<float>, std::span<const float>, std::span<float>,
                                 std::span<float>, std::uint64_t, double, const TrainConfig&);
template void adam_update<double>(std::span<double>, std::span<const double>,
                                  std::span<double>, std::span<double>, std::uint64_t, double,
                                  const TrainConfig&);

void adam_step(const std::vector<Parameter>& params, OptimizerState& state, double lr,
               const TrainConfig& config) {
  if (state.m.size() != params.size() || state.v.size() != params.size()) {
    throw DimensionError("adam_step: optimizer state holds " + std::to_string(state.m.size()) +
                         " moments for " + std::to_string(params.size()) + " parameters");
  }
  for (const auto& p : params) {
    if (p.tensor.has_grad() && !p.tensor.grad().all_finite()) {
      throw NumericError("non-finite gradient in parameter " + p.name);
    }
  }
  ++state.step;
  std::vector<float> zeros;
  for (std::size_t i = 0; i < params.size(); ++i) {
    Variable<float> var = params[i].tensor;
    Tensor<float>& theta = var.mutable_value();
    if (state.m[i].shape() != theta.shape() || state.v[i].shape() != theta.shape()) {
      throw DimensionError("adam_step: moment shape mismatch for " + params[i].name);
    }
    std::span<const float> g;
    if (var.has_grad()) {
      g = var.grad().data();
    } else {
      zeros.assign(theta.numel(), 0.0f);
      g = zeros;
    }
    adam_update<float>(theta.data(), g, state.m[i].data(), state.v[i].data(), state.step, lr,
                       config);
  }
}

std::vector<std::size_t> epoch_order(std::size_t n, std::uint64_t seed, std::size_t epoch) {
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::mt19937_64 rng(splitmix64(seed ^ splitmix64(epoch + 1)));
  std::shuffle(order.begin(), order.end(), rng);
  return order;
}

EpochStats train_epoch(const Model& model, const SegmentDataset& dataset,
                       const TrainConfig& config, OptimizerState& state, std::size_t epoch,
                       const StepCallback& on_step) {
  config.validate();
  if (dataset.empty()) throw ConfigError("train_epoch: empty dataset");
  const auto order = epoch_order(dataset.size(), config.seed, epoch);
  EpochStats stats;
  double loss_sum = 0.0;
  for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
    const std::size_t n = std::min(config.batch_size, order.size() - start);
    const std::span<const std::size_t> idx(order.data() + start, n);
    const Variable<float> x(dataset.batch(idx));
    const std::vector<int> y = dataset.batch_labels(idx);

    model.zero_grad();
    const Variable<float> logits = model.forward(x, Mode::kTrain);
    const Variable<float> loss = ops::softmax_cross_entropy(logits, std::span<const int>(y));
    const float scale =
        static_cast<float>(static_cast<double>(n) / static_cast<double>(config.batch_size));
    ops::weighted_sum(loss, Tensor<float>({1}, scale)).backward();

    const double lr = noam_lr(state.step + 1, config.warmup_steps, config.peak_lr);
    adam_step(model.parameters(), state, lr, config);
    const double l = loss.value()[0];
    stats.losses.push_back(l);
    loss_sum += l * static_cast<double>(n);
    ++stats.steps;
    if (on_step) on_step(state.step, lr, l);
  }
  model.zero_grad();
  stats.mean_loss = loss_sum / static_cast<double>(dataset.size());
  return stats;
}

ScoreTable score_dataset(const Model& model, const SegmentDataset& dataset,
                         std::size_t batch_size) {
  if (batch_size == 0) throw ConfigError("score batch size must be positive");
  if (dataset.empty()) throw ConfigError("score_dataset: empty dataset");
  const std::size_t k = model.spec().n_classes;
  Tensor<float> all({dataset.size(), k});
  std::vector<std::size_t> idx;
  for (std::size_t start = 0; start < dataset.size(); start += batch_size) {
    const std::size_t n = std::min(batch_size, dataset.size() - start);
    idx.resize(n);
    std::iota(idx.begin(), idx.end(), start);
    const Tensor<float> logits = forward(model, dataset.batch(idx), Mode::kEval);
    std::copy_n(logits.ptr(), n * k, all.ptr() + start * k);
  }
  ScoreTable scores;
  for (std::size_t u = 0; u < dataset.n_utterances(); ++u) {
    const auto& segs = dataset.segments_of(u);
    Tensor<float> rows({segs.size(), k});
    for (std::size_t r = 0; r < segs.size(); ++r) {
      std::copy_n(all.ptr() + segs[r] * k, k, rows.ptr() + r * k);
    }
    scores.emplace(dataset.utt_id(u), utterance_score(rows));
  }
  return scores;
}

std::size_t select_best(std::span<const double> dev_eers) {
  if (dev_eers.empty()) throw ConfigError("select_best: no epochs");
  std::size_t best = 0;
  for (std::size_t i = 1; i < dev_eers.size(); ++i) {
    if (dev_eers[i] < dev_eers[best]) best = i;
  }
  return best + 1;
}

CheckpointFile make_checkpoint(const Model& model, const OptimizerState* state, double dev_eer,
                               std::span<const std::uint16_t> windows) {
  CheckpointFile ckpt;
  ckpt.entries = model_state(model);
  ckpt.meta.spec = model.spec();
  ckpt.meta.dev_eer = dev_eer;
  ckpt.meta.window_tags.assign(windows.begin(), windows.end());
  if (state) {
    const auto& params = model.parameters();
    if (state->m.size() != params.size()) {
      throw DimensionError("make_checkpoint: optimizer state does not match the model");
    }
    ckpt.meta.step = state->step;
    for (std::size_t i = 0; i < params.size(); ++i) {
      ckpt.entries.push_back({kMomentPrefix + params[i].name, state->m[i]});
    }
    for (std::size_t i = 0; i < params.size(); ++i) {
      ckpt.entries.push_back({kVariancePrefix + params[i].name, state->v[i]});
    }
  }
  return ckpt;
}

OptimizerState load_optimizer_state(const CheckpointFile& ckpt,
                                    const std::vector<Parameter>& params) {
  OptimizerState st;
  st.step = ckpt.meta.step;
  for (const auto& p : params) {
    const CheckpointEntry* m = ckpt.find(kMomentPrefix + p.name);
    const CheckpointEntry* v = ckpt.find(kVariancePrefix + p.name);
    if (!m || !v) throw FormatError("checkpoint has no optimizer state for " + p.name);
    if (m->tensor.shape() != p.tensor.shape() || v->tensor.shape() != p.tensor.shape()) {
      throw FormatError("optimizer state shape mismatch for " + p.name);
    }
    st.m.push_back(m->tensor);
    st.v.push_back(v->tensor);
  }
  return st;
}

TrainingResult train_model(const Model& model, const SegmentDataset& train,
                           const SegmentDataset& dev, const TrainConfig& config,
                           const TrainingOutputs& outputs) {
  config.validate();
  OptimizerState state = OptimizerState::for_parameters(model.parameters());
  TrainingResult result;
  std::vector<double> eers;
  StepCallback on_step;
  if (outputs.log) {
    on_step = [&](std::uint64_t step, double lr, double loss) {
      *outputs.log << step << '\t' << lr << '\t' << loss << '\n';
      outputs.log->flush();
    };
  }
  for (std::size_t e = 0; e < config.epochs; ++e) {
    const EpochStats stats = train_epoch(model, train, config, state, e, on_step);
    const double eer = compute_eer(score_dataset(model, dev), dev.labels()).eer;
    EpochRecord rec{e + 1, stats.mean_loss, eer, state.step};
    result.epochs.push_back(rec);
    eers.push_back(eer);

    CheckpointFile ckpt = make_checkpoint(model, &state, eer, train.windows());
    if (!outputs.checkpoint_dir.empty()) {
      write_checkpoint(outputs.checkpoint_dir / ("epoch_" + std::to_string(e + 1) + ".ckpt"),
                       ckpt);
    }
    if (select_best(eers) == e + 1) result.best = std::move(ckpt);
    if (outputs.on_epoch) outputs.on_epoch(rec);
  }
  result.best_epoch = select_best(eers);
  result.best_dev_eer = eers[result.best_epoch - 1];
  load_model_state(model, result.best.entries);
  return result;
}

}  // namespace mrspoof
