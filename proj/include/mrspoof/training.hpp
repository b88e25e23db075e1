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

// Adam with linear warmup and inverse-square-root decay, segment-level
// mini-batch training and per-epoch selection by development EER.

#ifndef MRSPOOF_TRAINING_HPP_
#define MRSPOOF_TRAINING_HPP_

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <span>
#include <vector>

#include "mrspoof/checkpoint.hpp"
#include "mrspoof/dataset.hpp"
#include "mrspoof/evaluation.hpp"
#include "mrspoof/models.hpp"

namespace mrspoof {

struct TrainConfig {
  std::size_t batch_size = 64;
  double beta1 = 0.9;
  double beta2 = 0.98;
  double weight_decay = 1e-4;
  std::uint64_t warmup_steps = 1000;
  double peak_lr = 1e-3;
  double epsilon = 1e-8;
  std::size_t epochs = 10;
  std::uint64_t seed = 0;

  void validate() const;
};

/// peak_lr * min(step / warmup, sqrt(warmup / step)). DomainError for step 0.
double noam_lr(std::uint64_t step, std::uint64_t warmup_steps, double peak_lr);

struct OptimizerState {
  std::vector<Tensor<float>> m;
  std::vector<Tensor<float>> v;
  std::uint64_t step = 0;

  /// Zero moments congruent with `params`.
  static OptimizerState for_parameters(const std::vector<Parameter>& params);
};

/// One Adam update of a single tensor at (already incremented) step t:
/// g += wd * theta, moment updates, bias correction, theta -= lr * mhat /
/// (sqrt(vhat) + eps).
template <typename T>
void adam_update(std::span<T> theta, std::span<const T> grad, std::span<T> m, std::span<T> v,
                 std::uint64_t t, double lr, const TrainConfig& config);

/// Advances state.step and updates every parameter from its accumulated
/// gradient (absent gradients count as zero). A non-finite gradient raises
/// NumericError naming the parameter before anything is modified.
void adam_step(const std::vector<Parameter>& params, OptimizerState& state, double lr,
               const TrainConfig& config);

struct EpochStats {
  double mean_loss = 0.0;
  std::size_t steps = 0;
  std::vector<double> losses;  // per step
};

/// Called after every optimizer step with (global step, lr, batch loss).
using StepCallback = std::function<void(std::uint64_t, double, double)>;

/// Segment order for `epoch` (0-based): a permutation of [0, n) drawn from a
/// generator seeded by (seed, epoch).
std::vector<std::size_t> epoch_order(std::size_t n, std::uint64_t seed, std::size_t epoch);

/// One pass over all segments in shuffled mini-batches. Each segment carries
/// weight 1 / batch_size in its step's loss, so a short final batch is not
/// up-weighted.
EpochStats train_epoch(const Model& model, const SegmentDataset& dataset,
                       const TrainConfig& config, OptimizerState& state, std::size_t epoch,
                       const StepCallback& on_step = {});

/// Utterance scores of every utterance in `dataset`, eval mode.
ScoreTable score_dataset(const Model& model, const SegmentDataset& dataset,
                         std::size_t batch_size = 16);

/// 1-based epoch of minimal EER; ties resolve to the earliest epoch.
std::size_t select_best(std::span<const double> dev_eers);

/// Model state plus "adam.m/<name>" and "adam.v/<name>" moment entries.
CheckpointFile make_checkpoint(const Model& model, const OptimizerState* state,
                               double dev_eer, std::span<const std::uint16_t> windows);
/// Restores optimizer moments and step saved by make_checkpoint.
OptimizerState load_optimizer_state(const CheckpointFile& ckpt,
                                    const std::vector<Parameter>& params);

struct EpochRecord {
  std::size_t epoch = 0;  // 1-based
  double mean_loss = 0.0;
  double dev_eer = 0.0;
  std::uint64_t step = 0;
};

struct TrainingResult {
  std::vector<EpochRecord> epochs;
  std::size_t best_epoch = 0;  // 1-based
  double best_dev_eer = 0.0;
  CheckpointFile best;
};

struct TrainingOutputs {
  std::ostream* log = nullptr;                // "step<TAB>lr<TAB>loss" lines
  std::filesystem::path checkpoint_dir;       // epoch_<k>.ckpt when non-empty
  std::function<void(const EpochRecord&)> on_epoch;
};

/// Trains for config.epochs, scores the dev set after every epoch, and
/// leaves the model holding the weights of the selected epoch.
TrainingResult train_model(const Model& model, const SegmentDataset& train,
                           const SegmentDataset& dev, const TrainConfig& config,
                           const TrainingOutputs& outputs = {});

}  // namespace mrspoof

#endif  // MRSPOOF_TRAINING_HPP_
