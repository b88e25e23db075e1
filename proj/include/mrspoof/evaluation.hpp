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

// Utterance scoring, equal error rate and weighted late fusion.

#ifndef MRSPOOF_EVALUATION_HPP_
#define MRSPOOF_EVALUATION_HPP_

#include <cstddef>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "mrspoof/tensor.hpp"

namespace mrspoof {

inline constexpr const char* kBonafideLabel = "bonafide";
inline constexpr int kBonafideClass = 0;

/// utt_id -> score (log-probability of the bonafide class).
using ScoreTable = std::map<std::string, double>;
/// utt_id -> label string; "bonafide" is the target class.
using LabelTable = std::map<std::string, std::string>;

struct EERResult {
  double eer = 0.0;
  double threshold = 0.0;
  std::size_t n_target = 0;
  std::size_t n_nontarget = 0;
};

/// Accept iff score >= threshold.
struct OperatingPoint {
  double threshold;
  double far;
  double frr;
};

/// Mean over segments of log_softmax(logits)[bonafide]. `segment_logits` is
/// S x K, one row per segment.
double utterance_score(const Tensor<float>& segment_logits);

/// ROC operating points at every distinct score, plus +inf (accept nothing).
std::vector<OperatingPoint> operating_points(std::span<const double> target,
                                             std::span<const double> nontarget);

/// EER by linear interpolation across the pair of adjacent operating points
/// where FAR - FRR changes sign.
EERResult compute_eer(std::span<const double> target, std::span<const double> nontarget);
EERResult compute_eer(const ScoreTable& scores, const LabelTable& labels);

/// Splits a score table into bonafide and spoof score lists.
void split_by_label(const ScoreTable& scores, const LabelTable& labels,
                    std::vector<double>& target, std::vector<double>& nontarget);

/// Per utterance s = sum_i w_i s_i, accumulated in system order.
ScoreTable fuse_scores(std::span<const ScoreTable> tables, std::span<const double> weights);

/// Simplex points with coordinates k / K (K = 1 / step), in ascending
/// lexicographic order. ConfigError when step does not divide 1.
std::vector<std::vector<double>> simplex_grid(std::size_t n_systems, double step);

struct FusionSearchResult {
  std::vector<double> weights;
  double dev_eer = 0.0;
  std::size_t n_evaluated = 0;
};

/// Exhaustive grid search minimising dev EER; ties keep the
/// lexicographically smallest weight vector.
FusionSearchResult search_fusion_weights(std::span<const ScoreTable> tables,
                                         const LabelTable& dev_labels,
                                         double grid_step = 0.05);

// Text files: one "utt_id<TAB>value" record per line, LF endings.
ScoreTable read_score_file(const std::filesystem::path& path);
void write_score_file(const std::filesystem::path& path, const ScoreTable& scores);
LabelTable read_label_file(const std::filesystem::path& path);
void write_label_file(const std::filesystem::path& path, const LabelTable& labels);
/// "threshold<TAB>far<TAB>frr" lines.
void write_operating_points(const std::filesystem::path& path,
                            std::span<const OperatingPoint> points);

}  // namespace mrspoof

#endif  // MRSPOOF_EVALUATION_HPP_
