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

// In-memory segment datasets built from cached multi-resolution features.

#ifndef MRSPOOF_DATASET_HPP_
#define MRSPOOF_DATASET_HPP_

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "mrspoof/evaluation.hpp"
#include "mrspoof/feature_cache.hpp"
#include "mrspoof/manifest.hpp"

namespace mrspoof {

/// Cuts every selected channel with unify_feature_map and stacks the
/// segments, giving one n_c x F x M tensor per segment position.
std::vector<MultiResStack> segment_stacks(const FeatureCache& cache,
                                          std::span<const std::uint16_t> windows,
                                          std::size_t frames_per_segment,
                                          std::size_t overlap);

/// Every segment of every utterance, labelled with its utterance's class.
class SegmentDataset {
 public:
  SegmentDataset(std::vector<std::uint16_t> windows, std::size_t frames_per_segment,
                 std::size_t overlap);

  void add_utterance(const std::string& utt_id, const std::string& label, int class_index,
                     const FeatureCache& cache);

  std::size_t size() const { return inputs_.size(); }
  bool empty() const { return inputs_.empty(); }
  std::size_t n_utterances() const { return utt_ids_.size(); }
  std::span<const std::uint16_t> windows() const { return windows_; }

  const Tensor<float>& input(std::size_t i) const { return inputs_[i]; }
  int label(std::size_t i) const { return labels_[i]; }
  std::size_t utterance_of(std::size_t i) const { return utterance_[i]; }
  const std::string& utt_id(std::size_t u) const { return utt_ids_[u]; }
  /// Segment indices belonging to utterance u, in time order.
  const std::vector<std::size_t>& segments_of(std::size_t u) const { return utt_segments_[u]; }
  const LabelTable& labels() const { return label_table_; }

  /// N x n_c x F x M batch of the given segments.
  Tensor<float> batch(std::span<const std::size_t> indices) const;
  std::vector<int> batch_labels(std::span<const std::size_t> indices) const;

 private:
  std::vector<std::uint16_t> windows_;
  std::size_t frames_per_segment_;
  std::size_t overlap_;
  std::vector<Tensor<float>> inputs_;
  std::vector<int> labels_;
  std::vector<std::size_t> utterance_;
  std::vector<std::string> utt_ids_;
  std::vector<std::vector<std::size_t>> utt_segments_;
  LabelTable label_table_;
};

/// Reads the MRFM0001 file of every manifest entry.
SegmentDataset load_segment_dataset(const Manifest& manifest, const LabelSet& labels,
                                    std::span<const std::uint16_t> windows,
                                    std::size_t frames_per_segment, std::size_t overlap);

}  // namespace mrspoof

#endif  // MRSPOOF_DATASET_HPP_
