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

#include "mrspoof/dataset.hpp"

#include <algorithm>
#include <utility>

#include "mrspoof/errors.hpp"

namespace mrspoof {

std::vector<MultiResStack> segment_stacks(const FeatureCache& cache,
                                          std::span<const std::uint16_t> windows,
                                          std::size_t frames_per_segment, std::size_t overlap) {
  if (windows.empty()) throw ConfigError("no window lengths selected");
  std::vector<SegmentSet> sets;
  std::vector<double> lengths;
  for (std::uint16_t w : windows) {
    sets.push_back(unify_feature_map(cache.channel(w), frames_per_segment, overlap));
    lengths.push_back(w);
  }
  const std::size_t n_seg = sets[0].segments.size();
  std::vector<MultiResStack> out;
  out.reserve(n_seg);
  std::vector<Tensor<float>> maps(windows.size());
  for (std::size_t s = 0; s < n_seg; ++s) {
    for (std::size_t c = 0; c < sets.size(); ++c) maps[c] = std::move(sets[c].segments[s]);
    out.push_back(stack_multi_resolution(maps, lengths));
  }
  return out;
}

SegmentDataset::SegmentDataset(std::vector<std::uint16_t> windows,
                               std::size_t frames_per_segment, std::size_t overlap)
    : windows_(std::move(windows)), frames_per_segment_(frames_per_segment), overlap_(overlap) {
  if (windows_.empty()) throw ConfigError("no window lengths selected");
}

void SegmentDataset::add_utterance(const std::string& utt_id, const std::string& label,
                                   int class_index, const FeatureCache& cache) {
  if (!label_table_.emplace(utt_id, label).second) {
    throw ConfigError("duplicate utterance id " + utt_id + " in dataset");
  }
  const std::size_t u = utt_ids_.size();
  utt_ids_.push_back(utt_id);
  utt_segments_.emplace_back();
  for (auto& stack : segment_stacks(cache, windows_, frames_per_segment_, overlap_)) {
    utt_segments_.back().push_back(inputs_.size());
    inputs_.push_back(std::move(stack.channels));
    labels_.push_back(class_index);
    utterance_.push_back(u);
  }
}

Tensor<float> SegmentDataset::batch(std::span<const std::size_t> indices) const {
  if (indices.empty()) throw DimensionError("empty batch");
  const Shape& s = inputs_.at(indices[0]).shape();
  Shape shape{indices.size()};
  shape.insert(shape.end(), s.begin(), s.end());
  Tensor<float> out(shape);
  const std::size_t per = shape_numel(s);
  for (std::size_t i = 0; i < indices.size(); ++i) {
    const Tensor<float>& x = inputs_.at(indices[i]);
    std::copy_n(x.ptr(), per, out.ptr() + i * per);
  }
  return out;
}

std::vector<int> SegmentDataset::batch_labels(std::span<const std::size_t> indices) const {
  std::vector<int> out;
  out.reserve(indices.size());
  for (std::size_t i : indices) out.push_back(labels_.at(i));
  return out;
}

SegmentDataset load_segment_dataset(const Manifest& manifest, const LabelSet& labels,
                                    std::span<const std::uint16_t> windows,
                                    std::size_t frames_per_segment, std::size_t overlap) {
  SegmentDataset ds({windows.begin(), windows.end()}, frames_per_segment, overlap);
  for (const auto& e : manifest.entries) {
    const FeatureCache cache = read_feature_cache(manifest.resolve(e));
    ds.add_utterance(e.utt_id, e.label, labels.class_of(e.label), cache);
  }
  if (ds.empty()) throw ConfigError("manifest lists no utterances");
  return ds;
}

}  // namespace mrspoof
