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

#ifndef MRSPOOF_FEATURE_CACHE_HPP_
#define MRSPOOF_FEATURE_CACHE_HPP_

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "mrspoof/dsp.hpp"

namespace mrspoof {

/// Whole-utterance multi-resolution features as stored on disk.
///
/// Layout (all little-endian): "MRFM0001", u32 n_channels, u32 n_freq,
/// u32 n_frames, u32 n_window_tags, u16 window_ms[n_window_tags], then
/// n_channels * n_freq * n_frames f32 values, channel-major, then frequency,
/// then time.
struct FeatureCache {
  Tensor<float> values;  // n_channels x n_freq x n_frames
  std::vector<std::uint16_t> window_tags;

  std::size_t n_channels() const { return values.dim(0); }
  std::size_t n_freq() const { return values.dim(1); }
  std::size_t n_frames() const { return values.dim(2); }

  /// Builds the cache from equally sized maps, one per window.
  static FeatureCache from_maps(std::span<const FeatureMap> maps);

  /// Single-channel map for the channel tagged `window_ms`.
  FeatureMap channel(std::uint16_t window_ms, const std::string& utt_id = {}) const;
};

void write_feature_cache(const std::filesystem::path& path, const FeatureCache& cache);
FeatureCache read_feature_cache(const std::filesystem::path& path);

}  // namespace mrspoof

#endif  // MRSPOOF_FEATURE_CACHE_HPP_
