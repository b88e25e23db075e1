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

// Checkpoint file, little-endian throughout:
//
//   "MRCKPT01"
//   u32 entry_count
//   entry_count x { u32 name_len, name bytes, u32 rank, u32 dims[rank],
//                   f32 payload[prod(dims)] }
//   metadata: "MRMETA01", u32 arch_len, arch bytes, u32 n_input_channels,
//             u32 n_classes, u32 input_height, u32 input_width, u64 step,
//             f64 dev_eer (NaN when unknown), u32 n_window_tags,
//             u16 window_ms[n_window_tags]
//
// Entries hold parameters, batch-norm running statistics and, optionally,
// optimizer moments (names prefixed "adam.m/" and "adam.v/").

#ifndef MRSPOOF_CHECKPOINT_HPP_
#define MRSPOOF_CHECKPOINT_HPP_

#include <cstdint>
#include <filesystem>
#include <limits>
#include <string>
#include <vector>

#include "mrspoof/models.hpp"

namespace mrspoof {

struct CheckpointEntry {
  std::string name;
  Tensor<float> tensor;
};

struct CheckpointMeta {
  ModelSpec spec;
  std::uint64_t step = 0;
  double dev_eer = std::numeric_limits<double>::quiet_NaN();
  std::vector<std::uint16_t> window_tags;
};

struct CheckpointFile {
  std::vector<CheckpointEntry> entries;
  CheckpointMeta meta;

  /// Entry by name, or nullptr.
  const CheckpointEntry* find(const std::string& name) const;
};

void write_checkpoint(const std::filesystem::path& path, const CheckpointFile& ckpt);
CheckpointFile read_checkpoint(const std::filesystem::path& path);

/// Parameters followed by buffers, in registry order.
std::vector<CheckpointEntry> model_state(const Model& model);

/// Copies matching entries into the model. Every parameter and buffer must be
/// present with the same shape; extra entries are ignored.
void load_model_state(const Model& model, const std::vector<CheckpointEntry>& entries);

/// Rebuilds the model described by the metadata and loads its weights.
std::unique_ptr<Model> load_model(const CheckpointFile& ckpt);

}  // namespace mrspoof

#endif  // MRSPOOF_CHECKPOINT_HPP_
