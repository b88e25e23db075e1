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

// Run configuration as line-oriented "key = value" text. Lines starting with
// '#' are comments. Unknown keys are rejected.

#ifndef MRSPOOF_RUN_CONFIG_HPP_
#define MRSPOOF_RUN_CONFIG_HPP_

#include <cstdint>
#include <filesystem>
#include <set>
#include <string>
#include <vector>

#include "mrspoof/dsp.hpp"
#include "mrspoof/manifest.hpp"
#include "mrspoof/models.hpp"
#include "mrspoof/training.hpp"

namespace mrspoof {

struct RunConfig {
  SpectrogramConfig spectrogram;
  std::vector<std::uint16_t> windows{18, 25, 30};
  std::size_t segment_frames = 400;   // M
  std::size_t segment_overlap = 200;  // L
  ModelSpec model;
  TrainConfig train;
  std::size_t score_batch_size = 16;
  LabelSet labels;

  /// Sets one key from its text form. ConfigError for unknown keys or
  /// malformed values.
  void set(const std::string& key, const std::string& value);

  /// Fills model.n_input_channels, input_height and input_width from the
  /// window list, FFT size and M unless they were set explicitly, then
  /// validates every section and their consistency. With `check_windows`
  /// false the channel count may differ from the window list (parameter
  /// accounting needs no features).
  void finalize(bool check_windows = true);

  /// Fully resolved "key = value" text, one key per line, fixed order.
  std::string to_text() const;

  static std::vector<std::string> keys();

 private:
  std::set<std::string> explicit_;
};

std::vector<std::uint16_t> parse_window_list(const std::string& csv);
std::string format_window_list(const std::vector<std::uint16_t>& windows);

/// Applies every line of `text` to `config`; errors name the line number.
void apply_config_text(RunConfig& config, const std::string& text,
                       const std::string& source = "<config>");
void apply_config_file(RunConfig& config, const std::filesystem::path& path);

}  // namespace mrspoof

#endif  // MRSPOOF_RUN_CONFIG_HPP_
