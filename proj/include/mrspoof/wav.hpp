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

// Minimal RIFF/WAVE reader and writer: 16-bit PCM, mono, no resampling.

#ifndef MRSPOOF_WAV_HPP_
#define MRSPOOF_WAV_HPP_

#include <filesystem>
#include <optional>

#include "mrspoof/dsp.hpp"

namespace mrspoof {

/// Samples are scaled by 1/32768. When `expected_rate` is set, a file at any
/// other rate raises FormatError("sample rate mismatch ...").
AudioBuffer read_wav(const std::filesystem::path& path,
                     std::optional<int> expected_rate = std::nullopt);

/// Writes round(x * 32768) clamped to [-32768, 32767].
void write_wav(const std::filesystem::path& path, const AudioBuffer& audio);

}  // namespace mrspoof

#endif  // MRSPOOF_WAV_HPP_
