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

#include "mrspoof/wav.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>

#include "internal/binary_io.hpp"
#include "mrspoof/errors.hpp"

namespace mrspoof {

namespace {

constexpr std::uint16_t kFormatPcm = 1;
constexpr std::uint16_t kFormatExtensible = 0xFFFE;

std::vector<unsigned char> slurp(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw FormatError("cannot open audio file " + path.string());
  return {std::istreambuf_iterator<char>(is), std::istreambuf_iterator<char>()};
}

std::uint32_t u32_at(const std::vector<unsigned char>& b, std::size_t pos) {
  return static_cast<std::uint32_t>(b[pos]) | (static_cast<std::uint32_t>(b[pos + 1]) << 8) |
         (static_cast<std::uint32_t>(b[pos + 2]) << 16) |
         (static_cast<std::uint32_t>(b[pos + 3]) << 24);
}

std::uint16_t u16_at(const std::vector<unsigned char>& b, std::size_t pos) {
  return static_cast<std::uint16_t>(b[pos] | (b[pos + 1] << 8));
}

}  // namespace

AudioBuffer read_wav(const std::filesystem::path& path, std::optional<int> expected_rate) {
  const auto bytes = slurp(path);
  const std::string where = path.string() + ": ";
  if (bytes.size() < 12 || std::memcmp(bytes.data(), "RIFF", 4) != 0 ||
      std::memcmp(bytes.data() + 8, "WAVE", 4) != 0) {
    throw FormatError(where + "not a RIFF/WAVE file");
  }
  bool have_fmt = false;
  std::uint16_t channels = 0, bits = 0;
  std::uint32_t rate = 0;
  std::size_t data_pos = 0, data_len = 0;
  bool have_data = false;
  std::size_t pos = 12;
  while (pos + 8 <= bytes.size()) {
    const std::uint32_t len = u32_at(bytes, pos + 4);
    const std::size_t body = pos + 8;
    if (std::memcmp(bytes.data() + pos, "fmt ", 4) == 0) {
      if (len < 16 || body + len > bytes.size()) throw FormatError(where + "truncated fmt chunk");
      std::uint16_t format = u16_at(bytes, body);
      channels = u16_at(bytes, body + 2);
      rate = u32_at(bytes, body + 4);
      bits = u16_at(bytes, body + 14);
      if (format == kFormatExtensible && len >= 26) format = u16_at(bytes, body + 24);
      if (format != kFormatPcm) {
        throw FormatError(where + "unsupported encoding (format tag " + std::to_string(format) +
                          "); only PCM is read");
      }
      have_fmt = true;
    } else if (std::memcmp(bytes.data() + pos, "data", 4) == 0) {
      data_pos = body;
      data_len = std::min<std::size_t>(len, bytes.size() - body);
      have_data = true;
      break;
    }
    pos = body + len + (len & 1u);
  }
  if (!have_fmt) throw FormatError(where + "missing fmt chunk");
  if (!have_data) throw FormatError(where + "missing data chunk");
  if (bits != 16) {
    throw FormatError(where + "unsupported sample width " + std::to_string(bits) +
                      " bits; only 16-bit PCM is read");
  }
  if (channels != 1) {
    throw FormatError(where + "expected mono audio, found " + std::to_string(channels) +
                      " channels");
  }
  if (expected_rate && static_cast<int>(rate) != *expected_rate) {
    throw FormatError(where + "sample rate mismatch: file is " + std::to_string(rate) +
                      " Hz, configured " + std::to_string(*expected_rate) + " Hz");
  }
  AudioBuffer audio;
  audio.sample_rate = static_cast<int>(rate);
  audio.utt_id = path.stem().string();
  const std::size_t n = data_len / 2;
  audio.samples.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto v = static_cast<std::int16_t>(u16_at(bytes, data_pos + 2 * i));
    audio.samples[i] = static_cast<float>(v) / 32768.0f;
  }
  return audio;
}

void write_wav(const std::filesystem::path& path, const AudioBuffer& audio) {
  if (audio.sample_rate <= 0) throw FormatError("write_wav: non-positive sample rate");
  const std::size_t n = audio.samples.size();
  const auto data_len = static_cast<std::uint32_t>(2 * n);
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw FormatError("cannot open " + path.string() + " for writing");
  internal::put_bytes(os, "RIFF");
  internal::put_le<std::uint32_t>(os, 36 + data_len);
  internal::put_bytes(os, "WAVEfmt ");
  internal::put_le<std::uint32_t>(os, 16);
  internal::put_le<std::uint16_t>(os, kFormatPcm);
  internal::put_le<std::uint16_t>(os, 1);
  internal::put_le<std::uint32_t>(os, static_cast<std::uint32_t>(audio.sample_rate));
  internal::put_le<std::uint32_t>(os, static_cast<std::uint32_t>(audio.sample_rate) * 2);
  internal::put_le<std::uint16_t>(os, 2);
  internal::put_le<std::uint16_t>(os, 16);
  internal::put_bytes(os, "data");
  internal::put_le<std::uint32_t>(os, data_len);
  for (float x : audio.samples) {
    const double q = std::clamp(std::round(static_cast<double>(x) * 32768.0), -32768.0, 32767.0);
    internal::put_le<std::uint16_t>(os, static_cast<std::uint16_t>(static_cast<std::int16_t>(q)));
  }
  if (!os) throw FormatError("write failed: " + path.string());
}

}  // namespace mrspoof
