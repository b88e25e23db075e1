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

#include "mrspoof/feature_cache.hpp"

#include <cmath>
#include <fstream>

#include "internal/binary_io.hpp"

namespace mrspoof {

namespace {
constexpr std::string_view kMagic = "MRFM0001";
}  // namespace

FeatureCache FeatureCache::from_maps(std::span<const FeatureMap> maps) {
  if (maps.empty()) throw DimensionError("feature cache needs at least one map");
  std::vector<Tensor<float>> values;
  std::vector<double> windows;
  FeatureCache cache;
  for (const auto& m : maps) {
    const double r = std::round(m.window_ms);
    if (std::abs(r - m.window_ms) > 1e-9 || r < 1 || r > 65535) {
      throw ConfigError("window length " + std::to_string(m.window_ms) +
                        " ms cannot be stored as an integer millisecond tag");
    }
    cache.window_tags.push_back(static_cast<std::uint16_t>(r));
    values.push_back(m.values);
    windows.push_back(m.window_ms);
  }
  MultiResStack stack = stack_multi_resolution(values, windows);
  cache.values = std::move(stack.channels);
  return cache;
}

FeatureMap FeatureCache::channel(std::uint16_t window_ms, const std::string& utt_id) const {
  for (std::size_t c = 0; c < window_tags.size(); ++c) {
    if (window_tags[c] != window_ms) continue;
    FeatureMap map;
    map.window_ms = window_ms;
    map.utt_id = utt_id;
    const std::size_t plane = n_freq() * n_frames();
    map.values = Tensor<float>(
        {n_freq(), n_frames()},
        std::vector<float>(values.ptr() + c * plane, values.ptr() + (c + 1) * plane));
    return map;
  }
  std::string have;
  for (auto t : window_tags) have += (have.empty() ? "" : ",") + std::to_string(t);
  throw ConfigError("feature cache has no " + std::to_string(window_ms) +
                    " ms channel (available: " + have + ")");
}

void write_feature_cache(const std::filesystem::path& path, const FeatureCache& cache) {
  if (cache.values.rank() != 3) {
    throw DimensionError("feature cache values must be channels x freq x frames");
  }
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw FormatError("cannot open " + path.string() + " for writing");
  using internal::put_le;
  internal::put_bytes(os, kMagic);
  put_le<std::uint32_t>(os, static_cast<std::uint32_t>(cache.n_channels()));
  put_le<std::uint32_t>(os, static_cast<std::uint32_t>(cache.n_freq()));
  put_le<std::uint32_t>(os, static_cast<std::uint32_t>(cache.n_frames()));
  put_le<std::uint32_t>(os, static_cast<std::uint32_t>(cache.window_tags.size()));
  for (std::uint16_t t : cache.window_tags) put_le<std::uint16_t>(os, t);
  for (float v : cache.values.data()) internal::put_f32(os, v);
  if (!os) throw FormatError("write to " + path.string() + " failed");
}

FeatureCache read_feature_cache(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw FormatError("cannot open feature cache " + path.string());
  const std::string where = "feature cache " + path.string();
  if (internal::get_bytes(is, kMagic.size(), where) != kMagic) {
    throw FormatError(where + " does not start with MRFM0001");
  }
  using internal::get_le;
  const auto nc = get_le<std::uint32_t>(is, where);
  const auto nf = get_le<std::uint32_t>(is, where);
  const auto nt = get_le<std::uint32_t>(is, where);
  const auto ntags = get_le<std::uint32_t>(is, where);
  if (nc == 0 || nf == 0 || nt == 0) throw FormatError(where + " has an empty axis");
  FeatureCache cache;
  cache.window_tags.resize(ntags);
  for (auto& t : cache.window_tags) t = get_le<std::uint16_t>(is, where);
  cache.values = Tensor<float>({nc, nf, nt});
  for (float& v : cache.values.storage()) v = internal::get_f32(is, where);
  if (is.peek() != std::char_traits<char>::eof()) {
    throw FormatError(where + " has trailing bytes");
  }
  return cache;
}

}  // namespace mrspoof
