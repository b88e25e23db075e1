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

#include "mrspoof/checkpoint.hpp"

#include <fstream>

#include "internal/binary_io.hpp"

namespace mrspoof {

namespace {
constexpr std::string_view kMagic = "MRCKPT01";
constexpr std::string_view kMetaMagic = "MRMETA01";
}  // namespace

const CheckpointEntry* CheckpointFile::find(const std::string& name) const {
  for (const auto& e : entries) {
    if (e.name == name) return &e;
  }
  return nullptr;
}

void write_checkpoint(const std::filesystem::path& path, const CheckpointFile& ckpt) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw FormatError("cannot open " + path.string() + " for writing");
  using internal::put_le;
  internal::put_bytes(os, kMagic);
  put_le<std::uint32_t>(os, static_cast<std::uint32_t>(ckpt.entries.size()));
  for (const auto& e : ckpt.entries) {
    put_le<std::uint32_t>(os, static_cast<std::uint32_t>(e.name.size()));
    internal::put_bytes(os, e.name);
    put_le<std::uint32_t>(os, static_cast<std::uint32_t>(e.tensor.rank()));
    for (std::size_t d : e.tensor.shape()) put_le<std::uint32_t>(os, static_cast<std::uint32_t>(d));
    for (float v : e.tensor.data()) internal::put_f32(os, v);
  }
  const CheckpointMeta& m = ckpt.meta;
  internal::put_bytes(os, kMetaMagic);
  const std::string arch = to_string(m.spec.arch);
  put_le<std::uint32_t>(os, static_cast<std::uint32_t>(arch.size()));
  internal::put_bytes(os, arch);
  put_le<std::uint32_t>(os, static_cast<std::uint32_t>(m.spec.n_input_channels));
  put_le<std::uint32_t>(os, static_cast<std::uint32_t>(m.spec.n_classes));
  put_le<std::uint32_t>(os, static_cast<std::uint32_t>(m.spec.input_height));
  put_le<std::uint32_t>(os, static_cast<std::uint32_t>(m.spec.input_width));
  put_le<std::uint64_t>(os, m.step);
  internal::put_f64(os, m.dev_eer);
  put_le<std::uint32_t>(os, static_cast<std::uint32_t>(m.window_tags.size()));
  for (std::uint16_t t : m.window_tags) put_le<std::uint16_t>(os, t);
  if (!os) throw FormatError("write to " + path.string() + " failed");
}

CheckpointFile read_checkpoint(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw FormatError("cannot open checkpoint " + path.string());
  const std::string where = "checkpoint " + path.string();
  if (internal::get_bytes(is, kMagic.size(), where) != kMagic) {
    throw FormatError(where + " does not start with MRCKPT01");
  }
  using internal::get_le;
  CheckpointFile ckpt;
  const auto count = get_le<std::uint32_t>(is, where);
  ckpt.entries.reserve(count);
  for (std::uint32_t i = 0; i < count; ++i) {
    CheckpointEntry e;
    const auto len = get_le<std::uint32_t>(is, where);
    e.name = internal::get_bytes(is, len, where);
    const auto rank = get_le<std::uint32_t>(is, where);
    if (rank == 0 || rank > 8) throw FormatError(where + ": bad rank for " + e.name);
    Shape shape(rank);
    for (auto& d : shape) d = get_le<std::uint32_t>(is, where);
    e.tensor = Tensor<float>(shape);
    for (float& v : e.tensor.storage()) v = internal::get_f32(is, where);
    ckpt.entries.push_back(std::move(e));
  }
  if (internal::get_bytes(is, kMetaMagic.size(), where) != kMetaMagic) {
    throw FormatError(where + " is missing its metadata block");
  }
  CheckpointMeta& m = ckpt.meta;
  const auto alen = get_le<std::uint32_t>(is, where);
  m.spec.arch = parse_arch(internal::get_bytes(is, alen, where));
  m.spec.n_input_channels = get_le<std::uint32_t>(is, where);
  m.spec.n_classes = get_le<std::uint32_t>(is, where);
  m.spec.input_height = get_le<std::uint32_t>(is, where);
  m.spec.input_width = get_le<std::uint32_t>(is, where);
  m.step = get_le<std::uint64_t>(is, where);
  m.dev_eer = internal::get_f64(is, where);
  m.window_tags.resize(get_le<std::uint32_t>(is, where));
  for (auto& t : m.window_tags) t = get_le<std::uint16_t>(is, where);
  if (is.peek() != std::char_traits<char>::eof()) {
    throw FormatError(where + " has trailing bytes");
  }
  return ckpt;
}

std::vector<CheckpointEntry> model_state(const Model& model) {
  std::vector<CheckpointEntry> out;
  for (const auto& p : model.parameters()) out.push_back({p.name, p.tensor.value()});
  for (const auto& b : model.buffers()) out.push_back({b.name, *b.tensor});
  return out;
}

void load_model_state(const Model& model, const std::vector<CheckpointEntry>& entries) {
  auto lookup = [&](const std::string& name, const Shape& shape) -> const Tensor<float>& {
    for (const auto& e : entries) {
      if (e.name != name) continue;
      if (e.tensor.shape() != shape) {
        throw DimensionError("checkpoint entry " + name + " has shape " +
                             shape_to_string(e.tensor.shape()) + ", model expects " +
                             shape_to_string(shape));
      }
      return e.tensor;
    }
    throw FormatError("checkpoint has no entry for " + name);
  };
  for (const auto& p : model.parameters()) {
    Variable<float> v = p.tensor;
    v.mutable_value() = lookup(p.name, v.shape());
  }
  for (const auto& b : model.buffers()) {
    *b.tensor = lookup(b.name, b.tensor->shape());
    *b.stats_recorded = true;
  }
}

std::unique_ptr<Model> load_model(const CheckpointFile& ckpt) {
  auto model = build_model(ckpt.meta.spec);
  load_model_state(*model, ckpt.entries);
  return model;
}

}  // namespace mrspoof
