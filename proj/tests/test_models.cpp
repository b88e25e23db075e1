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


#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <map>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "mrspoof/checkpoint.hpp"
#include "mrspoof/errors.hpp"
#include "mrspoof/models.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

namespace {

using namespace mrspoof;
using mrspoof::testing::TempDir;

ModelSpec make_spec(Arch arch, std::size_t nc, std::size_t h = 257, std::size_t w = 400) {
  ModelSpec s;
  s.arch = arch;
  s.n_input_channels = nc;
  s.input_height = h;
  s.input_width = w;
  return s;
}

Tensor<float> random_batch(Shape shape, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<float> nd(0.0f, 1.0f);
  Tensor<float> t(std::move(shape));
  for (auto& v : t.storage()) v = nd(rng);
  return t;
}

using mrspoof::oracle::lcnn_params;
using mrspoof::oracle::resnet18_params;
using mrspoof::oracle::senet50_params;

std::size_t registry_total(const Model& m) {
  std::size_t n = 0;
  for (const auto& p : m.parameters()) n += p.tensor.value().numel();
  return n;
}

}  // namespace

TEST_SUITE("models") {

TEST_CASE("hand counts reproduce the published totals") {
  CHECK(lcnn_params(1) == 73504);
  CHECK(resnet18_params(1) == 701808);
  CHECK(senet50_params(1) == 1094640);
}

TEST_CASE("builders match the published totals and deltas") {
  struct Row { Arch arch; std::size_t total; long long d2, d3; };
  const Row rows[] = {{Arch::kLcnn, 73504, 800, 1600},
                      {Arch::kResNet18, 701808, 784, 1568},
                      {Arch::kSENet50, 1094640, 784, 1568}};
  for (const auto& r : rows) {
    CAPTURE(to_string(r.arch));
    auto m1 = build_model(make_spec(r.arch, 1));
    auto m2 = build_model(make_spec(r.arch, 2));
    auto m3 = build_model(make_spec(r.arch, 3));
    const auto p1 = count_parameters(*m1), p2 = count_parameters(*m2),
               p3 = count_parameters(*m3);
    CHECK(p1.total == r.total);
    CHECK(p1.delta_vs_single_channel == 0);
    CHECK(p2.delta_vs_single_channel == r.d2);
    CHECK(p3.delta_vs_single_channel == r.d3);
    CHECK(static_cast<long long>(p3.total) - static_cast<long long>(p1.total) == r.d3);
    CHECK(expected_channel_delta(m3->spec()) == r.d3);
    CHECK(p1.total == registry_total(*m1));
  }
  CHECK(count_parameters(*build_model(make_spec(Arch::kLcnn, 2))).total ==
        lcnn_params(2));
  CHECK(count_parameters(*build_model(make_spec(Arch::kResNet18, 3))).total ==
        resnet18_params(3));
  CHECK(count_parameters(*build_model(make_spec(Arch::kSENet50, 2))).total ==
        senet50_params(2));
}

TEST_CASE("per-layer counts sum to the total") {
  for (Arch a : {Arch::kLcnn, Arch::kResNet18, Arch::kSENet50}) {
    auto r = count_parameters(*build_model(make_spec(a, 2)));
    std::size_t s = 0;
    for (const auto& [name, n] : r.per_layer) s += n;
    CHECK(s == r.total);
  }
}

TEST_CASE("set_input_channels changes only the first convolution") {
  for (Arch a : {Arch::kLcnn, Arch::kResNet18, Arch::kSENet50}) {
    const auto s1 = make_spec(a, 1);
    CHECK(set_input_channels(s1, 1) == s1);
    const auto s3 = set_input_channels(s1, 3);
    CHECK(s3.n_input_channels == 3);
    auto m1 = build_model(s1), m3 = build_model(s3);
    REQUIRE(m1->parameters().size() == m3->parameters().size());
    std::size_t changed = 0;
    for (std::size_t i = 0; i < m1->parameters().size(); ++i) {
      const auto& p = m1->parameters()[i];
      const auto& q = m3->parameters()[i];
      CHECK(p.name == q.name);
      if (p.tensor.shape() != q.tensor.shape()) {
        ++changed;
        CHECK(q.tensor.shape()[1] == 3);
        CHECK(i == 0);
      }
    }
    CHECK(changed == 1);
    CHECK_THROWS(set_input_channels(s1, 0));
  }
}

TEST_CASE("parameter names are stable across rebuilds") {
  auto a = build_model(make_spec(Arch::kSENet50, 1), 1);
  auto b = build_model(make_spec(Arch::kSENet50, 1), 2);
  REQUIRE(a->parameters().size() == b->parameters().size());
  std::set<std::string> names;
  for (std::size_t i = 0; i < a->parameters().size(); ++i) {
    CHECK(a->parameters()[i].name == b->parameters()[i].name);
    names.insert(a->parameters()[i].name);
  }
  CHECK(names.size() == a->parameters().size());
}

TEST_CASE("LCNN shape trace follows the layer table") {
  auto m = build_model(make_spec(Arch::kLcnn, 1));
  ForwardTrace trace;
  NoGradGuard ng;
  m->forward(Variable<float>(random_batch({1, 1, 257, 400}, 1)), Mode::kEval, &trace);
  std::map<std::string, Shape> at(trace.begin(), trace.end());
  const std::pair<const char*, std::size_t> conv_mfm[] = {
      {"1", 32}, {"2a", 32}, {"2b", 48}, {"3a", 48}, {"3b", 64},
      {"4a", 64}, {"4b", 32}, {"5a", 32}, {"5b", 32}};
  for (const auto& [n, c] : conv_mfm) {
    CAPTURE(n);
    CHECK(at.at(std::string("conv") + n)[1] == c);
    CHECK(at.at(std::string("mfm") + n)[1] == c / 2);
  }
  CHECK(at.at("conv1") == Shape{1, 32, 257, 400});
  CHECK(at.at("maxpool5") == Shape{1, 16, 8, 2});
  CHECK(at.at("flatten") == Shape{1, 256});
  CHECK(at.at("fc6") == Shape{1, 128});
  CHECK(at.at("mfm6") == Shape{1, 64});
  CHECK(at.at("fc7") == Shape{1, 10});
  for (const auto& p : m->parameters())
    if (p.name == "fc6.weight") CHECK(p.tensor.shape() == Shape{128, 256});
}

TEST_CASE("LCNN FC6 width depends on the input size; residual nets do not") {
  auto small = count_parameters(*build_model(make_spec(Arch::kLcnn, 1, 64, 250)));
  CHECK(small.total == 73504 - (256 - 32) * 128);
  for (Arch a : {Arch::kResNet18, Arch::kSENet50}) {
    CHECK(count_parameters(*build_model(make_spec(a, 1, 64, 100))).total ==
          count_parameters(*build_model(make_spec(a, 1))).total);
  }
}

TEST_CASE("forward yields N x 10 finite logits for every architecture") {
  NoGradGuard ng;
  for (Arch a : {Arch::kLcnn, Arch::kResNet18, Arch::kSENet50}) {
    auto m = build_model(make_spec(a, 2));
    auto x = random_batch({2, 2, 257, 400}, 3);
    auto y = forward(*m, x, Mode::kEval);
    CHECK(y.shape() == Shape{2, 10});
    CHECK(y.all_finite());
  }
}

TEST_CASE("eval forward is deterministic, channel order matters") {
  NoGradGuard ng;
  for (Arch a : {Arch::kLcnn, Arch::kResNet18, Arch::kSENet50}) {
    auto m = build_model(make_spec(a, 2, 64, 250), 4);
    auto x = random_batch({2, 2, 64, 250}, 5);
    auto y1 = forward(*m, x, Mode::kEval);
    auto y2 = forward(*m, x, Mode::kEval);
    CHECK(y1 == y2);
    Tensor<float> swapped(x.shape());
    const std::size_t plane = 64 * 250;
    for (std::size_t n = 0; n < 2; ++n)
      for (std::size_t c = 0; c < 2; ++c)
        std::copy_n(x.ptr() + (n * 2 + c) * plane, plane,
                    swapped.ptr() + (n * 2 + (1 - c)) * plane);
    CHECK_FALSE(forward(*m, swapped, Mode::kEval) == y1);
  }
}

TEST_CASE("channel mismatch is a dimension error") {
  auto m = build_model(make_spec(Arch::kLcnn, 2, 64, 250));
  CHECK_THROWS_AS(forward(*m, Tensor<float>({1, 3, 64, 250}), Mode::kEval), DimensionError);
}

TEST_CASE("every parameter receives a gradient") {
  for (Arch a : {Arch::kLcnn, Arch::kResNet18, Arch::kSENet50}) {
    CAPTURE(to_string(a));
    auto m = build_model(make_spec(a, 2, 64, 250), 7);
    auto y = m->forward(Variable<float>(random_batch({3, 2, 64, 250}, 8)), Mode::kTrain);
    const int t[] = {0, 3, 7};
    ops::softmax_cross_entropy<float>(y, t).backward();
    for (const auto& p : m->parameters()) {
      CAPTURE(p.name);
      REQUIRE(p.tensor.has_grad());
      const auto& g = p.tensor.grad().storage();
      CHECK(std::any_of(g.begin(), g.end(), [](float v) { return v != 0.0f; }));
    }
  }
}

TEST_CASE("squeeze-excitation with zero excitation halves the input") {
  ParameterRegistry reg(1);
  layers::SqueezeExcitation se(reg, "se", 32, 16);
  se.excite().weight.mutable_value().fill(0.0f);
  auto x = random_batch({2, 32, 3, 3}, 9);
  auto y = se.forward(Variable<float>(x));
  for (std::size_t i = 0; i < x.numel(); ++i) CHECK(y.value()[i] == 0.5f * x[i]);
}

TEST_CASE("basic block with zero convolutions is the identity on non-negative input") {
  ParameterRegistry reg(1);
  layers::BasicBlock block(reg, "b", 8, 8, 1);
  CHECK_FALSE(block.has_projection());
  block.conv_a().conv.weight.mutable_value().fill(0.0f);
  block.conv_b().conv.weight.mutable_value().fill(0.0f);
  auto x = random_batch({2, 8, 5, 5}, 10);
  for (auto& v : x.storage()) v = std::abs(v);
  auto y = block.forward(Variable<float>(x), Mode::kEval);
  CHECK(y.value() == x);
}

TEST_CASE("checkpoint save, load, save is bitwise stable") {
  TempDir dir("ckpt");
  for (Arch a : {Arch::kLcnn, Arch::kResNet18}) {
    auto m = build_model(make_spec(a, 3), 11);
    CheckpointFile ck;
    ck.entries = model_state(*m);
    ck.meta.spec = m->spec();
    ck.meta.step = 123;
    ck.meta.dev_eer = 0.25;
    ck.meta.window_tags = {18, 25, 30};
    write_checkpoint(dir / "a.ckpt", ck);
    auto back = read_checkpoint(dir / "a.ckpt");
    CHECK(back.meta.spec == ck.meta.spec);
    CHECK(back.meta.step == 123);
    CHECK(back.meta.dev_eer == 0.25);
    CHECK(back.meta.window_tags == ck.meta.window_tags);
    auto m2 = load_model(back);
    const auto s2 = model_state(*m2);
    REQUIRE(s2.size() == ck.entries.size());
    for (std::size_t i = 0; i < s2.size(); ++i) {
      CHECK(s2[i].name == ck.entries[i].name);
      CHECK(s2[i].tensor == ck.entries[i].tensor);
    }
    write_checkpoint(dir / "b.ckpt", back);
    CHECK(mrspoof::testing::read_bytes(dir / "a.ckpt") ==
          mrspoof::testing::read_bytes(dir / "b.ckpt"));
  }
}

TEST_CASE("checkpoint header layout") {
  TempDir dir("ckpt");
  CheckpointFile ck;
  ck.entries.push_back({"w", Tensor<float>({2, 3}, 1.5f)});
  ck.meta.spec = make_spec(Arch::kLcnn, 1);
  write_checkpoint(dir / "c.ckpt", ck);
  auto bytes = mrspoof::testing::read_bytes(dir / "c.ckpt");
  CHECK(std::string(bytes.begin(), bytes.begin() + 8) == "MRCKPT01");
  auto u32 = [&](std::size_t o) {
    return bytes[o] | bytes[o + 1] << 8 | bytes[o + 2] << 16 | bytes[o + 3] << 24;
  };
  CHECK(u32(8) == 1);   // entries
  CHECK(u32(12) == 1);  // name length
  CHECK(bytes[16] == 'w');
  CHECK(u32(17) == 2);  // rank
  CHECK(u32(21) == 2);
  CHECK(u32(25) == 3);
  float f;
  const unsigned u = u32(29);
  std::memcpy(&f, &u, 4);
  CHECK(f == 1.5f);
  CHECK(std::string(bytes.begin() + 29 + 24, bytes.begin() + 29 + 32) == "MRMETA01");
}

TEST_CASE("checkpoint rejects bad magic and mismatched shapes") {
  TempDir dir("ckpt");
  mrspoof::testing::write_text(dir / "x.ckpt", "MRCKPT02\x01\x00\x00\x00");
  CHECK_THROWS_AS(read_checkpoint(dir / "x.ckpt"), FormatError);
  auto m1 = build_model(make_spec(Arch::kLcnn, 1));
  auto m2 = build_model(make_spec(Arch::kLcnn, 2));
  CHECK_THROWS(load_model_state(*m2, model_state(*m1)));
}

}  // TEST_SUITE
