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

#include <cmath>
#include <algorithm>
#include <filesystem>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "mrspoof/errors.hpp"
#include "mrspoof/feature_cache.hpp"
#include "mrspoof/manifest.hpp"
#include "mrspoof/pipeline.hpp"
#include "mrspoof/run_config.hpp"
#include "mrspoof/synth.hpp"
#include "mrspoof/wav.hpp"
#include "test_util.hpp"

namespace {

using namespace mrspoof;
using mrspoof::testing::read_bytes;
using mrspoof::testing::read_text;
using mrspoof::testing::TempDir;
using mrspoof::testing::write_text;

struct CliResult {
  int code;
  std::string out;
  std::string err;
};

CliResult cli(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  const int code = run_pipeline(args, out, err);
  return {code, out.str(), err.str()};
}

// 16-bit PCM WAV with the given header fields, built byte by byte.
std::string wav_bytes(const std::vector<std::int16_t>& samples, std::uint32_t rate,
                      std::uint16_t channels = 1, std::uint16_t format = 1,
                      std::uint16_t bits = 16) {
  std::string b;
  auto u16 = [&](std::uint16_t v) {
    b.push_back(static_cast<char>(v & 0xff));
    b.push_back(static_cast<char>(v >> 8));
  };
  auto u32 = [&](std::uint32_t v) {
    for (int i = 0; i < 4; ++i) b.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
  };
  const std::uint32_t data_len = static_cast<std::uint32_t>(samples.size() * 2);
  b += "RIFF";
  u32(36 + data_len);
  b += "WAVEfmt ";
  u32(16);
  u16(format);
  u16(channels);
  u32(rate);
  u32(rate * channels * bits / 8);
  u16(static_cast<std::uint16_t>(channels * bits / 8));
  u16(bits);
  b += "data";
  u32(data_len);
  for (auto s : samples) u16(static_cast<std::uint16_t>(s));
  return b;
}

}  // namespace

TEST_SUITE("wav") {

TEST_CASE("sample scaling") {
  TempDir dir("wav");
  write_text(dir / "x.wav", wav_bytes({-32768, 16384, 0, 32767}, 16000));
  const auto a = read_wav(dir / "x.wav", 16000);
  REQUIRE(a.samples.size() == 4);
  CHECK(a.samples[0] == -1.0f);
  CHECK(a.samples[1] == 0.5f);
  CHECK(a.samples[2] == 0.0f);
  CHECK(a.samples[3] == 32767.0f / 32768.0f);
  CHECK(a.sample_rate == 16000);
  CHECK(a.utt_id == "x");
}

TEST_CASE("one second at 16 kHz has 16000 samples and round-trips") {
  TempDir dir("wav");
  const auto t = mrspoof::testing::tone(440, 1.0);
  write_wav(dir / "t.wav", t);
  const auto back = read_wav(dir / "t.wav");
  CHECK(back.samples.size() == 16000);
  for (std::size_t i = 0; i < back.samples.size(); ++i)
    CHECK(std::abs(back.samples[i] - t.samples[i]) <= 0.5f / 32768.0f);
  write_wav(dir / "u.wav", back);
  CHECK(read_bytes(dir / "t.wav") == read_bytes(dir / "u.wav"));
}

TEST_CASE("rate mismatch, stereo and non-PCM are rejected") {
  TempDir dir("wav");
  write_text(dir / "r.wav", wav_bytes({1, 2, 3}, 44100));
  try {
    read_wav(dir / "r.wav", 16000);
    FAIL("expected an error");
  } catch (const FormatError& e) {
    CHECK(std::string(e.what()).find("sample rate mismatch") != std::string::npos);
  }
  write_text(dir / "s.wav", wav_bytes({1, 2, 3, 4}, 16000, 2));
  CHECK_THROWS_AS(read_wav(dir / "s.wav"), FormatError);
  write_text(dir / "f.wav", wav_bytes({1, 2}, 16000, 1, 3));
  CHECK_THROWS_AS(read_wav(dir / "f.wav"), FormatError);
  write_text(dir / "n.wav", "not a wav file at all");
  CHECK_THROWS_AS(read_wav(dir / "n.wav"), FormatError);
}

}  // TEST_SUITE

TEST_SUITE("manifest") {

TEST_CASE("three valid lines") {
  TempDir dir("man");
  write_text(dir / "m.tsv", "a\twav/a.wav\tbonafide\nb\twav/b.wav\tAA\nc\t/abs/c.wav\tCC\n");
  const LabelSet labels;
  const auto m = parse_manifest(dir / "m.tsv", labels);
  REQUIRE(m.entries.size() == 3);
  CHECK(labels.class_of(m.entries[0].label) == 0);
  CHECK(labels.class_of("CC") == 9);
  CHECK(m.resolve(m.entries[0]) == dir.path() / "wav/a.wav");
  CHECK(m.resolve(m.entries[2]) == std::filesystem::path("/abs/c.wav"));
  CHECK(m.labels().at("b") == "AA");
}

TEST_CASE("duplicate ids and unknown labels name the line") {
  TempDir dir("man");
  write_text(dir / "d.tsv", "a\ta.wav\tbonafide\nb\tb.wav\tAA\na\tc.wav\tAB\n");
  try {
    parse_manifest(dir / "d.tsv");
    FAIL("expected an error");
  } catch (const FormatError& e) {
    CHECK(std::string(e.what()).find(":3") != std::string::npos);
  }
  write_text(dir / "u.tsv", "a\ta.wav\tbonafide\nb\tb.wav\tZZ\n");
  try {
    parse_manifest(dir / "u.tsv");
    FAIL("expected an error");
  } catch (const FormatError& e) {
    CHECK(std::string(e.what()).find(":2") != std::string::npos);
  }
  // the same id may appear once per partition
  write_text(dir / "p.tsv", "a\ta.wav\tbonafide\ttrain\na\tb.wav\tbonafide\tdev\n");
  CHECK(parse_manifest(dir / "p.tsv").entries.size() == 2);
}

TEST_CASE("write then parse returns the same entries") {
  TempDir dir("man");
  const std::vector<ManifestEntry> e{{"u1", "w/u1.wav", "bonafide", Partition::kTrain},
                                     {"u2", "w/u2.wav", "BC", Partition::kDev},
                                     {"u3", "w/u3.wav", "AA", Partition::kEval}};
  write_manifest(dir / "m.tsv", e);
  CHECK(parse_manifest(dir / "m.tsv").entries == e);
  const std::vector<ManifestEntry> plain{{"x", "x.wav", "CA", Partition::kUnspecified}};
  write_manifest(dir / "p.tsv", plain);
  CHECK(read_text(dir / "p.tsv") == "x\tx.wav\tCA\n");
  CHECK(parse_manifest(dir / "p.tsv").entries == plain);
}

TEST_CASE("label set") {
  const LabelSet l;
  CHECK(l.size() == 10);
  CHECK(l.name(0) == "bonafide");
  CHECK_THROWS_AS(l.class_of("nope"), ConfigError);
  CHECK_THROWS(LabelSet({"AA", "bonafide"}));
  CHECK_THROWS(LabelSet({"bonafide", "AA", "AA"}));
}

}  // TEST_SUITE

TEST_SUITE("run_config") {

TEST_CASE("defaults resolve to the reference setup") {
  RunConfig c;
  c.finalize();
  CHECK(c.model.n_input_channels == 3);
  CHECK(c.model.input_height == 257);
  CHECK(c.model.input_width == 400);
  CHECK(c.model.n_classes == 10);
  CHECK(c.train.batch_size == 64);
  CHECK(c.train.warmup_steps == 1000);
  CHECK(c.train.beta2 == 0.98);
  CHECK(c.train.weight_decay == 1e-4);
  CHECK(c.segment_frames == 400);
  CHECK(c.segment_overlap == 200);
}

TEST_CASE("text round trip and errors with line numbers") {
  RunConfig c;
  apply_config_text(c, "# comment\nwindows = 18,30\npeak_lr = 0.002\n\nnormalize = true\n");
  c.finalize();
  CHECK(c.windows == std::vector<std::uint16_t>{18, 30});
  CHECK(c.model.n_input_channels == 2);
  CHECK(c.spectrogram.normalize);
  RunConfig d;
  apply_config_text(d, c.to_text());
  d.finalize();
  CHECK(d.to_text() == c.to_text());

  RunConfig e;
  try {
    apply_config_text(e, "epochs = 3\nbogus_key = 1\n", "x.cfg");
    FAIL("expected an error");
  } catch (const ConfigError& err) {
    CHECK(std::string(err.what()).find("x.cfg:2") != std::string::npos);
  }
  CHECK_THROWS_AS(apply_config_text(e, "epochs = three\n"), ConfigError);
  CHECK_THROWS_AS(apply_config_text(e, "arch = vgg\n"), ConfigError);
}

TEST_CASE("inconsistent settings are rejected") {
  RunConfig c;
  c.set("segment_overlap", "400");
  CHECK_THROWS_AS(c.finalize(), ConfigError);
  RunConfig d;
  d.set("n_input_channels", "2");
  CHECK_THROWS_AS(d.finalize(), ConfigError);
  RunConfig e;
  e.set("windows", "18,40");
  CHECK_THROWS_AS(e.finalize(), ConfigError);
}

}  // TEST_SUITE

TEST_SUITE("synth") {

TEST_CASE("twenty utterances per class give 200 WAVs and three manifests") {
  TempDir dir("syn");
  SynthSpec spec;
  spec.seed = 3;
  const auto m = generate_synthetic_corpus(spec, dir.path());
  std::size_t wavs = 0;
  for (const auto& f : std::filesystem::directory_iterator(dir / "wav"))
    wavs += f.path().extension() == ".wav";
  CHECK(wavs == 200);
  const auto tr = parse_manifest(m.train), dv = parse_manifest(m.dev), ev = parse_manifest(m.eval);
  CHECK(tr.entries.size() == 100);
  CHECK(dv.entries.size() == 50);
  CHECK(ev.entries.size() == 50);
  std::set<std::string> ids;
  for (const auto* mm : {&tr, &dv, &ev})
    for (const auto& e : mm->entries) ids.insert(e.utt_id);
  CHECK(ids.size() == 200);
  const auto a = read_wav(tr.resolve(tr.entries.front()), 16000);
  CHECK(a.duration_s() >= spec.min_duration_s - 1e-9);
  CHECK(a.duration_s() <= spec.max_duration_s + 1e-9);
}

TEST_CASE("same seed gives identical bytes") {
  TempDir a("syn"), b("syn"), c("syn");
  SynthSpec spec;
  spec.utts_per_class = 4;
  spec.seed = 11;
  generate_synthetic_corpus(spec, a.path());
  generate_synthetic_corpus(spec, b.path());
  spec.seed = 12;
  generate_synthetic_corpus(spec, c.path());
  std::size_t n = 0, differ = 0;
  for (const auto& f : std::filesystem::directory_iterator(a / "wav")) {
    const auto name = f.path().filename().string();
    CHECK(read_bytes(f.path()) == read_bytes(b / ("wav/" + name)));
    differ += read_bytes(f.path()) != read_bytes(c / ("wav/" + name));
    ++n;
  }
  CHECK(n == 40);
  CHECK(differ == n);
  for (const char* m : {"train.tsv", "dev.tsv", "eval.tsv"})
    CHECK(read_bytes(a / m) == read_bytes(b / m));
}

TEST_CASE("every spoof class shifts the spectral centroid by more than 5 percent") {
  std::vector<double> mean(10, 0.0);
  const int n = 8;
  for (int c = 0; c < 10; ++c) {
    std::mt19937_64 rng(100 + c);
    for (int i = 0; i < n; ++i)
      mean[c] += mean_spectral_centroid(synthesize_utterance(c, 2.0, 16000, rng)) / n;
  }
  for (int c = 1; c < 10; ++c) {
    CAPTURE(c);
    CHECK(std::abs(mean[c] - mean[0]) > 0.05 * mean[0]);
  }
}

TEST_CASE("replay recipes are distinct") {
  for (int i = 1; i < 10; ++i)
    for (int j = i + 1; j < 10; ++j) {
      const auto a = replay_recipe(i), b = replay_recipe(j);
      CHECK((a.highpass_hz != b.highpass_hz || a.emphasis_hz != b.emphasis_hz ||
             a.rt60_s != b.rt60_s));
    }
  CHECK_THROWS(replay_recipe(0));
  CHECK_THROWS(replay_recipe(10));
}

}  // TEST_SUITE

TEST_SUITE("pipeline") {

TEST_CASE("count-params prints the published totals") {
  auto r = cli({"count-params", "--arch", "resnet18", "--channels", "1"});
  CHECK(r.code == 0);
  CHECK(r.out == "701808\n");
  CHECK(cli({"count-params", "--arch", "senet50", "--channels", "1"}).out == "1094640\n");
  CHECK(cli({"count-params", "--arch", "lcnn", "--channels", "1"}).out == "73504\n");
  CHECK(cli({"count-params", "--arch", "lcnn", "--channels", "3"}).out == "75104\n");
}

TEST_CASE("extract writes one three-channel feature file") {
  TempDir dir("cli");
  write_wav(dir / "u1.wav", mrspoof::testing::tone(300, 1.2));
  write_text(dir / "m.tsv", "u1\tu1.wav\tbonafide\n");
  auto r = cli({"extract", "--manifest", (dir / "m.tsv").string(), "--windows", "18,25,30",
                "--out", (dir / "f").string()});
  REQUIRE(r.code == 0);
  const auto cache = read_feature_cache(dir / "f/u1.mrfm");
  CHECK(cache.n_channels() == 3);
  CHECK(cache.n_freq() == 257);
  CHECK(cache.window_tags == std::vector<std::uint16_t>{18, 25, 30});
  CHECK(std::filesystem::exists(dir / "f/features.tsv"));
  CHECK(std::filesystem::exists(dir / "f/config.txt"));
}

TEST_CASE("evaluate prints EER 0.0000 on separated scores") {
  TempDir dir("cli");
  write_text(dir / "s.tsv", "a\t-0.1\nb\t-0.2\nc\t-5\nd\t-6\n");
  write_text(dir / "l.tsv", "a\tbonafide\nb\tbonafide\nc\tAA\nd\tCC\n");
  auto r = cli({"evaluate", "--scores", (dir / "s.tsv").string(), "--labels",
                (dir / "l.tsv").string()});
  CHECK(r.code == 0);
  CHECK(r.out.rfind("EER 0.0000", 0) == 0);
}

TEST_CASE("fuse with fixed and searched weights") {
  TempDir dir("cli");
  write_text(dir / "a.tsv", "a\t-1\nb\t-2\nc\t-3\n");
  write_text(dir / "b.tsv", "a\t-3\nb\t-2\nc\t-1\n");
  write_text(dir / "l.tsv", "a\tbonafide\nb\tAA\nc\tAB\n");
  auto r = cli({"fuse", "--scores", (dir / "a.tsv").string(), "--scores",
                (dir / "b.tsv").string(), "--weights", "0.5,0.5", "--out",
                (dir / "o").string()});
  REQUIRE(r.code == 0);
  const auto f = read_score_file(dir / "o/fused.tsv");
  CHECK(f.at("a") == -2.0);
  auto s = cli({"fuse", "--scores", (dir / "a.tsv").string(), "--scores",
                (dir / "b.tsv").string(), "--search", "--labels", (dir / "l.tsv").string(),
                "--out", (dir / "p").string()});
  REQUIRE(s.code == 0);
  // first grid point, in lexicographic order, that separates the classes
  CHECK(s.out.find("weights 0.55,0.45") != std::string::npos);
}

TEST_CASE("failures exit nonzero with one diagnostic line") {
  TempDir dir("cli");
  const std::vector<std::vector<std::string>> bad{
      {"frobnicate"},
      {"count-params", "--arch", "vgg"},
      {"count-params", "--arch", "lcnn", "--channels", "0"},
      {"count-params", "--bogus"},
      {"evaluate", "--scores", (dir / "missing.tsv").string(), "--labels",
       (dir / "missing2.tsv").string()},
      {"extract", "--manifest", (dir / "nothing.tsv").string(), "--out", (dir / "x").string()},
      {"train", "--config", (dir / "no.cfg").string()},
      {"score", "--checkpoint", (dir / "none.ckpt").string(), "--manifest",
       (dir / "m.tsv").string()},
      {"fuse", "--scores", (dir / "a.tsv").string()},
  };
  for (const auto& args : bad) {
    CAPTURE(args.front());
    const auto r = cli(args);
    CHECK(r.code != 0);
    CHECK_FALSE(r.err.empty());
    CHECK(std::count(r.err.begin(), r.err.end(), '\n') == 1);
  }
  const auto r = cli({"evaluate", "--scores", (dir / "missing.tsv").string(), "--labels",
                      (dir / "missing2.tsv").string()});
  CHECK(r.err.find("missing.tsv") != std::string::npos);
}

TEST_CASE("small end-to-end run is repeatable") {
  TempDir dir("e2e");
  const auto d = [&](const char* p) { return (dir / p).string(); };
  write_text(dir / "tiny.cfg",
             "fft_size = 128\nsegment_frames = 250\nsegment_overlap = 125\n"
             "batch_size = 4\nwarmup_steps = 5\nnormalize = true\nepochs = 1\n");
  REQUIRE(cli({"synth", "--utts-per-class", "4", "--seed", "2", "--out", d("c")}).code == 0);
  for (const char* part : {"train", "dev"}) {
    const auto r = cli({"extract", "--config", d("tiny.cfg"), "--windows", "4,6,8",
                        "--manifest", (dir / "c" / (std::string(part) + ".tsv")).string(),
                        "--out", (dir / "f" / part).string()});
    REQUIRE(r.code == 0);
  }
  std::vector<std::string> eers;
  for (const char* run : {"r1", "r2"}) {
    const auto t = cli({"train", "--config", d("tiny.cfg"), "--windows", "4,6,8", "--manifest",
                        d("f/train/features.tsv"), "--dev-manifest", d("f/dev/features.tsv"),
                        "--arch", "lcnn", "--seed", "7", "--out", (dir / run).string()});
    REQUIRE(t.code == 0);
    CHECK(std::filesystem::exists(dir / run / "best.ckpt"));
    CHECK(std::filesystem::exists(dir / run / "train.log"));
    const auto s = cli({"score", "--config", d("tiny.cfg"), "--checkpoint", (dir / run / "best.ckpt").string(),
                        "--manifest", d("f/dev/features.tsv"), "--out",
                        (dir / run / "sc").string()});
    REQUIRE(s.code == 0);
    const auto e = cli({"evaluate", "--scores", (dir / run / "sc/scores.tsv").string(),
                        "--manifest", d("f/dev/features.tsv")});
    REQUIRE(e.code == 0);
    eers.push_back(e.out);
  }
  CHECK(eers[0] == eers[1]);
  CHECK(read_bytes(dir / "r1/best.ckpt") == read_bytes(dir / "r2/best.ckpt"));
  CHECK(read_bytes(dir / "r1/sc/scores.tsv") == read_bytes(dir / "r2/sc/scores.tsv"));
}

}  // TEST_SUITE
