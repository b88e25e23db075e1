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

#include "mrspoof/synth.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <numbers>

#include "mrspoof/errors.hpp"
#include "mrspoof/wav.hpp"

namespace mrspoof {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

// Direct form I biquad, RBJ cookbook coefficients.
struct Biquad {
  double b0, b1, b2, a1, a2;

  void apply(std::vector<double>& x) const {
    double x1 = 0, x2 = 0, y1 = 0, y2 = 0;
    for (double& s : x) {
      const double y = b0 * s + b1 * x1 + b2 * x2 - a1 * y1 - a2 * y2;
      x2 = x1;
      x1 = s;
      y2 = y1;
      y1 = y;
      s = y;
    }
  }
};

Biquad highpass(double fc, double fs) {
  const double w = kTwoPi * fc / fs;
  const double alpha = std::sin(w) / std::numbers::sqrt2;  // Q = 1 / sqrt(2)
  const double c = std::cos(w);
  const double a0 = 1 + alpha;
  return {(1 + c) / 2 / a0, -(1 + c) / a0, (1 + c) / 2 / a0, -2 * c / a0, (1 - alpha) / a0};
}

Biquad peaking(double fc, double gain_db, double q, double fs) {
  const double a = std::pow(10.0, gain_db / 40.0);
  const double w = kTwoPi * fc / fs;
  const double alpha = std::sin(w) / (2 * q);
  const double c = std::cos(w);
  const double a0 = 1 + alpha / a;
  return {(1 + alpha * a) / a0, -2 * c / a0, (1 - alpha * a) / a0, -2 * c / a0,
          (1 - alpha / a) / a0};
}

// Schroeder reverberator: four parallel combs then two allpasses.
std::vector<double> room_tail(const std::vector<double>& x, double rt60, double fs) {
  static constexpr std::array<double, 4> kCombMs = {29.7, 37.1, 41.1, 43.7};
  static constexpr std::array<double, 2> kAllpassMs = {5.0, 1.7};
  std::vector<double> wet(x.size(), 0.0);
  for (double ms : kCombMs) {
    const auto d = static_cast<std::size_t>(std::lround(ms * 1e-3 * fs));
    const double g = std::pow(10.0, -3.0 * ms * 1e-3 / rt60);
    std::vector<double> y(x.size(), 0.0);
    for (std::size_t n = 0; n < x.size(); ++n) {
      y[n] = x[n] + (n >= d ? g * y[n - d] : 0.0);
      wet[n] += y[n] / kCombMs.size();
    }
  }
  for (double ms : kAllpassMs) {
    const auto d = static_cast<std::size_t>(std::lround(ms * 1e-3 * fs));
    const double g = 0.7;
    std::vector<double> y(wet.size(), 0.0);
    for (std::size_t n = 0; n < wet.size(); ++n) {
      const double xd = n >= d ? wet[n - d] : 0.0;
      const double yd = n >= d ? y[n - d] : 0.0;
      y[n] = -g * wet[n] + xd + g * yd;
    }
    wet.swap(y);
  }
  return wet;
}

double rms(const std::vector<double>& x) {
  double s = 0;
  for (double v : x) s += v * v;
  return std::sqrt(s / static_cast<double>(std::max<std::size_t>(x.size(), 1)));
}

std::vector<double> bonafide_source(std::size_t n, double fs, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::normal_distribution<double> gauss(0.0, 1.0);
  const double f0 = 90.0 + 150.0 * u(rng);
  const double vib_rate = 4.0 + 2.0 * u(rng);
  const double vib_depth = 0.02 + 0.02 * u(rng);
  const double drift = (u(rng) - 0.5) * 0.2;  // relative f0 change over the utterance
  const double syl_rate = 3.0 + 2.0 * u(rng);
  const double syl_phase = kTwoPi * u(rng);
  const std::array<double, 3> formant = {300 + 500 * u(rng), 900 + 1300 * u(rng),
                                         2400 + 800 * u(rng)};
  const std::array<double, 3> bw = {80 + 80 * u(rng), 100 + 100 * u(rng), 150 + 100 * u(rng)};
  const std::array<double, 3> fgain = {1.0, 0.5 + 0.3 * u(rng), 0.25 + 0.2 * u(rng)};

  auto envelope = [&](double f) {
    double e = 0.02;
    for (std::size_t i = 0; i < 3; ++i) {
      const double r = (f - formant[i]) / bw[i];
      e += fgain[i] / (1.0 + r * r);
    }
    return e;
  };

  const double duration = static_cast<double>(n) / fs;
  std::vector<double> x(n, 0.0);
  const auto n_harm = static_cast<std::size_t>(7000.0 / (f0 * (1 + std::abs(drift) + 0.05)));
  std::vector<double> phase(n_harm, 0.0);
  for (std::size_t k = 0; k < n_harm; ++k) phase[k] = kTwoPi * u(rng);
  for (std::size_t t = 0; t < n; ++t) {
    const double time = static_cast<double>(t) / fs;
    const double f = f0 * (1.0 + drift * time / duration) *
                     (1.0 + vib_depth * std::sin(kTwoPi * vib_rate * time));
    double s = 0;
    for (std::size_t k = 0; k < n_harm; ++k) {
      const double fk = f * static_cast<double>(k + 1);
      phase[k] += kTwoPi * fk / fs;
      if (phase[k] > kTwoPi) phase[k] -= kTwoPi;
      s += envelope(fk) / static_cast<double>(k + 1) * std::sin(phase[k]);
    }
    const double syl = 0.55 + 0.45 * std::sin(kTwoPi * syl_rate * time + syl_phase);
    x[t] = syl * s + 0.003 * gauss(rng);
  }
  // 20 ms fades.
  const auto fade = std::min<std::size_t>(n / 2, static_cast<std::size_t>(0.02 * fs));
  for (std::size_t t = 0; t < fade; ++t) {
    const double g = static_cast<double>(t) / static_cast<double>(fade);
    x[t] *= g;
    x[n - 1 - t] *= g;
  }
  return x;
}

}  // namespace

void SynthSpec::validate() const {
  if (utts_per_class < 4) throw ConfigError("utts_per_class must be at least 4");
  if (!(min_duration_s > 0) || !(max_duration_s >= min_duration_s)) {
    throw ConfigError("invalid synthetic duration range");
  }
  if (sample_rate < 8000) throw ConfigError("synthetic sample rate must be >= 8000 Hz");
  if (labels.size() != 10) {
    throw ConfigError("the synthetic corpus has 10 classes; label set has " +
                      std::to_string(labels.size()));
  }
}

ReplayRecipe replay_recipe(int class_index) {
  if (class_index < 1 || class_index > 9) {
    throw ConfigError("spoof recipe index must lie in 1..9, got " + std::to_string(class_index));
  }
  const int distance = (class_index - 1) / 3;
  const int device = (class_index - 1) % 3;
  static constexpr std::array<double, 3> kHighpass = {250.0, 400.0, 600.0};
  static constexpr std::array<double, 3> kGain = {10.0, 12.0, 14.0};
  static constexpr std::array<double, 3> kRt60 = {0.12, 0.3, 0.6};
  static constexpr std::array<double, 3> kDrr = {8.0, 2.0, -3.0};
  return {kHighpass[device],
          1000.0 + 450.0 * (class_index - 1),
          kGain[device],
          1.4,
          kRt60[distance],
          kDrr[distance]};
}

AudioBuffer synthesize_utterance(int class_index, double duration_s, int sample_rate,
                                 std::mt19937_64& rng) {
  const double fs = sample_rate;
  const auto n = static_cast<std::size_t>(std::lround(duration_s * fs));
  std::vector<double> x = bonafide_source(n, fs, rng);
  if (class_index != 0) {
    const ReplayRecipe r = replay_recipe(class_index);
    highpass(r.highpass_hz, fs).apply(x);
    peaking(r.emphasis_hz, r.emphasis_gain_db, r.emphasis_q, fs).apply(x);
    std::vector<double> wet = room_tail(x, r.rt60_s, fs);
    const double dry_rms = rms(x), wet_rms = rms(wet);
    const double g = wet_rms > 0 ? dry_rms / wet_rms * std::pow(10.0, -r.direct_to_reverb_db / 20)
                                 : 0.0;
    for (std::size_t i = 0; i < n; ++i) x[i] += g * wet[i];
  }
  std::uniform_real_distribution<double> level_db(-26.0, -16.0);
  const double target = std::pow(10.0, level_db(rng) / 20.0);
  const double cur = rms(x);
  const double g = cur > 0 ? target / cur : 0.0;
  AudioBuffer audio;
  audio.sample_rate = sample_rate;
  audio.samples.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    audio.samples[i] = static_cast<float>(std::clamp(x[i] * g, -0.999, 0.999));
  }
  return audio;
}

double mean_spectral_centroid(const AudioBuffer& audio, const SpectrogramConfig& config) {
  const FeatureMap map = log_power_spectrogram(audio, config);
  const std::size_t bins = map.n_freq(), frames = map.n_frames();
  double num = 0, den = 0;
  for (std::size_t t = 0; t < frames; ++t) {
    for (std::size_t k = 0; k < bins; ++k) {
      const double p = std::exp(static_cast<double>(map.values[k * frames + t]));
      num += p * static_cast<double>(k) * config.bin_bandwidth_hz();
      den += p;
    }
  }
  return den > 0 ? num / den : 0.0;
}

SynthManifests generate_synthetic_corpus(const SynthSpec& spec,
                                         const std::filesystem::path& out_dir) {
  spec.validate();
  std::error_code ec;
  std::filesystem::create_directories(out_dir / "wav", ec);
  if (ec) throw FormatError("cannot create " + (out_dir / "wav").string() + ": " + ec.message());

  const std::size_t n_train = spec.utts_per_class / 2;
  const std::size_t n_dev = spec.utts_per_class / 4;
  std::vector<ManifestEntry> train, dev, eval;
  for (int c = 0; c < static_cast<int>(spec.labels.size()); ++c) {
    const std::string& label = spec.labels.name(c);
    for (std::size_t i = 0; i < spec.utts_per_class; ++i) {
      std::seed_seq seq{static_cast<std::uint32_t>(spec.seed),
                        static_cast<std::uint32_t>(spec.seed >> 32),
                        static_cast<std::uint32_t>(c), static_cast<std::uint32_t>(i)};
      std::mt19937_64 rng(seq);
      std::uniform_real_distribution<double> dur(spec.min_duration_s, spec.max_duration_s);
      const double d = dur(rng);
      AudioBuffer audio = synthesize_utterance(c, d, spec.sample_rate, rng);
      char id[64];
      std::snprintf(id, sizeof id, "syn_%s_%03zu", label.c_str(), i);
      audio.utt_id = id;
      const std::filesystem::path rel = std::filesystem::path("wav") / (audio.utt_id + ".wav");
      write_wav(out_dir / rel, audio);
      ManifestEntry e{audio.utt_id, rel, label, Partition::kTrain};
      if (i < n_train) {
        train.push_back(e);
      } else if (i < n_train + n_dev) {
        e.partition = Partition::kDev;
        dev.push_back(e);
      } else {
        e.partition = Partition::kEval;
        eval.push_back(e);
      }
    }
  }
  SynthManifests out{out_dir / "train.tsv", out_dir / "dev.tsv", out_dir / "eval.tsv"};
  write_manifest(out.train, train);
  write_manifest(out.dev, dev);
  write_manifest(out.eval, eval);
  return out;
}

}  // namespace mrspoof
