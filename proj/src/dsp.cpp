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

#include "mrspoof/dsp.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "mrspoof/errors.hpp"

namespace mrspoof {

void AudioBuffer::validate() const {
  if (samples.empty()) throw ConfigError("audio '" + utt_id + "' is empty");
  if (sample_rate <= 0) {
    throw ConfigError("audio '" + utt_id + "' has non-positive sample rate");
  }
  for (float s : samples) {
    if (!std::isfinite(s)) {
      throw NumericError("audio '" + utt_id + "' contains non-finite samples");
    }
  }
}

WindowFunction parse_window_function(const std::string& name) {
  if (name == "hamming") return WindowFunction::kHamming;
  if (name == "hann" || name == "hanning") return WindowFunction::kHann;
  if (name == "rectangular" || name == "rect") return WindowFunction::kRectangular;
  throw ConfigError("unknown window function '" + name +
                    "' (expected hamming, hann or rectangular)");
}

std::string to_string(WindowFunction w) {
  switch (w) {
    case WindowFunction::kHamming:
      return "hamming";
    case WindowFunction::kHann:
      return "hann";
    case WindowFunction::kRectangular:
      return "rectangular";
  }
  return "hamming";
}

std::vector<double> make_window(WindowFunction w, std::size_t n) {
  std::vector<double> out(n, 1.0);
  if (n < 2 || w == WindowFunction::kRectangular) return out;
  const double a = 2.0 * std::numbers::pi / static_cast<double>(n - 1);
  for (std::size_t i = 0; i < n; ++i) {
    const double c = std::cos(a * static_cast<double>(i));
    out[i] = w == WindowFunction::kHamming ? 0.54 - 0.46 * c : 0.5 - 0.5 * c;
  }
  return out;
}

std::size_t SpectrogramConfig::window_samples() const {
  return ms_to_samples(window_ms, sample_rate);
}

std::size_t SpectrogramConfig::hop_samples() const {
  return ms_to_samples(hop_ms, sample_rate);
}

void SpectrogramConfig::validate() const {
  if (sample_rate <= 0) throw ConfigError("sample_rate must be positive");
  if (fft_size < 2 || (fft_size & (fft_size - 1)) != 0) {
    throw ConfigError("fft_size " + std::to_string(fft_size) +
                      " is not a power of two");
  }
  if (!(hop_ms > 0)) throw ConfigError("hop_ms must be positive");
  if (!(log_floor > 0)) throw ConfigError("log_floor must be positive");
  if (window_samples() > fft_size) {
    std::ostringstream os;
    os << "window of " << window_ms << " ms (" << window_samples()
       << " samples) exceeds fft_size " << fft_size;
    throw ConfigError(os.str());
  }
  (void)hop_samples();
}

std::size_t ms_to_samples(double duration_ms, double sample_rate) {
  if (!(duration_ms > 0) || !(sample_rate > 0)) {
    throw ConfigError("duration and sample rate must both be positive");
  }
  const double n = std::round(duration_ms * sample_rate / 1000.0);
  if (n < 1) {
    std::ostringstream os;
    os << duration_ms << " ms at " << sample_rate << " Hz rounds to zero samples";
    throw ConfigError(os.str());
  }
  return static_cast<std::size_t>(n);
}

double compute_q_factor(double center_freq_hz, double bandwidth_hz) {
  if (!(bandwidth_hz > 0)) {
    throw DomainError("Q factor needs a positive bandwidth");
  }
  return center_freq_hz / bandwidth_hz;
}

double bin_q_factor(const SpectrogramConfig& config, std::size_t bin) {
  const double df = config.bin_bandwidth_hz();
  return compute_q_factor(static_cast<double>(bin) * df, df);
}

Fft::Fft(std::size_t n) : n_(n), bitrev_(n), twiddle_(n / 2) {
  if (n < 2 || (n & (n - 1)) != 0) {
    throw ConfigError("FFT size " + std::to_string(n) + " is not a power of two");
  }
  std::size_t bits = 0;
  while ((std::size_t{1} << bits) < n) ++bits;
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t r = 0;
    for (std::size_t b = 0; b < bits; ++b) r |= ((i >> b) & 1u) << (bits - 1 - b);
    bitrev_[i] = r;
  }
  for (std::size_t k = 0; k < n / 2; ++k) {
    const double ang = -2.0 * std::numbers::pi * static_cast<double>(k) /
                       static_cast<double>(n);
    twiddle_[k] = {std::cos(ang), std::sin(ang)};
  }
}

void Fft::forward(std::span<std::complex<double>> data) const {
  if (data.size() != n_) throw DimensionError("FFT input length mismatch");
  for (std::size_t i = 0; i < n_; ++i) {
    if (i < bitrev_[i]) std::swap(data[i], data[bitrev_[i]]);
  }
  for (std::size_t len = 2; len <= n_; len <<= 1) {
    const std::size_t half = len / 2;
    const std::size_t step = n_ / len;
    for (std::size_t start = 0; start < n_; start += len) {
      for (std::size_t k = 0; k < half; ++k) {
        const std::complex<double> t = twiddle_[k * step] * data[start + k + half];
        data[start + k + half] = data[start + k] - t;
        data[start + k] += t;
      }
    }
  }
}

void Fft::power_spectrum(std::span<const double> frame,
                         std::span<double> out) const {
  if (frame.size() > n_ || out.size() != n_ / 2 + 1) {
    throw DimensionError("power_spectrum: frame longer than FFT or bad output size");
  }
  std::vector<std::complex<double>> buf(n_);
  std::copy(frame.begin(), frame.end(), buf.begin());
  forward(buf);
  for (std::size_t k = 0; k <= n_ / 2; ++k) out[k] = std::norm(buf[k]);
}

std::size_t frame_count(std::size_t n_samples, const SpectrogramConfig& config) {
  const std::size_t win = config.window_samples();
  if (n_samples < win) return 0;
  return (n_samples - win) / config.hop_samples() + 1;
}

FeatureMap log_power_spectrogram(const AudioBuffer& audio,
                                 const SpectrogramConfig& config) {
  audio.validate();
  config.validate();
  if (audio.sample_rate != config.sample_rate) {
    throw ConfigError("audio '" + audio.utt_id + "' sample rate " +
                      std::to_string(audio.sample_rate) + " differs from configured " +
                      std::to_string(config.sample_rate));
  }
  const std::size_t win = config.window_samples();
  const std::size_t hop = config.hop_samples();
  const std::size_t frames = frame_count(audio.samples.size(), config);
  if (frames == 0) {
    throw ConfigError("audio '" + audio.utt_id + "' has " +
                      std::to_string(audio.samples.size()) +
                      " samples, shorter than one " + std::to_string(win) +
                      "-sample window; repeat-extend the raw audio first");
  }
  const std::size_t bins = config.freq_bins();
  const Fft fft(config.fft_size);
  const std::vector<double> taper = make_window(config.window_function, win);
  const double floor = config.log_floor;

  FeatureMap map;
  map.window_ms = config.window_ms;
  map.utt_id = audio.utt_id;
  map.values = Tensor<float>({bins, frames});
  std::vector<double> frame(win), power(bins);
  for (std::size_t t = 0; t < frames; ++t) {
    const float* src = audio.samples.data() + t * hop;
    for (std::size_t i = 0; i < win; ++i) frame[i] = src[i] * taper[i];
    fft.power_spectrum(frame, power);
    for (std::size_t k = 0; k < bins; ++k) {
      map.values[k * frames + t] = static_cast<float>(std::log(power[k] + floor));
    }
  }
  if (config.normalize) {
    double sum = 0, sq = 0;
    for (float v : map.values.data()) {
      sum += v;
      sq += static_cast<double>(v) * v;
    }
    const double n = static_cast<double>(map.values.numel());
    const double mean = sum / n;
    const double sd = std::sqrt(std::max(sq / n - mean * mean, 1e-12));
    for (float& v : map.values.storage()) v = static_cast<float>((v - mean) / sd);
  }
  return map;
}

AudioBuffer repeat_extend(const AudioBuffer& audio, std::size_t min_samples) {
  audio.validate();
  AudioBuffer out = audio;
  const std::size_t n = audio.samples.size();
  out.samples.reserve(std::max(min_samples, n));
  for (std::size_t i = n; i < min_samples; ++i) {
    out.samples.push_back(audio.samples[i % n]);
  }
  return out;
}

std::vector<FeatureMap> extract_multi_resolution(
    const AudioBuffer& audio, const SpectrogramConfig& base,
    std::span<const double> window_lengths_ms) {
  if (window_lengths_ms.empty()) throw ConfigError("no window lengths given");
  std::vector<FeatureMap> maps;
  maps.reserve(window_lengths_ms.size());
  std::size_t min_frames = static_cast<std::size_t>(-1);
  for (double ms : window_lengths_ms) {
    SpectrogramConfig cfg = base;
    cfg.window_ms = ms;
    maps.push_back(log_power_spectrogram(audio, cfg));
    min_frames = std::min(min_frames, maps.back().n_frames());
  }
  for (auto& m : maps) {
    if (m.n_frames() == min_frames) continue;
    const std::size_t bins = m.n_freq(), frames = m.n_frames();
    Tensor<float> cut({bins, min_frames});
    for (std::size_t k = 0; k < bins; ++k) {
      std::copy_n(m.values.ptr() + k * frames, min_frames, cut.ptr() + k * min_frames);
    }
    m.values = std::move(cut);
  }
  return maps;
}

SegmentSet unify_feature_map(const FeatureMap& map, std::size_t frames_per_segment,
                             std::size_t overlap) {
  const std::size_t m = frames_per_segment;
  if (m == 0) throw ConfigError("segment length M must be positive");
  if (overlap >= m) {
    throw ConfigError("segment overlap L = " + std::to_string(overlap) +
                      " must be smaller than M = " + std::to_string(m));
  }
  const std::size_t bins = map.n_freq();
  const std::size_t frames = map.n_frames();
  const std::size_t extended = ((frames + m - 1) / m) * m;
  const std::size_t shift = m - overlap;

  SegmentSet set;
  set.frames_per_segment = m;
  set.overlap = overlap;
  set.n_original_frames = frames;
  set.extended_frames = extended;
  set.utt_id = map.utt_id;
  for (std::size_t off = 0; off + m <= extended; off += shift) {
    Tensor<float> seg({bins, m});
    for (std::size_t k = 0; k < bins; ++k) {
      const float* row = map.values.ptr() + k * frames;
      float* dst = seg.ptr() + k * m;
      for (std::size_t t = 0; t < m; ++t) dst[t] = row[(off + t) % frames];
    }
    set.segments.push_back(std::move(seg));
    set.offsets.push_back(off);
  }
  return set;
}

MultiResStack stack_multi_resolution(std::span<const Tensor<float>> maps,
                                     std::span<const double> window_lengths) {
  if (maps.empty()) throw DimensionError("stack_multi_resolution: no maps");
  if (maps.size() != window_lengths.size()) {
    throw DimensionError("stack_multi_resolution: " + std::to_string(maps.size()) +
                         " maps but " + std::to_string(window_lengths.size()) +
                         " window lengths");
  }
  const Shape& ref = maps[0].shape();
  if (ref.size() != 2) {
    throw DimensionError("stack_multi_resolution: maps must be F x M, got " +
                         shape_to_string(ref));
  }
  for (std::size_t i = 1; i < maps.size(); ++i) {
    if (maps[i].shape() != ref) {
      std::ostringstream os;
      os << "stack_multi_resolution: map for " << window_lengths[i] << " ms has shape "
         << shape_to_string(maps[i].shape()) << " but map for " << window_lengths[0]
         << " ms has shape " << shape_to_string(ref);
      throw DimensionError(os.str());
    }
  }
  MultiResStack stack;
  stack.window_lengths.assign(window_lengths.begin(), window_lengths.end());
  stack.channels = Tensor<float>({maps.size(), ref[0], ref[1]});
  const std::size_t plane = ref[0] * ref[1];
  for (std::size_t i = 0; i < maps.size(); ++i) {
    std::copy_n(maps[i].ptr(), plane, stack.channels.ptr() + i * plane);
  }
  return stack;
}

double mainlobe_width_bins(std::span<const float> log_power_column,
                           std::size_t peak_bin, double db) {
  if (peak_bin >= log_power_column.size()) {
    throw DimensionError("mainlobe_width_bins: peak bin out of range");
  }
  // natural-log power to dB
  const double to_db = 10.0 / std::log(10.0);
  const double peak = log_power_column[peak_bin] * to_db;
  const double level = peak - db;
  const auto size = static_cast<std::ptrdiff_t>(log_power_column.size());
  const auto center = static_cast<std::ptrdiff_t>(peak_bin);
  auto half_width = [&](std::ptrdiff_t dir) {
    double prev = peak;
    for (std::ptrdiff_t d = 1;; ++d) {
      const std::ptrdiff_t k = center + dir * d;
      if (k < 0 || k >= size) return static_cast<double>(d - 1);
      const double v = log_power_column[static_cast<std::size_t>(k)] * to_db;
      if (v < level) return static_cast<double>(d - 1) + (prev - level) / (prev - v);
      prev = v;
    }
  };
  return half_width(-1) + half_width(+1);
}

std::vector<double> frame_energy_db(const FeatureMap& map) {
  const std::size_t bins = map.n_freq(), frames = map.n_frames();
  std::vector<double> out(frames, 0.0);
  for (std::size_t k = 0; k < bins; ++k) {
    for (std::size_t t = 0; t < frames; ++t) {
      out[t] += std::exp(static_cast<double>(map.values[k * frames + t]));
    }
  }
  for (double& e : out) e = 10.0 * std::log10(e);
  return out;
}

std::size_t frames_near_peak(const FeatureMap& map, double db) {
  const std::vector<double> e = frame_energy_db(map);
  const double peak = *std::max_element(e.begin(), e.end());
  return static_cast<std::size_t>(
      std::count_if(e.begin(), e.end(), [&](double v) { return v >= peak - db; }));
}

}  // namespace mrspoof
