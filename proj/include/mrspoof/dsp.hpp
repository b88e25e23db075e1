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

// Short-time Fourier features: single-window log-power spectrograms, the
// fixed-length segmentation used to feed utterances of any duration to a CNN,
// and stacking of several window lengths into one multi-channel input.

#ifndef MRSPOOF_DSP_HPP_
#define MRSPOOF_DSP_HPP_

#include <complex>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "mrspoof/tensor.hpp"

namespace mrspoof {

struct AudioBuffer {
  std::vector<float> samples;
  int sample_rate = 16000;
  std::string utt_id;

  /// Non-empty, positive rate, finite samples.
  void validate() const;
  double duration_s() const {
    return static_cast<double>(samples.size()) / sample_rate;
  }
};

enum class WindowFunction { kHamming, kHann, kRectangular };

WindowFunction parse_window_function(const std::string& name);
std::string to_string(WindowFunction w);

/// Taper coefficients of length n.
std::vector<double> make_window(WindowFunction w, std::size_t n);

struct SpectrogramConfig {
  double window_ms = 25.0;
  double hop_ms = 10.0;
  std::size_t fft_size = 512;
  int sample_rate = 16000;
  double log_floor = 1e-10;
  WindowFunction window_function = WindowFunction::kHamming;
  // Per-map mean/variance normalisation. Off unless requested.
  bool normalize = false;

  std::size_t freq_bins() const { return fft_size / 2 + 1; }
  std::size_t window_samples() const;
  std::size_t hop_samples() const;
  /// Analysis bandwidth of one bin, sample_rate / fft_size.
  double bin_bandwidth_hz() const {
    return static_cast<double>(sample_rate) / static_cast<double>(fft_size);
  }
  void validate() const;
};

/// Log-power spectrogram, freq_bins x n_frames.
struct FeatureMap {
  Tensor<float> values;
  double window_ms = 0.0;
  std::string utt_id;

  std::size_t n_freq() const { return values.dim(0); }
  std::size_t n_frames() const { return values.dim(1); }
};

/// Fixed-length, overlapping segments cut from one cyclically extended map.
struct SegmentSet {
  std::vector<Tensor<float>> segments;  // each freq_bins x M
  std::vector<std::size_t> offsets;
  std::size_t frames_per_segment = 0;  // M
  std::size_t overlap = 0;             // L
  std::size_t n_original_frames = 0;
  std::size_t extended_frames = 0;
  std::string utt_id;
};

/// n_c x freq_bins x M network input.
struct MultiResStack {
  Tensor<float> channels;
  std::vector<double> window_lengths;

  std::size_t n_channels() const { return channels.dim(0); }
};

/// round(duration_ms * sample_rate / 1000); ConfigError when that is zero.
std::size_t ms_to_samples(double duration_ms, double sample_rate);

/// Q = center frequency / bandwidth.
double compute_q_factor(double center_freq_hz, double bandwidth_hz);

/// Q of STFT bin k under `config`: grows linearly with k since the
/// bandwidth is the same for every bin.
double bin_q_factor(const SpectrogramConfig& config, std::size_t bin);

/// Radix-2 complex FFT of a fixed power-of-two size.
class Fft {
 public:
  explicit Fft(std::size_t n);
  std::size_t size() const { return n_; }
  /// In-place forward transform.
  void forward(std::span<std::complex<double>> data) const;
  /// |X_k|^2 for k = 0..n/2 of a real frame (zero-padded to n).
  void power_spectrum(std::span<const double> frame, std::span<double> out) const;

 private:
  std::size_t n_;
  std::vector<std::size_t> bitrev_;
  std::vector<std::complex<double>> twiddle_;
};

/// Number of frames log_power_spectrogram produces for `n_samples`.
std::size_t frame_count(std::size_t n_samples, const SpectrogramConfig& config);

/// Frames every hop, tapered, zero-padded to fft_size; ln(|X|^2 + floor).
/// Throws ConfigError when the audio is shorter than one window; callers
/// extend raw audio with repeat_extend first.
FeatureMap log_power_spectrogram(const AudioBuffer& audio,
                                 const SpectrogramConfig& config);

/// Repeats the samples cyclically until at least `min_samples` are present.
AudioBuffer repeat_extend(const AudioBuffer& audio, std::size_t min_samples);

/// One map per window length over a shared hop, every map truncated to the
/// smallest frame count so all of them stack.
std::vector<FeatureMap> extract_multi_resolution(
    const AudioBuffer& audio, const SpectrogramConfig& base,
    std::span<const double> window_lengths_ms);

/// Tiles the frames cyclically up to the smallest multiple of M that is at
/// least n_frames and cuts M-frame segments at offsets 0, M-L, 2(M-L), ...
SegmentSet unify_feature_map(const FeatureMap& map, std::size_t frames_per_segment,
                             std::size_t overlap);

/// Stacks same-shaped F x M matrices; channel i comes from window_lengths[i].
MultiResStack stack_multi_resolution(std::span<const Tensor<float>> maps,
                                     std::span<const double> window_lengths);

// Resolution probes used to check the time-frequency trade-off.

/// Width in bins of the region around `peak_bin` that lies within `db` of
/// the peak, with linear interpolation of the dB values between bins.
double mainlobe_width_bins(std::span<const float> log_power_column,
                           std::size_t peak_bin, double db = 3.0);

/// Per-frame total power sum_k exp(value) in dB.
std::vector<double> frame_energy_db(const FeatureMap& map);

/// Frames whose total power is within `db` of the loudest frame.
std::size_t frames_near_peak(const FeatureMap& map, double db = 3.0);

}  // namespace mrspoof

#endif  // MRSPOOF_DSP_HPP_
