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

// Deterministic toy replay corpus. Bonafide utterances are vibrato harmonic
// sources shaped by random formants; each spoof class replays a fresh
// bonafide-like source through its own device filter (highpass plus a
// band-emphasis peak) and a room tail whose length grows with the
// attacker-to-talker distance.

#ifndef MRSPOOF_SYNTH_HPP_
#define MRSPOOF_SYNTH_HPP_

#include <cstdint>
#include <filesystem>
#include <random>

#include "mrspoof/dsp.hpp"
#include "mrspoof/manifest.hpp"

namespace mrspoof {

struct SynthSpec {
  std::size_t utts_per_class = 20;
  double min_duration_s = 1.5;
  double max_duration_s = 4.5;
  std::uint64_t seed = 0;
  int sample_rate = 16000;
  LabelSet labels;

  void validate() const;
};

/// Replay channel of one spoof class.
struct ReplayRecipe {
  double highpass_hz;
  double emphasis_hz;
  double emphasis_gain_db;
  double emphasis_q;
  double rt60_s;
  double direct_to_reverb_db;
};

/// Recipe for spoof class `class_index` (1-based; 0 is bonafide).
ReplayRecipe replay_recipe(int class_index);

/// One utterance of the given class, drawn from `rng`.
AudioBuffer synthesize_utterance(int class_index, double duration_s, int sample_rate,
                                 std::mt19937_64& rng);

/// Power-weighted mean spectral centroid over frames, in Hz.
double mean_spectral_centroid(const AudioBuffer& audio, const SpectrogramConfig& config = {});

struct SynthManifests {
  std::filesystem::path train;
  std::filesystem::path dev;
  std::filesystem::path eval;
};

/// Writes out_dir/wav/<utt>.wav and train.tsv, dev.tsv, eval.tsv. Per class,
/// the first half of the utterances go to train, the next quarter to dev and
/// the rest to eval.
SynthManifests generate_synthetic_corpus(const SynthSpec& spec,
                                         const std::filesystem::path& out_dir);

}  // namespace mrspoof

#endif  // MRSPOOF_SYNTH_HPP_
