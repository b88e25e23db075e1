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

// Command-line entry point shared by the mrspoof executable and the tests.
//
//   synth         generate the synthetic replay corpus
//   extract       WAV manifest -> one MRFM0001 file per utterance
//   train         feature manifests -> checkpoints, training log
//   score         checkpoint + feature manifest -> score TSV
//   evaluate      score TSV + labels -> EER
//   fuse          weighted sum of score TSVs, fixed or searched weights
//   count-params  parameter total of an architecture

#ifndef MRSPOOF_PIPELINE_HPP_
#define MRSPOOF_PIPELINE_HPP_

#include <iosfwd>
#include <string>
#include <vector>

namespace mrspoof {

inline constexpr const char* kVersion = "0.1.0";

/// Runs one subcommand. Returns 0 on success; on failure writes a single
/// diagnostic line to `err` and returns nonzero. `args` excludes the program
/// name.
int run_pipeline(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int run_pipeline(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace mrspoof

#endif  // MRSPOOF_PIPELINE_HPP_
