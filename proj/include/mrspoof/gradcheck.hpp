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

#ifndef MRSPOOF_GRADCHECK_HPP_
#define MRSPOOF_GRADCHECK_HPP_

#include <cstdint>
#include <functional>
#include <vector>

#include "mrspoof/autograd.hpp"

namespace mrspoof {

struct GradCheckReport {
  double max_rel_error = 0.0;
  std::size_t worst_input = 0;
  std::size_t worst_index = 0;
  double worst_analytic = 0.0;
  double worst_numeric = 0.0;
  std::size_t n_checked = 0;
  // Elements where the one-sided slopes disagree (a kink of max/relu).
  std::size_t n_excluded = 0;
};

using DifferentiableOp =
    std::function<Variable<double>(const std::vector<Variable<double>>&)>;

/// Compares the analytic backward of `op` against central differences.
///
/// The op output is reduced to a scalar with a fixed random probe so the whole
/// Jacobian participates. Relative error per element is
/// |a - n| / max(|a|, |n|, 1e-3). Elements sitting on a non-differentiable
/// point are detected from the mismatch of the forward and backward one-sided
/// slopes and are excluded from the maximum.
GradCheckReport finite_difference_check(const DifferentiableOp& op,
                                        const std::vector<Tensor<double>>& inputs,
                                        double step = 1e-5,
                                        std::uint64_t probe_seed = 0x5eed);

}  // namespace mrspoof

#endif  // MRSPOOF_GRADCHECK_HPP_
