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

#include "mrspoof/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "mrspoof/ops.hpp"

namespace mrspoof {

namespace {

double eval_scalar(const DifferentiableOp& op,
                   const std::vector<Tensor<double>>& inputs,
                   const Tensor<double>& probe) {
  NoGradGuard guard;
  std::vector<Variable<double>> vars;
  vars.reserve(inputs.size());
  for (const auto& t : inputs) vars.emplace_back(t, false);
  const Variable<double> out = op(vars);
  double s = 0;
  for (std::size_t i = 0; i < probe.numel(); ++i) s += out.value()[i] * probe[i];
  return s;
}

}  // namespace

GradCheckReport finite_difference_check(const DifferentiableOp& op,
                                        const std::vector<Tensor<double>>& inputs,
                                        double step, std::uint64_t probe_seed) {
  std::vector<Variable<double>> vars;
  vars.reserve(inputs.size());
  for (const auto& t : inputs) vars.emplace_back(t, true);
  const Variable<double> out = op(vars);

  std::mt19937_64 rng(probe_seed);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  Tensor<double> probe(out.shape());
  for (double& v : probe.storage()) v = dist(rng);

  ops::weighted_sum(out, probe).backward();

  GradCheckReport report;
  std::vector<Tensor<double>> work = inputs;
  const double f0 = eval_scalar(op, work, probe);
  for (std::size_t i = 0; i < work.size(); ++i) {
    const bool has = vars[i].has_grad();
    for (std::size_t j = 0; j < work[i].numel(); ++j) {
      const double orig = work[i][j];
      work[i][j] = orig + step;
      const double fp = eval_scalar(op, work, probe);
      work[i][j] = orig - step;
      const double fm = eval_scalar(op, work, probe);
      work[i][j] = orig;

      const double fwd = (fp - f0) / step;
      const double bwd = (f0 - fm) / step;
      if (std::abs(fwd - bwd) >
          1e-2 * std::max({1.0, std::abs(fwd), std::abs(bwd)})) {
        ++report.n_excluded;
        continue;
      }
      const double numeric = (fp - fm) / (2 * step);
      const double analytic = has ? vars[i].grad()[j] : 0.0;
      const double denom =
          std::max({std::abs(analytic), std::abs(numeric), 1e-3});
      const double rel = std::abs(analytic - numeric) / denom;
      ++report.n_checked;
      if (rel >= report.max_rel_error) {
        report.max_rel_error = rel;
        report.worst_input = i;
        report.worst_index = j;
        report.worst_analytic = analytic;
        report.worst_numeric = numeric;
      }
    }
  }
  return report;
}

}  // namespace mrspoof
