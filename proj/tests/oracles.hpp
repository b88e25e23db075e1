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


// Independent reference implementations shared by the unit tests and the
// acceptance checks. None of them calls the library code they verify.

#ifndef MRSPOOF_TESTS_ORACLES_HPP_
#define MRSPOOF_TESTS_ORACLES_HPP_

#include <algorithm>
#include <cstddef>
#include <limits>
#include <vector>

namespace mrspoof::oracle {

/// EER by exhaustive sweep: FAR/FRR below the minimum, at every midpoint
/// between distinct scores and above the maximum, counted directly, with
/// linear interpolation where FAR - FRR changes sign. Accept iff score >= t.
inline double brute_force_eer(const std::vector<double>& tar, const std::vector<double>& non) {
  std::vector<double> all(tar);
  all.insert(all.end(), non.begin(), non.end());
  std::sort(all.begin(), all.end());
  all.erase(std::unique(all.begin(), all.end()), all.end());
  std::vector<double> thresholds{-std::numeric_limits<double>::infinity()};
  for (std::size_t i = 1; i < all.size(); ++i) thresholds.push_back(0.5 * (all[i - 1] + all[i]));
  thresholds.push_back(std::numeric_limits<double>::infinity());
  double prev_far = 1, prev_frr = 0;
  for (double t : thresholds) {
    std::size_t fa = 0, fr = 0;
    for (double s : non) fa += s >= t;
    for (double s : tar) fr += s < t;
    const double far = static_cast<double>(fa) / static_cast<double>(non.size());
    const double frr = static_cast<double>(fr) / static_cast<double>(tar.size());
    if (far - frr <= 0) {
      const double d0 = prev_far - prev_frr, d1 = far - frr;
      if (d0 == d1) return far;
      const double a = d0 / (d0 - d1);
      return prev_frr + a * (frr - prev_frr);
    }
    prev_far = far;
    prev_frr = frr;
  }
  return prev_far;
}

// Hand parameter counts written from the layer tables.

inline std::size_t lcnn_params(std::size_t nc) {
  struct C { std::size_t in, out, k; };
  const C convs[] = {{nc, 32, 5}, {16, 32, 1}, {16, 48, 3}, {24, 48, 1}, {24, 64, 3},
                     {32, 64, 1}, {32, 32, 3}, {16, 32, 1}, {16, 32, 3}};
  std::size_t n = 0;
  for (const auto& c : convs) n += c.in * c.out * c.k * c.k + c.out;
  n += 256 * 128 + 128;  // fc6
  n += 64 * 10;          // fc7, no bias
  return n;
}

inline std::size_t resnet18_params(std::size_t nc) {
  std::size_t n = nc * 16 * 49 + 2 * 16;
  std::size_t in = 16;
  for (std::size_t c : {16u, 32u, 64u, 128u}) {
    for (int b = 0; b < 2; ++b) {
      n += in * c * 9 + 2 * c + c * c * 9 + 2 * c;
      if (in != c) n += in * c + 2 * c;
      in = c;
    }
  }
  return n + 128 * 10;
}

inline std::size_t senet50_params(std::size_t nc) {
  std::size_t n = nc * 16 * 49 + 2 * 16;
  std::size_t in = 16;
  const std::size_t widths[] = {16, 32, 64, 128};
  const std::size_t units[] = {3, 4, 6, 3};
  for (int s = 0; s < 4; ++s) {
    const std::size_t w = widths[s], out = 2 * w;
    for (std::size_t u = 0; u < units[s]; ++u) {
      n += in * w + 2 * w;        // 1x1 reduce + BN
      n += w * w * 9 + 2 * w;     // 3x3 + BN
      n += w * out + 2 * out;     // 1x1 expand + BN
      n += 2 * out * (out / 16);  // SE, no biases
      if (u == 0) n += in * out + 2 * out;
      in = out;
    }
  }
  return n + 256 * 10;
}

/// Segmentation by explicit tiling: frame indices of each segment.
struct Tiling {
  std::size_t extended = 0;
  std::vector<std::size_t> offsets;
  std::vector<std::vector<std::size_t>> frames;  // source frame per position
};

inline Tiling tile_frames(std::size_t n_frames, std::size_t m, std::size_t l) {
  Tiling t;
  t.extended = m;
  while (t.extended < n_frames) t.extended += m;
  std::vector<std::size_t> ext;
  while (ext.size() < t.extended) ext.push_back(ext.size() % n_frames);
  for (std::size_t off = 0; off + m <= t.extended; off += m - l) {
    t.offsets.push_back(off);
    t.frames.emplace_back(ext.begin() + static_cast<std::ptrdiff_t>(off),
                          ext.begin() + static_cast<std::ptrdiff_t>(off + m));
  }
  return t;
}

/// Number of points on the simplex grid with the given step.
inline std::size_t simplex_count(std::size_t n_systems, std::size_t steps_per_unit) {
  // C(steps + n - 1, n - 1)
  std::size_t num = 1, den = 1;
  for (std::size_t i = 1; i < n_systems; ++i) {
    num *= steps_per_unit + i;
    den *= i;
  }
  return num / den;
}

}  // namespace mrspoof::oracle

#endif  // MRSPOOF_TESTS_ORACLES_HPP_
