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

#include "mrspoof/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <iomanip>
#include <limits>
#include <sstream>

#include "mrspoof/ops.hpp"

namespace mrspoof {

double utterance_score(const Tensor<float>& segment_logits) {
  if (segment_logits.rank() != 2 || segment_logits.dim(0) == 0) {
    throw DimensionError("utterance_score needs S x K logits with S >= 1");
  }
  const Tensor<double> logp = log_softmax(segment_logits.cast<double>());
  const std::size_t s = logp.dim(0), k = logp.dim(1);
  double sum = 0;
  for (std::size_t r = 0; r < s; ++r) sum += logp[r * k + kBonafideClass];
  return sum / static_cast<double>(s);
}

std::vector<OperatingPoint> operating_points(std::span<const double> target,
                                             std::span<const double> nontarget) {
  if (target.empty() || nontarget.empty()) {
    throw DomainError("EER needs at least one bonafide and one spoof score (got " +
                      std::to_string(target.size()) + " bonafide, " +
                      std::to_string(nontarget.size()) + " spoof)");
  }
  std::vector<double> tgt(target.begin(), target.end());
  std::vector<double> non(nontarget.begin(), nontarget.end());
  std::sort(tgt.begin(), tgt.end());
  std::sort(non.begin(), non.end());
  std::vector<double> thresholds;
  thresholds.reserve(tgt.size() + non.size());
  std::merge(tgt.begin(), tgt.end(), non.begin(), non.end(),
             std::back_inserter(thresholds));
  thresholds.erase(std::unique(thresholds.begin(), thresholds.end()), thresholds.end());

  const double nt = static_cast<double>(tgt.size());
  const double nn = static_cast<double>(non.size());
  std::vector<OperatingPoint> points;
  points.reserve(thresholds.size() + 1);
  std::size_t rejected_tgt = 0;  // target scores < t
  std::size_t rejected_non = 0;  // nontarget scores < t
  for (double t : thresholds) {
    while (rejected_tgt < tgt.size() && tgt[rejected_tgt] < t) ++rejected_tgt;
    while (rejected_non < non.size() && non[rejected_non] < t) ++rejected_non;
    points.push_back({t, (nn - static_cast<double>(rejected_non)) / nn,
                      static_cast<double>(rejected_tgt) / nt});
  }
  points.push_back({std::numeric_limits<double>::infinity(), 0.0, 1.0});
  return points;
}

EERResult compute_eer(std::span<const double> target, std::span<const double> nontarget) {
  const std::vector<OperatingPoint> pts = operating_points(target, nontarget);
  EERResult r;
  r.n_target = target.size();
  r.n_nontarget = nontarget.size();
  // FAR - FRR is non-increasing along the sweep and starts at 1.
  std::size_t j = 0;
  while (pts[j].far - pts[j].frr > 0) ++j;
  const double dj = pts[j].far - pts[j].frr;
  if (dj == 0 || j == 0) {
    r.eer = pts[j].far;
    r.threshold = pts[j].threshold;
  } else {
    const OperatingPoint& a = pts[j - 1];
    const OperatingPoint& b = pts[j];
    const double da = a.far - a.frr;
    const double alpha = da / (da - dj);
    r.eer = a.far + alpha * (b.far - a.far);
    r.threshold = std::isfinite(b.threshold) ? b.threshold : a.threshold;
  }
  return r;
}

void split_by_label(const ScoreTable& scores, const LabelTable& labels,
                    std::vector<double>& target, std::vector<double>& nontarget) {
  target.clear();
  nontarget.clear();
  for (const auto& [utt, score] : scores) {
    const auto it = labels.find(utt);
    if (it == labels.end()) throw FormatError("no label for scored utterance " + utt);
    (it->second == kBonafideLabel ? target : nontarget).push_back(score);
  }
}

EERResult compute_eer(const ScoreTable& scores, const LabelTable& labels) {
  std::vector<double> target, nontarget;
  split_by_label(scores, labels, target, nontarget);
  return compute_eer(target, nontarget);
}

ScoreTable fuse_scores(std::span<const ScoreTable> tables, std::span<const double> weights) {
  if (tables.empty()) throw ConfigError("fuse_scores: no score tables");
  if (weights.size() != tables.size()) {
    throw ConfigError("fuse_scores: " + std::to_string(weights.size()) + " weights for " +
                      std::to_string(tables.size()) + " systems");
  }
  double sum = 0;
  for (double w : weights) {
    if (!(w >= 0)) throw ConfigError("fuse_scores: weights must be non-negative");
    sum += w;
  }
  if (std::abs(sum - 1.0) > 1e-9) {
    throw ConfigError("fuse_scores: weights must sum to 1");
  }
  for (std::size_t i = 1; i < tables.size(); ++i) {
    auto key_less = [](const auto& a, const auto& b) { return a.first < b.first; };
    std::vector<std::pair<std::string, double>> only;
    std::set_symmetric_difference(tables[0].begin(), tables[0].end(), tables[i].begin(),
                                  tables[i].end(), std::back_inserter(only), key_less);
    if (!only.empty()) {
      std::string list;
      for (std::size_t k = 0; k < only.size() && k < 10; ++k) {
        list += (k ? ", " : "") + only[k].first;
      }
      if (only.size() > 10) list += ", ...";
      throw ConfigError("fuse_scores: systems 0 and " + std::to_string(i) +
                        " differ in " + std::to_string(only.size()) +
                        " utterance ids: " + list);
    }
  }
  ScoreTable out;
  for (const auto& [utt, _] : tables[0]) {
    double s = 0.0;
    for (std::size_t i = 0; i < tables.size(); ++i) s += weights[i] * tables[i].at(utt);
    out.emplace(utt, s);
  }
  return out;
}

std::vector<std::vector<double>> simplex_grid(std::size_t n_systems, double step) {
  if (n_systems == 0) throw ConfigError("simplex_grid: no systems");
  if (!(step > 0) || step > 1) throw ConfigError("grid step must lie in (0, 1]");
  const double inv = 1.0 / step;
  const double k_real = std::round(inv);
  if (std::abs(inv - k_real) > 1e-9 * inv) {
    std::ostringstream os;
    os << "grid step " << step << " does not divide 1";
    throw ConfigError(os.str());
  }
  const auto k = static_cast<int>(k_real);
  std::vector<std::vector<double>> grid;
  std::vector<int> counts(n_systems, 0);
  // Recursive enumeration with the first coordinate varying slowest.
  std::function<void(std::size_t, int)> rec = [&](std::size_t axis, int remaining) {
    if (axis + 1 == n_systems) {
      counts[axis] = remaining;
      std::vector<double> w(n_systems);
      for (std::size_t i = 0; i < n_systems; ++i) {
        w[i] = static_cast<double>(counts[i]) / k_real;
      }
      grid.push_back(std::move(w));
      return;
    }
    for (int c = 0; c <= remaining; ++c) {
      counts[axis] = c;
      rec(axis + 1, remaining - c);
    }
  };
  rec(0, k);
  return grid;
}

FusionSearchResult search_fusion_weights(std::span<const ScoreTable> tables,
                                         const LabelTable& dev_labels, double grid_step) {
  if (tables.size() < 2) throw ConfigError("fusion search needs at least two systems");
  const auto grid = simplex_grid(tables.size(), grid_step);
  FusionSearchResult best;
  bool have = false;
  for (const auto& w : grid) {
    const double eer = compute_eer(fuse_scores(tables, w), dev_labels).eer;
    ++best.n_evaluated;
    if (!have || eer < best.dev_eer) {
      best.weights = w;
      best.dev_eer = eer;
      have = true;
    }
  }
  return best;
}

namespace {

std::vector<std::pair<std::string, std::string>> read_two_column(
    const std::filesystem::path& path, const char* what) {
  std::ifstream is(path);
  if (!is) throw FormatError(std::string("cannot open ") + what + " file " + path.string());
  std::vector<std::pair<std::string, std::string>> rows;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos || tab == 0 || line.find('\t', tab + 1) != std::string::npos) {
      throw FormatError(path.string() + ":" + std::to_string(lineno) +
                        ": expected 'utt_id<TAB>" + what + "'");
    }
    rows.emplace_back(line.substr(0, tab), line.substr(tab + 1));
  }
  return rows;
}

}  // namespace

ScoreTable read_score_file(const std::filesystem::path& path) {
  ScoreTable table;
  for (auto& [utt, text] : read_two_column(path, "score")) {
    double v = 0;
    std::istringstream is(text);
    is.imbue(std::locale::classic());
    if (!(is >> v) || !is.eof() || !std::isfinite(v)) {
      throw FormatError(path.string() + ": score '" + text + "' for " + utt +
                        " is not a finite number");
    }
    if (!table.emplace(utt, v).second) {
      throw FormatError(path.string() + ": duplicate utterance id " + utt);
    }
  }
  return table;
}

void write_score_file(const std::filesystem::path& path, const ScoreTable& scores) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw FormatError("cannot open " + path.string() + " for writing");
  os.imbue(std::locale::classic());
  os << std::setprecision(std::numeric_limits<double>::max_digits10);
  for (const auto& [utt, s] : scores) os << utt << '\t' << s << '\n';
}

LabelTable read_label_file(const std::filesystem::path& path) {
  LabelTable table;
  for (auto& [utt, label] : read_two_column(path, "label")) {
    if (!table.emplace(utt, label).second) {
      throw FormatError(path.string() + ": duplicate utterance id " + utt);
    }
  }
  return table;
}

void write_label_file(const std::filesystem::path& path, const LabelTable& labels) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw FormatError("cannot open " + path.string() + " for writing");
  for (const auto& [utt, l] : labels) os << utt << '\t' << l << '\n';
}

void write_operating_points(const std::filesystem::path& path,
                            std::span<const OperatingPoint> points) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw FormatError("cannot open " + path.string() + " for writing");
  os.imbue(std::locale::classic());
  os << std::setprecision(std::numeric_limits<double>::max_digits10);
  for (const auto& p : points) os << p.threshold << '\t' << p.far << '\t' << p.frr << '\n';
}

}  // namespace mrspoof
