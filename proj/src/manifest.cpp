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

#include "mrspoof/manifest.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>
#include <utility>

#include "mrspoof/errors.hpp"

namespace mrspoof {

LabelSet::LabelSet()
    : names_{kBonafideLabel, "AA", "AB", "AC", "BA", "BB", "BC", "CA", "CB", "CC"} {}

LabelSet::LabelSet(std::vector<std::string> names) : names_(std::move(names)) {
  if (names_.size() < 2) throw ConfigError("label set needs bonafide and at least one spoof label");
  if (names_[0] != kBonafideLabel) {
    throw ConfigError("label set must start with '" + std::string(kBonafideLabel) + "', got '" +
                      names_[0] + "'");
  }
  std::set<std::string> seen;
  for (const auto& n : names_) {
    if (n.empty() || n.find_first_of("\t\n\r,") != std::string::npos) {
      throw ConfigError("invalid label name '" + n + "'");
    }
    if (!seen.insert(n).second) throw ConfigError("duplicate label '" + n + "'");
  }
}

int LabelSet::class_of(const std::string& label) const {
  const auto it = std::find(names_.begin(), names_.end(), label);
  if (it == names_.end()) throw ConfigError("unknown label '" + label + "'");
  return static_cast<int>(it - names_.begin());
}

bool LabelSet::contains(const std::string& label) const {
  return std::find(names_.begin(), names_.end(), label) != names_.end();
}

const std::string& LabelSet::name(int class_index) const {
  if (class_index < 0 || static_cast<std::size_t>(class_index) >= names_.size()) {
    throw ConfigError("class index " + std::to_string(class_index) + " out of range");
  }
  return names_[static_cast<std::size_t>(class_index)];
}

Partition parse_partition(const std::string& tag) {
  if (tag == "train") return Partition::kTrain;
  if (tag == "dev") return Partition::kDev;
  if (tag == "eval") return Partition::kEval;
  throw ConfigError("unknown partition '" + tag + "' (expected train, dev or eval)");
}

std::string to_string(Partition p) {
  switch (p) {
    case Partition::kTrain: return "train";
    case Partition::kDev: return "dev";
    case Partition::kEval: return "eval";
    case Partition::kUnspecified: break;
  }
  return "";
}

std::filesystem::path Manifest::resolve(const ManifestEntry& e) const {
  return e.path.is_absolute() ? e.path : base_dir / e.path;
}

LabelTable Manifest::labels() const {
  LabelTable t;
  for (const auto& e : entries) {
    if (!t.emplace(e.utt_id, e.label).second) {
      throw FormatError("utterance " + e.utt_id + " appears in more than one partition");
    }
  }
  return t;
}

Manifest parse_manifest(const std::filesystem::path& path, const LabelSet& labels) {
  std::ifstream is(path);
  if (!is) throw FormatError("cannot open manifest " + path.string());
  Manifest m;
  m.base_dir = path.parent_path();
  std::set<std::pair<Partition, std::string>> seen;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    const std::string where = path.string() + ":" + std::to_string(lineno) + ": ";
    std::vector<std::string> cols;
    std::size_t start = 0;
    while (true) {
      const auto tab = line.find('\t', start);
      cols.push_back(line.substr(start, tab - start));
      if (tab == std::string::npos) break;
      start = tab + 1;
    }
    if (cols.size() != 3 && cols.size() != 4) {
      throw FormatError(where + "expected 3 or 4 tab-separated fields, found " +
                        std::to_string(cols.size()));
    }
    if (cols[0].empty() || cols[1].empty()) throw FormatError(where + "empty utt_id or path");
    ManifestEntry e;
    e.utt_id = cols[0];
    e.path = cols[1];
    e.label = cols[2];
    if (!labels.contains(e.label)) throw FormatError(where + "unknown label '" + e.label + "'");
    if (cols.size() == 4) {
      try {
        e.partition = parse_partition(cols[3]);
      } catch (const ConfigError& err) {
        throw FormatError(where + err.what());
      }
    }
    if (!seen.emplace(e.partition, e.utt_id).second) {
      throw FormatError(where + "duplicate utterance id " + e.utt_id);
    }
    m.entries.push_back(std::move(e));
  }
  return m;
}

void write_manifest(const std::filesystem::path& path, std::span<const ManifestEntry> entries) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw FormatError("cannot open " + path.string() + " for writing");
  for (const auto& e : entries) {
    os << e.utt_id << '\t' << e.path.generic_string() << '\t' << e.label;
    if (e.partition != Partition::kUnspecified) os << '\t' << to_string(e.partition);
    os << '\n';
  }
  if (!os) throw FormatError("write failed: " + path.string());
}

}  // namespace mrspoof
