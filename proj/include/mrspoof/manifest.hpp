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

// Dataset manifests: "utt_id<TAB>path<TAB>label[<TAB>partition]" per line.
// Relative paths resolve against the manifest's directory.

#ifndef MRSPOOF_MANIFEST_HPP_
#define MRSPOOF_MANIFEST_HPP_

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "mrspoof/evaluation.hpp"

namespace mrspoof {

/// Ordered class labels; index 0 is always "bonafide".
class LabelSet {
 public:
  /// bonafide plus the nine replay configurations AA..CC.
  LabelSet();
  explicit LabelSet(std::vector<std::string> names);

  int class_of(const std::string& label) const;  // ConfigError when unknown
  bool contains(const std::string& label) const;
  const std::string& name(int class_index) const;
  std::size_t size() const { return names_.size(); }
  const std::vector<std::string>& names() const { return names_; }

 private:
  std::vector<std::string> names_;
};

enum class Partition { kUnspecified, kTrain, kDev, kEval };

Partition parse_partition(const std::string& tag);
std::string to_string(Partition p);

struct ManifestEntry {
  std::string utt_id;
  std::filesystem::path path;  // as written in the file
  std::string label;
  Partition partition = Partition::kUnspecified;

  friend bool operator==(const ManifestEntry&, const ManifestEntry&) = default;
};

struct Manifest {
  std::filesystem::path base_dir;  // directory relative paths resolve against
  std::vector<ManifestEntry> entries;

  std::filesystem::path resolve(const ManifestEntry& e) const;
  LabelTable labels() const;
};

/// Duplicate (partition, utt_id) pairs and unknown labels raise FormatError
/// naming the line. File existence is not checked here.
Manifest parse_manifest(const std::filesystem::path& path, const LabelSet& labels = {});
void write_manifest(const std::filesystem::path& path, std::span<const ManifestEntry> entries);

}  // namespace mrspoof

#endif  // MRSPOOF_MANIFEST_HPP_
