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

#include "mrspoof/run_config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>

#include "mrspoof/errors.hpp"

namespace mrspoof {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

template <typename U>
U parse_unsigned(const std::string& key, const std::string& v) {
  U out{};
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size()) {
    throw ConfigError("config key '" + key + "': expected a non-negative integer, got '" + v + "'");
  }
  return out;
}

double parse_real(const std::string& key, const std::string& v) {
  double out = 0;
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size() || !std::isfinite(out)) {
    throw ConfigError("config key '" + key + "': expected a finite number, got '" + v + "'");
  }
  return out;
}

bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw ConfigError("config key '" + key + "': expected true or false, got '" + v + "'");
}

std::vector<std::string> split_csv(const std::string& csv) {
  std::vector<std::string> out;
  std::stringstream ss(csv);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(trim(item));
  return out;
}

std::string real(double x) {
  std::ostringstream os;
  os.imbue(std::locale::classic());
  os << std::setprecision(std::numeric_limits<double>::max_digits10) << x;
  return os.str();
}

const std::vector<std::string> kKeys = {
    "sample_rate",     "fft_size",         "hop_ms",         "log_floor",
    "window_function", "normalize",        "windows",        "segment_frames",
    "segment_overlap", "arch",             "n_input_channels", "n_classes",
    "input_height",    "input_width",      "batch_size",     "beta1",
    "beta2",           "weight_decay",     "warmup_steps",   "peak_lr",
    "adam_epsilon",    "epochs",           "seed",           "score_batch_size",
    "labels"};

}  // namespace

std::vector<std::uint16_t> parse_window_list(const std::string& csv) {
  std::vector<std::uint16_t> out;
  for (const auto& item : split_csv(csv)) {
    const auto w = parse_unsigned<unsigned>("windows", item);
    if (w == 0 || w > 1000) throw ConfigError("window length " + item + " ms out of range");
    for (auto prev : out) {
      if (prev == w) throw ConfigError("window length " + item + " ms listed twice");
    }
    out.push_back(static_cast<std::uint16_t>(w));
  }
  if (out.empty()) throw ConfigError("empty window list");
  return out;
}

std::string format_window_list(const std::vector<std::uint16_t>& windows) {
  std::string s;
  for (std::size_t i = 0; i < windows.size(); ++i) {
    s += (i ? "," : "") + std::to_string(windows[i]);
  }
  return s;
}

std::vector<std::string> RunConfig::keys() { return kKeys; }

void RunConfig::set(const std::string& key, const std::string& raw) {
  const std::string v = trim(raw);
  if (key == "sample_rate") {
    spectrogram.sample_rate = static_cast<int>(parse_unsigned<unsigned>(key, v));
  } else if (key == "fft_size") {
    spectrogram.fft_size = parse_unsigned<std::size_t>(key, v);
  } else if (key == "hop_ms") {
    spectrogram.hop_ms = parse_real(key, v);
  } else if (key == "log_floor") {
    spectrogram.log_floor = parse_real(key, v);
  } else if (key == "window_function") {
    spectrogram.window_function = parse_window_function(v);
  } else if (key == "normalize") {
    spectrogram.normalize = parse_bool(key, v);
  } else if (key == "windows") {
    windows = parse_window_list(v);
  } else if (key == "segment_frames") {
    segment_frames = parse_unsigned<std::size_t>(key, v);
  } else if (key == "segment_overlap") {
    segment_overlap = parse_unsigned<std::size_t>(key, v);
  } else if (key == "arch") {
    model.arch = parse_arch(v);
  } else if (key == "n_input_channels") {
    model.n_input_channels = parse_unsigned<std::size_t>(key, v);
  } else if (key == "n_classes") {
    model.n_classes = parse_unsigned<std::size_t>(key, v);
  } else if (key == "input_height") {
    model.input_height = parse_unsigned<std::size_t>(key, v);
  } else if (key == "input_width") {
    model.input_width = parse_unsigned<std::size_t>(key, v);
  } else if (key == "batch_size") {
    train.batch_size = parse_unsigned<std::size_t>(key, v);
  } else if (key == "beta1") {
    train.beta1 = parse_real(key, v);
  } else if (key == "beta2") {
    train.beta2 = parse_real(key, v);
  } else if (key == "weight_decay") {
    train.weight_decay = parse_real(key, v);
  } else if (key == "warmup_steps") {
    train.warmup_steps = parse_unsigned<std::uint64_t>(key, v);
  } else if (key == "peak_lr") {
    train.peak_lr = parse_real(key, v);
  } else if (key == "adam_epsilon") {
    train.epsilon = parse_real(key, v);
  } else if (key == "epochs") {
    train.epochs = parse_unsigned<std::size_t>(key, v);
  } else if (key == "seed") {
    train.seed = parse_unsigned<std::uint64_t>(key, v);
  } else if (key == "score_batch_size") {
    score_batch_size = parse_unsigned<std::size_t>(key, v);
  } else if (key == "labels") {
    labels = LabelSet(split_csv(v));
  } else {
    throw ConfigError("unknown config key '" + key + "'");
  }
  explicit_.insert(key);
}

void RunConfig::finalize(bool check_windows) {
  if (!explicit_.contains("n_input_channels")) model.n_input_channels = windows.size();
  if (!explicit_.contains("input_height")) model.input_height = spectrogram.fft_size / 2 + 1;
  if (!explicit_.contains("input_width")) model.input_width = segment_frames;
  if (!explicit_.contains("n_classes")) model.n_classes = labels.size();

  if (windows.empty()) throw ConfigError("windows must list at least one length");
  // The configured window lengths replace spectrogram.window_ms.
  for (std::uint16_t w : windows) {
    SpectrogramConfig each = spectrogram;
    each.window_ms = w;
    each.validate();
  }
  model.validate();
  train.validate();
  if (segment_frames == 0 || segment_overlap >= segment_frames) {
    throw ConfigError("segment_overlap must be smaller than segment_frames");
  }
  if (score_batch_size == 0) throw ConfigError("score_batch_size must be positive");
  if (check_windows && model.n_input_channels != windows.size()) {
    throw ConfigError("n_input_channels = " + std::to_string(model.n_input_channels) +
                      " but " + std::to_string(windows.size()) + " windows are selected");
  }
  if (model.input_height != spectrogram.freq_bins()) {
    throw ConfigError("input_height = " + std::to_string(model.input_height) +
                      " but fft_size gives " + std::to_string(spectrogram.freq_bins()) + " bins");
  }
  if (model.input_width != segment_frames) {
    throw ConfigError("input_width = " + std::to_string(model.input_width) +
                      " but segment_frames = " + std::to_string(segment_frames));
  }
  if (model.n_classes != labels.size()) {
    throw ConfigError("n_classes = " + std::to_string(model.n_classes) + " but " +
                      std::to_string(labels.size()) + " labels are configured");
  }
}

std::string RunConfig::to_text() const {
  std::ostringstream os;
  auto kv = [&](const std::string& k, const std::string& v) { os << k << " = " << v << '\n'; };
  kv("sample_rate", std::to_string(spectrogram.sample_rate));
  kv("fft_size", std::to_string(spectrogram.fft_size));
  kv("hop_ms", real(spectrogram.hop_ms));
  kv("log_floor", real(spectrogram.log_floor));
  kv("window_function", to_string(spectrogram.window_function));
  kv("normalize", spectrogram.normalize ? "true" : "false");
  kv("windows", format_window_list(windows));
  kv("segment_frames", std::to_string(segment_frames));
  kv("segment_overlap", std::to_string(segment_overlap));
  kv("arch", to_string(model.arch));
  kv("n_input_channels", std::to_string(model.n_input_channels));
  kv("n_classes", std::to_string(model.n_classes));
  kv("input_height", std::to_string(model.input_height));
  kv("input_width", std::to_string(model.input_width));
  kv("batch_size", std::to_string(train.batch_size));
  kv("beta1", real(train.beta1));
  kv("beta2", real(train.beta2));
  kv("weight_decay", real(train.weight_decay));
  kv("warmup_steps", std::to_string(train.warmup_steps));
  kv("peak_lr", real(train.peak_lr));
  kv("adam_epsilon", real(train.epsilon));
  kv("epochs", std::to_string(train.epochs));
  kv("seed", std::to_string(train.seed));
  kv("score_batch_size", std::to_string(score_batch_size));
  std::string names;
  for (std::size_t i = 0; i < labels.size(); ++i) names += (i ? "," : "") + labels.names()[i];
  kv("labels", names);
  return os.str();
}

void apply_config_text(RunConfig& config, const std::string& text, const std::string& source) {
  std::istringstream is(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(source + ":" + std::to_string(lineno) + ": expected 'key = value'");
    }
    try {
      config.set(trim(t.substr(0, eq)), t.substr(eq + 1));
    } catch (const ConfigError& e) {
      throw ConfigError(source + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
}

void apply_config_file(RunConfig& config, const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot open config file " + path.string());
  std::stringstream ss;
  ss << is.rdbuf();
  apply_config_text(config, ss.str(), path.string());
}

}  // namespace mrspoof
