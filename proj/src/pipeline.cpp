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

#include "mrspoof/pipeline.hpp"

#include <CLI11.hpp>

#include <atomic>
#include <chrono>
#include <cstdio>
#include <exception>
#include <fstream>
#include <iomanip>
#include <mutex>
#include <ostream>
#include <thread>

#include "mrspoof/checkpoint.hpp"
#include "mrspoof/dataset.hpp"
#include "mrspoof/errors.hpp"
#include "mrspoof/evaluation.hpp"
#include "mrspoof/feature_cache.hpp"
#include "mrspoof/manifest.hpp"
#include "mrspoof/models.hpp"
#include "mrspoof/run_config.hpp"
#include "mrspoof/synth.hpp"
#include "mrspoof/training.hpp"
#include "mrspoof/wav.hpp"

namespace mrspoof {

namespace {

namespace fs = std::filesystem;

struct Options {
  std::string config;
  std::string manifest;
  std::string dev_manifest;
  std::string labels;
  std::string out;
  std::string windows;
  std::string arch;
  std::size_t channels = 0;
  std::uint64_t seed = 0;
  std::size_t epochs = 0;
  std::string checkpoint;
  std::vector<std::string> scores;
  std::string weights;
  bool search = false;
  double grid_step = 0.05;
  std::size_t jobs = 0;
  std::size_t utts_per_class = 20;
  bool per_layer = false;
};

class Command {
 public:
  Command(const Options& o, CLI::App& sub, std::ostream& out, std::ostream& err)
      : o_(o), sub_(sub), out_(out), err_(err) {}

  bool given(const std::string& flag) const {
    const CLI::Option* opt = sub_.get_option_no_throw(flag);
    return opt != nullptr && opt->count() > 0;
  }

  /// Defaults < --config file < command-line flags.
  RunConfig resolve_config(bool check_windows = true) const {
    RunConfig c;
    if (!o_.config.empty()) apply_config_file(c, o_.config);
    if (given("--windows")) c.set("windows", o_.windows);
    if (given("--arch")) c.set("arch", o_.arch);
    if (given("--channels")) c.set("n_input_channels", std::to_string(o_.channels));
    if (given("--seed")) c.set("seed", std::to_string(o_.seed));
    if (given("--epochs")) c.set("epochs", std::to_string(o_.epochs));
    c.finalize(check_windows);
    return c;
  }

  fs::path out_dir() const {
    if (o_.out.empty()) throw ConfigError("--out is required");
    fs::path dir(o_.out);
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw ConfigError("cannot create output directory " + dir.string() + ": " + ec.message());
    return dir;
  }

  /// Resolved config goes next to the artifacts, or to stderr without --out.
  void log_config(const RunConfig& c, const std::string& command) const {
    const std::string text =
        "# mrspoof " + std::string(kVersion) + " " + command + "\n" + c.to_text();
    if (o_.out.empty()) {
      err_ << text;
      return;
    }
    std::ofstream os(out_dir() / "config.txt", std::ios::binary | std::ios::trunc);
    os << text;
    if (!os) throw FormatError("cannot write " + (out_dir() / "config.txt").string());
  }

  LabelTable label_table(const RunConfig& c) const {
    if (!o_.labels.empty()) return read_label_file(o_.labels);
    if (!o_.manifest.empty()) return parse_manifest(o_.manifest, c.labels).labels();
    throw ConfigError("labels needed: pass --labels PATH or --manifest PATH");
  }

  const Options& o_;
  CLI::App& sub_;
  std::ostream& out_;
  std::ostream& err_;
};

void require(const std::string& value, const char* flag) {
  if (value.empty()) throw ConfigError(std::string(flag) + " is required");
}

int cmd_synth(const Command& cmd) {
  const RunConfig c = cmd.resolve_config();
  const fs::path dir = cmd.out_dir();
  cmd.log_config(c, "synth");
  SynthSpec spec;
  spec.utts_per_class = cmd.o_.utts_per_class;
  spec.seed = c.train.seed;
  spec.sample_rate = c.spectrogram.sample_rate;
  spec.labels = c.labels;
  const SynthManifests m = generate_synthetic_corpus(spec, dir);
  cmd.out_ << m.train.string() << '\n' << m.dev.string() << '\n' << m.eval.string() << '\n';
  return 0;
}

int cmd_extract(const Command& cmd) {
  require(cmd.o_.manifest, "--manifest");
  const RunConfig c = cmd.resolve_config();
  const fs::path dir = cmd.out_dir();
  cmd.log_config(c, "extract");
  const Manifest manifest = parse_manifest(cmd.o_.manifest, c.labels);
  if (manifest.entries.empty()) throw ConfigError("manifest " + cmd.o_.manifest + " is empty");
  std::vector<double> lengths(c.windows.begin(), c.windows.end());

  const std::size_t n = manifest.entries.size();
  std::size_t jobs = cmd.o_.jobs ? cmd.o_.jobs : std::max(1u, std::thread::hardware_concurrency());
  jobs = std::min(jobs, n);
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        const ManifestEntry& e = manifest.entries[i];
        AudioBuffer audio = read_wav(manifest.resolve(e), c.spectrogram.sample_rate);
        audio.utt_id = e.utt_id;
        const auto maps = extract_multi_resolution(audio, c.spectrogram, lengths);
        write_feature_cache(dir / (e.utt_id + ".mrfm"), FeatureCache::from_maps(maps));
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next = n;
      }
    }
  };
  std::vector<std::thread> pool;
  for (std::size_t j = 1; j < jobs; ++j) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);

  std::vector<ManifestEntry> features;
  for (const auto& e : manifest.entries) {
    features.push_back({e.utt_id, e.utt_id + ".mrfm", e.label, e.partition});
  }
  write_manifest(dir / "features.tsv", features);
  cmd.out_ << (dir / "features.tsv").string() << '\n';
  return 0;
}

SegmentDataset load_features(const std::string& manifest_path, const RunConfig& c,
                             const std::vector<std::uint16_t>& windows) {
  return load_segment_dataset(parse_manifest(manifest_path, c.labels), c.labels, windows,
                              c.segment_frames, c.segment_overlap);
}

int cmd_train(const Command& cmd) {
  require(cmd.o_.manifest, "--manifest");
  require(cmd.o_.dev_manifest, "--dev-manifest");
  const RunConfig c = cmd.resolve_config();
  const fs::path dir = cmd.out_dir();
  cmd.log_config(c, "train");
  const SegmentDataset train = load_features(cmd.o_.manifest, c, c.windows);
  const SegmentDataset dev = load_features(cmd.o_.dev_manifest, c, c.windows);
  const auto model = build_model(c.model, c.train.seed);

  std::ofstream log(dir / "train.log", std::ios::binary | std::ios::trunc);
  if (!log) throw FormatError("cannot write " + (dir / "train.log").string());
  log << std::setprecision(9);
  std::ofstream epochs(dir / "epochs.tsv", std::ios::binary | std::ios::trunc);
  epochs << std::setprecision(9);

  const auto t0 = std::chrono::steady_clock::now();
  TrainingOutputs outputs;
  outputs.log = &log;
  outputs.checkpoint_dir = dir;
  outputs.on_epoch = [&](const EpochRecord& r) {
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    epochs << r.epoch << '\t' << r.mean_loss << '\t' << r.dev_eer << '\t' << r.step << '\n';
    epochs.flush();
    char line[160];
    std::snprintf(line, sizeof line, "epoch %zu loss %.4f dev_eer %.4f step %llu (%.1f s)\n",
                  r.epoch, r.mean_loss, r.dev_eer, static_cast<unsigned long long>(r.step), secs);
    cmd.err_ << line << std::flush;
  };
  const TrainingResult result = train_model(*model, train, dev, c.train, outputs);
  write_checkpoint(dir / "best.ckpt", result.best);
  write_score_file(dir / "dev_scores.tsv", score_dataset(*model, dev, c.score_batch_size));
  char line[96];
  std::snprintf(line, sizeof line, "best_epoch %zu dev_eer %.4f\n", result.best_epoch,
                result.best_dev_eer);
  cmd.out_ << line;
  return 0;
}

int cmd_score(const Command& cmd) {
  require(cmd.o_.checkpoint, "--checkpoint");
  require(cmd.o_.manifest, "--manifest");
  const CheckpointFile ckpt = read_checkpoint(cmd.o_.checkpoint);
  if (ckpt.meta.window_tags.empty()) {
    throw FormatError(cmd.o_.checkpoint + ": checkpoint records no window lengths");
  }
  RunConfig c;
  if (!cmd.o_.config.empty()) apply_config_file(c, cmd.o_.config);
  c.set("windows", format_window_list(ckpt.meta.window_tags));
  c.set("arch", to_string(ckpt.meta.spec.arch));
  c.finalize();
  if (c.model != ckpt.meta.spec) {
    const ModelSpec& a = c.model;
    const ModelSpec& b = ckpt.meta.spec;
    std::string diff;
    auto field = [&](const char* name, std::size_t x, std::size_t y) {
      if (x != y) {
        diff += std::string(diff.empty() ? "" : ", ") + name + " " + std::to_string(x) +
                " vs " + std::to_string(y);
      }
    };
    field("input_height", a.input_height, b.input_height);
    field("input_width", a.input_width, b.input_width);
    field("n_classes", a.n_classes, b.n_classes);
    field("n_input_channels", a.n_input_channels, b.n_input_channels);
    throw ConfigError("configuration does not match the model stored in " +
                      cmd.o_.checkpoint + " (config vs checkpoint: " + diff +
                      "); pass the training --config");
  }
  const fs::path dir = cmd.out_dir();
  cmd.log_config(c, "score");
  const auto model = load_model(ckpt);
  const SegmentDataset data = load_features(cmd.o_.manifest, c, ckpt.meta.window_tags);
  const ScoreTable scores = score_dataset(*model, data, c.score_batch_size);
  write_score_file(dir / "scores.tsv", scores);
  cmd.out_ << (dir / "scores.tsv").string() << '\n';
  return 0;
}

int cmd_evaluate(const Command& cmd) {
  if (cmd.o_.scores.size() != 1) throw ConfigError("evaluate takes exactly one --scores file");
  const RunConfig c = cmd.resolve_config();
  if (!cmd.o_.out.empty()) cmd.log_config(c, "evaluate");
  const ScoreTable scores = read_score_file(cmd.o_.scores[0]);
  const LabelTable labels = cmd.label_table(c);
  std::vector<double> target, nontarget;
  split_by_label(scores, labels, target, nontarget);
  const EERResult r = compute_eer(target, nontarget);
  if (!cmd.o_.out.empty()) {
    write_operating_points(cmd.out_dir() / "operating_points.tsv",
                           operating_points(target, nontarget));
  }
  char line[64];
  std::snprintf(line, sizeof line, "EER %.4f\n", r.eer);
  cmd.out_ << line;
  return 0;
}

std::vector<double> parse_weights(const std::string& csv) {
  std::vector<double> w;
  std::stringstream ss(csv);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      w.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw ConfigError("--weights: '" + item + "' is not a number");
    }
  }
  return w;
}

int cmd_fuse(const Command& cmd) {
  if (cmd.o_.scores.size() < 2) throw ConfigError("fuse needs at least two --scores files");
  if (cmd.o_.search == !cmd.o_.weights.empty()) {
    throw ConfigError("fuse needs exactly one of --weights CSV or --search");
  }
  const RunConfig c = cmd.resolve_config();
  const fs::path dir = cmd.out_dir();
  cmd.log_config(c, "fuse");
  std::vector<ScoreTable> tables;
  for (const auto& p : cmd.o_.scores) tables.push_back(read_score_file(p));
  std::vector<double> weights;
  if (cmd.o_.search) {
    const FusionSearchResult r = search_fusion_weights(tables, cmd.label_table(c), cmd.o_.grid_step);
    weights = r.weights;
    char line[96];
    std::snprintf(line, sizeof line, "searched %zu grid points, dev EER %.4f\n", r.n_evaluated,
                  r.dev_eer);
    cmd.out_ << line;
  } else {
    weights = parse_weights(cmd.o_.weights);
  }
  const ScoreTable fused = fuse_scores(tables, weights);
  write_score_file(dir / "fused.tsv", fused);
  std::ofstream ws(dir / "weights.txt", std::ios::binary | std::ios::trunc);
  ws << std::setprecision(17);
  std::string csv;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    ws << cmd.o_.scores[i] << '\t' << weights[i] << '\n';
    char buf[32];
    std::snprintf(buf, sizeof buf, "%s%.2f", i ? "," : "", weights[i]);
    csv += buf;
  }
  cmd.out_ << "weights " << csv << '\n';
  return 0;
}

int cmd_count_params(const Command& cmd) {
  const RunConfig c = cmd.resolve_config(false);
  if (!cmd.o_.out.empty()) cmd.log_config(c, "count-params");
  const auto model = build_model(c.model);
  const ParamReport r = count_parameters(*model);
  if (cmd.o_.per_layer) {
    for (const auto& [name, n] : r.per_layer) cmd.out_ << name << '\t' << n << '\n';
    cmd.out_ << "delta_vs_single_channel\t" << r.delta_vs_single_channel << '\n';
  }
  cmd.out_ << r.total << '\n';
  return 0;
}

}  // namespace

int run_pipeline(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Multi-resolution spectrogram anti-spoofing toolkit", "mrspoof"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);
  Options o;

  auto add_common = [&](CLI::App* s) {
    s->add_option("--config", o.config, "run configuration file (key = value)")
        ->check(CLI::ExistingFile);
    s->add_option("--out", o.out, "output directory");
    s->add_option("--seed", o.seed, "random seed");
  };
  auto add_features = [&](CLI::App* s) {
    s->add_option("--windows", o.windows, "window lengths in ms, e.g. 18,25,30");
  };

  CLI::App* synth = app.add_subcommand("synth", "generate the synthetic corpus");
  add_common(synth);
  synth->add_option("--utts-per-class", o.utts_per_class, "utterances per class");

  CLI::App* extract = app.add_subcommand("extract", "compute multi-resolution features");
  add_common(extract);
  add_features(extract);
  extract->add_option("--manifest", o.manifest, "WAV manifest");
  extract->add_option("--jobs", o.jobs, "worker threads (default: all cores)");

  CLI::App* train = app.add_subcommand("train", "train a model on feature manifests");
  add_common(train);
  add_features(train);
  train->add_option("--manifest", o.manifest, "training feature manifest");
  train->add_option("--dev-manifest", o.dev_manifest, "development feature manifest");
  train->add_option("--arch", o.arch, "lcnn, resnet18 or senet50");
  train->add_option("--channels", o.channels, "input channels (must match --windows)");
  train->add_option("--epochs", o.epochs, "training epochs");

  CLI::App* score = app.add_subcommand("score", "score utterances with a checkpoint");
  add_common(score);
  score->add_option("--checkpoint", o.checkpoint, "MRCKPT01 checkpoint");
  score->add_option("--manifest", o.manifest, "feature manifest");

  CLI::App* evaluate = app.add_subcommand("evaluate", "equal error rate of a score file");
  add_common(evaluate);
  evaluate->add_option("--scores", o.scores, "score TSV");
  evaluate->add_option("--labels", o.labels, "label TSV");
  evaluate->add_option("--manifest", o.manifest, "manifest providing labels");

  CLI::App* fuse = app.add_subcommand("fuse", "weighted score fusion");
  add_common(fuse);
  fuse->add_option("--scores", o.scores, "score TSV (repeat per system)");
  fuse->add_option("--weights", o.weights, "comma-separated weights");
  fuse->add_flag("--search", o.search, "grid-search weights on the given labels");
  fuse->add_option("--grid-step", o.grid_step, "simplex grid step");
  fuse->add_option("--labels", o.labels, "label TSV for --search");
  fuse->add_option("--manifest", o.manifest, "manifest providing labels for --search");

  CLI::App* count = app.add_subcommand("count-params", "print the parameter total");
  add_common(count);
  count->add_option("--arch", o.arch, "lcnn, resnet18 or senet50");
  count->add_option("--channels", o.channels, "input channels");
  count->add_flag("--per-layer", o.per_layer, "also print per-layer counts");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    err << "mrspoof: error: " << e.what() << '\n';
    return e.get_exit_code() != 0 ? e.get_exit_code() : 2;
  }

  try {
    CLI::App* sub = app.get_subcommands().front();
    const Command cmd(o, *sub, out, err);
    const std::string name = sub->get_name();
    if (name == "synth") return cmd_synth(cmd);
    if (name == "extract") return cmd_extract(cmd);
    if (name == "train") return cmd_train(cmd);
    if (name == "score") return cmd_score(cmd);
    if (name == "evaluate") return cmd_evaluate(cmd);
    if (name == "fuse") return cmd_fuse(cmd);
    if (name == "count-params") return cmd_count_params(cmd);
    throw ConfigError("unknown subcommand " + name);
  } catch (const std::exception& e) {
    err << "mrspoof: error: " << e.what() << '\n';
    return 1;
  }
}

int run_pipeline(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  std::vector<const char*> argv;
  argv.push_back("mrspoof");
  for (const auto& a : args) argv.push_back(a.c_str());
  return run_pipeline(static_cast<int>(argv.size()), argv.data(), out, err);
}

}  // namespace mrspoof
