// Copyright 2026 The ConcateNet Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "concatenet/cli.hpp"

#include <CLI11.hpp>
#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>

#include "concatenet/checkpoint.hpp"
#include "concatenet/config.hpp"
#include "concatenet/data.hpp"
#include "concatenet/metrics.hpp"
#include "concatenet/trainer.hpp"
#include "concatenet/wav.hpp"

namespace concatenet {

namespace {

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Writes through a temporary file that is renamed into place by commit().
// Destroying an uncommitted writer removes the temporary file.
class AtomicFile {
 public:
  explicit AtomicFile(std::string path) : path_(std::move(path)), tmp_(path_ + ".partial") {
    os_.open(tmp_, std::ios::trunc);
    if (!os_) throw std::runtime_error("cannot open " + tmp_ + " for writing");
  }
  ~AtomicFile() {
    if (!committed_) {
      os_.close();
      std::remove(tmp_.c_str());
    }
  }
  std::ostream& stream() { return os_; }
  void commit() {
    os_.close();
    if (!os_) throw std::runtime_error("failed writing " + path_);
    std::filesystem::rename(tmp_, path_);
    committed_ = true;
  }

 private:
  std::string path_;
  std::string tmp_;
  std::ofstream os_;
  bool committed_ = false;
};

Waveform read_at_rate(const std::string& path, double sample_rate) {
  Waveform w = read_wav(path);
  if (w.sample_rate != sample_rate) {
    std::ostringstream msg;
    msg << path << ": sample rate " << w.sample_rate << " Hz does not match the model rate "
        << sample_rate << " Hz (resample the input first)";
    throw std::runtime_error(msg.str());
  }
  return w;
}

// Runs the model on a waveform and returns the estimate padded or cut to the
// input length. Samples after the last full frame come out as zero.
Waveform separate_waveform(ConcateNet& model, const Waveform& mixture, const ForwardOptions& options) {
  const auto cfg = model.config().stft();
  if (mixture.size() < cfg.window_len) {
    throw std::runtime_error("input has " + std::to_string(mixture.size()) +
                             " samples, fewer than one analysis window (" +
                             std::to_string(cfg.window_len) + ")");
  }
  const auto [estimate, mask] = model.separate(stft(mixture, cfg), options);
  Waveform out = istft(estimate);
  out.samples.resize(mixture.size(), 0.0);
  return out;
}

ForwardOptions inference_options(const TrainingMeta& meta, bool no_nlr, bool identity_mask) {
  ForwardOptions options;
  options.nlr_enabled = meta.nlr_enabled && !no_nlr;
  options.identity_mask = identity_mask;
  return options;
}

std::vector<data::CorpusItem> load_corpus(const RunConfig& rc) {
  if (rc.manifest.empty()) {
    return data::synth_corpus(rc.corpus_seed, rc.corpus_items, rc.corpus_duration_s,
                              rc.model.sample_rate);
  }
  std::vector<data::CorpusItem> items;
  for (const auto& e : data::read_manifest(rc.manifest)) {
    items.push_back({e.id, read_at_rate(e.speech_path, rc.model.sample_rate),
                     read_at_rate(e.background_path, rc.model.sample_rate)});
  }
  return items;
}

bool same_shape_config(const ModelConfig& a, const ModelConfig& b) {
  return a.channels == b.channels && a.bands == b.bands && a.depth == b.depth &&
         a.nlr_channels == b.nlr_channels && a.window_len == b.window_len && a.hop == b.hop &&
         a.sample_rate == b.sample_rate && a.f_min == b.f_min && a.f_max == b.f_max;
}

struct TrainArgs {
  std::string config;
  bool no_nlr = false;
  std::optional<std::uint64_t> steps;
  std::optional<std::uint64_t> seed;
  std::string output;
  std::string log;
  std::string resume;
  std::vector<std::string> settings;
};

int cmd_train(const TrainArgs& a, std::ostream& out) {
  RunConfig rc;
  try {
    rc = load_config(a.config);
    for (const auto& s : a.settings) {
      const auto eq = s.find('=');
      if (eq == std::string::npos) throw ConfigError("--set expects KEY=VALUE, got '" + s + "'");
      apply_setting(rc, s.substr(0, eq), s.substr(eq + 1));
    }
    if (a.no_nlr) rc.train.nlr_enabled = false;
    if (a.steps) rc.train.steps = *a.steps;
    if (a.seed) rc.train.seed = *a.seed;
    if (!a.output.empty()) rc.output = a.output;
    if (!a.log.empty()) rc.log = a.log;
    rc.model.validate();
    rc.train.validate();
  } catch (const std::invalid_argument& e) {
    throw UsageError(std::string("invalid configuration: ") + e.what());
  } catch (const ConfigError& e) {
    throw UsageError(e.what());
  }

  auto corpus = load_corpus(rc);
  std::unique_ptr<ConcateNet> model;
  std::optional<CheckpointData> resume;
  if (!a.resume.empty()) {
    resume = read_checkpoint(a.resume);
    if (!same_shape_config(resume->config, rc.model)) {
      throw std::runtime_error("checkpoint " + a.resume + " was built with a different model config");
    }
    model = std::make_unique<ConcateNet>(resume->config);
    load_state(*model, *resume);
  } else {
    model = std::make_unique<ConcateNet>(rc.model);
  }

  Trainer trainer(*model, std::move(corpus), rc.train);
  if (resume) trainer.restore(*resume);

  std::optional<AtomicFile> log;
  if (!rc.log.empty()) log.emplace(rc.log);
  trainer.run(rc.output, log ? &log->stream() : nullptr);
  if (log) log->commit();

  out << "trained " << trainer.completed_steps() << " steps ("
      << (rc.train.nlr_enabled ? "with" : "without") << " refinement), "
      << model->parameter_count() << " parameters, checkpoint " << rc.output << '\n';
  return kExitOk;
}

int cmd_separate(const std::string& model_path, const std::string& input, const std::string& output,
                 bool no_nlr, bool identity_mask, std::ostream& out) {
  TrainingMeta meta;
  auto model = load_model(model_path, &meta);
  const Waveform mixture = read_at_rate(input, model->config().sample_rate);
  const Waveform estimate =
      separate_waveform(*model, mixture, inference_options(meta, no_nlr, identity_mask));
  write_wav(output, estimate);
  out << "wrote " << output << " (" << estimate.size() << " samples)\n";
  return kExitOk;
}

int cmd_evaluate(const std::string& model_path, const std::string& manifest, const std::string& report,
                 std::optional<double> awgn_snr, bool no_nlr, bool identity_mask, std::ostream& out) {
  TrainingMeta meta;
  auto model = load_model(model_path, &meta);
  const auto options = inference_options(meta, no_nlr, identity_mask);
  const auto cfg = model->config().stft();
  const auto entries = data::read_manifest(manifest);
  if (entries.empty()) throw std::runtime_error(manifest + ": manifest has no entries");

  metrics::EvalReport rep({"mixture_si_sdr", "mixture_si_sir", "model_si_sdr", "model_si_sir"});
  for (std::size_t i = 0; i < entries.size(); ++i) {
    const auto& e = entries[i];
    data::MixSpec spec;
    spec.speech = read_at_rate(e.speech_path, model->config().sample_rate);
    spec.background = read_at_rate(e.background_path, model->config().sample_rate);
    spec.snr_db = e.snr_db;
    spec.awgn_snr_db = awgn_snr;
    spec.noise_seed = i;
    const auto mixed = data::mix_at_snr(spec);
    const Waveform estimate = separate_waveform(*model, mixed.mixture, options);

    const auto range = cfg.interior(cfg.frames_for(mixed.mixture.size()));
    if (range.end <= range.begin) {
      throw std::runtime_error(e.id + ": item too short for evaluation (needs more than " +
                               std::to_string(2 * cfg.window_len) + " samples)");
    }
    const std::size_t n = range.end - range.begin;
    auto cut = [&](const Waveform& w) { return std::span<const double>(w.samples).subspan(range.begin, n); };
    // Interference is everything in the mixture that is not speech.
    std::vector<double> interference(mixed.mixture.samples);
    for (std::size_t k = 0; k < interference.size(); ++k) interference[k] -= mixed.speech.samples[k];
    const auto s = cut(mixed.speech);
    const auto v = std::span<const double>(interference).subspan(range.begin, n);
    rep.add(e.id, {metrics::si_sdr(cut(mixed.mixture), s), metrics::si_sir(cut(mixed.mixture), s, v),
                   metrics::si_sdr(cut(estimate), s), metrics::si_sir(cut(estimate), s, v)});
  }

  AtomicFile file(report);
  rep.write_csv(file.stream());
  file.commit();
  rep.write_table(out);
  return kExitOk;
}

int cmd_mix(const std::string& speech, const std::string& background, double snr,
            std::optional<double> awgn_snr, std::uint64_t seed, const std::string& output,
            std::ostream& out) {
  data::MixSpec spec;
  spec.speech = read_wav(speech);
  spec.background = read_wav(background);
  spec.snr_db = snr;
  spec.awgn_snr_db = awgn_snr;
  spec.noise_seed = seed;
  const auto mixed = data::mix_at_snr(spec);
  write_wav(output, mixed.mixture);
  out << std::setprecision(10) << "wrote " << output << " gain=" << mixed.gain
      << " snr_db=" << metrics::snr_db(mixed.speech.samples, mixed.background.samples) << '\n';
  return kExitOk;
}

int cmd_info(const std::string& model_path, std::ostream& out) {
  TrainingMeta meta;
  auto model = load_model(model_path, &meta);
  RunConfig rc;
  rc.model = model->config();
  out << "checkpoint: " << model_path << '\n'
      << "step: " << meta.step << '\n'
      << "nlr_enabled: " << (meta.nlr_enabled ? "true" : "false") << '\n'
      << "config:\n";
  std::ostringstream cfg;
  write_config(cfg, rc);
  std::istringstream lines(cfg.str());
  const std::vector<std::string> model_keys = {"channels", "bands",     "depth", "nlr_channels",
                                               "window_len", "hop",      "sample_rate", "f_min",
                                               "f_max",    "init_seed"};
  for (std::string line; std::getline(lines, line);) {
    const std::string key = line.substr(0, line.find(' '));
    if (std::find(model_keys.begin(), model_keys.end(), key) != model_keys.end()) {
      out << "  " << line << '\n';
    }
  }
  out << "parameters:\n";
  for (const auto& [group, count] : model->parameter_breakdown()) {
    out << "  " << std::left << std::setw(12) << group << std::right << ' ' << count << '\n';
  }
  out << "total " << model->parameter_count() << '\n';
  return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"ConcateNet dialogue separation"};
  app.name("concatenet");
  app.require_subcommand(1);

  TrainArgs train;
  auto* train_cmd = app.add_subcommand("train", "Train a model from a config file");
  train_cmd->add_option("--config", train.config, "Config file (key = value lines)")->required();
  train_cmd->add_flag("--no-nlr", train.no_nlr, "Train without the refinement stage");
  train_cmd->add_option("--steps", train.steps, "Override the number of optimizer steps");
  train_cmd->add_option("--seed", train.seed, "Override the data seed");
  train_cmd->add_option("--output", train.output, "Checkpoint path (overrides config 'output')");
  train_cmd->add_option("--log", train.log, "Training log CSV (overrides config 'log')");
  train_cmd->add_option("--resume", train.resume, "Continue from a training checkpoint");
  train_cmd->add_option("--set", train.settings, "Override a config key: KEY=VALUE (repeatable)");

  std::string model_path, input, output, manifest, report, speech, background;
  bool no_nlr = false, identity = false;
  double snr = 0.0;
  std::optional<double> awgn;
  std::uint64_t mix_seed = 0;

  auto* sep = app.add_subcommand("separate", "Extract dialogue from a WAV file");
  sep->add_option("--model", model_path, "Checkpoint")->required();
  sep->add_option("--input", input, "Mixture WAV")->required();
  sep->add_option("--output", output, "Output WAV (float32)")->required();
  sep->add_flag("--no-nlr", no_nlr, "Skip the refinement stage");
  sep->add_flag("--debug-identity-mask", identity, "Replace the estimated mask by 1 + 0i");

  auto* eval = app.add_subcommand("evaluate", "Score a model on a manifest of speech/background pairs");
  eval->add_option("--model", model_path, "Checkpoint")->required();
  eval->add_option("--manifest", manifest, "Manifest: id, speech, background, snr_db (tab separated)")
      ->required();
  eval->add_option("--report", report, "Per-item CSV report with mean and std rows")->required();
  eval->add_option("--awgn-snr", awgn, "Add white noise this many dB below each mixture");
  eval->add_flag("--no-nlr", no_nlr, "Skip the refinement stage");
  eval->add_flag("--debug-identity-mask", identity, "Replace the estimated mask by 1 + 0i");

  auto* mix = app.add_subcommand("mix", "Mix speech and background at a target SNR");
  mix->add_option("--speech", speech, "Speech WAV")->required();
  mix->add_option("--background", background, "Background WAV")->required();
  mix->add_option("--snr", snr, "Speech-to-background ratio in dB")->required();
  mix->add_option("--awgn-snr", awgn, "Add white noise this many dB below the mixture");
  mix->add_option("--seed", mix_seed, "Noise seed")->capture_default_str();
  mix->add_option("--output", output, "Mixture WAV (float32)")->required();

  auto* info = app.add_subcommand("info", "Print a checkpoint's config and parameter counts");
  info->add_option("--model", model_path, "Checkpoint")->required();

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(std::move(reversed));
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*train_cmd) return cmd_train(train, out);
    if (*sep) return cmd_separate(model_path, input, output, no_nlr, identity, out);
    if (*eval) return cmd_evaluate(model_path, manifest, report, awgn, no_nlr, identity, out);
    if (*mix) return cmd_mix(speech, background, snr, awgn, mix_seed, output, out);
    if (*info) return cmd_info(model_path, out);
  } catch (const UsageError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitFailure;
  }
  return kExitUsage;
}

int run_cli(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return run_cli(args, std::cout, std::cerr);
}

}  // namespace concatenet
