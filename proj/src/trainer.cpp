// Copyright 2026 The ConcateNet Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "concatenet/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <iomanip>
#include <numbers>
#include <numeric>
#include <ostream>
#include <random>
#include <stdexcept>

#include "concatenet/metrics.hpp"
#include "concatenet/ops.hpp"

namespace concatenet {

namespace {

std::mt19937_64 seeded(std::uint64_t seed, std::uint64_t a, std::uint32_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(a), static_cast<std::uint32_t>(a >> 32), stream};
  return std::mt19937_64(seq);
}

constexpr std::uint32_t kPermStream = 1;
constexpr std::uint32_t kSampleStream = 2;
constexpr int kMaxCropAttempts = 64;

// Speech must carry energy where the loss is measured (the interior region),
// background anywhere in the crop.
bool crop_has_energy(const data::CorpusItem& item, std::size_t offset, std::size_t len,
                     const StftConfig& cfg) {
  const auto interior = cfg.interior(cfg.frames_for(len));
  double es = 0.0, ev = 0.0;
  for (std::size_t i = interior.begin; i < interior.end; ++i) {
    es += item.speech.samples[offset + i] * item.speech.samples[offset + i];
  }
  for (std::size_t i = offset; i < offset + len; ++i) {
    ev += item.background.samples[i] * item.background.samples[i];
  }
  return es > 0.0 && ev > 0.0;
}

}  // namespace

void TrainConfig::validate() const {
  if (!(lr > 0.0)) throw std::invalid_argument("lr must be > 0");
  if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0)) {
    throw std::invalid_argument("beta1 and beta2 must lie in [0, 1)");
  }
  if (!(eps > 0.0)) throw std::invalid_argument("eps must be > 0");
  if (batch_size == 0) throw std::invalid_argument("batch_size must be >= 1");
  if (!(segment_s > 0.0)) throw std::invalid_argument("segment_s must be > 0");
  if (!std::isfinite(snr_low_db) || !std::isfinite(snr_high_db) || snr_low_db > snr_high_db) {
    throw std::invalid_argument("snr range must be finite with snr_low <= snr_high");
  }
  if (grad_clip < 0.0) throw std::invalid_argument("grad_clip must be >= 0");
  if (!(lr_decay > 0.0)) throw std::invalid_argument("lr_decay must be > 0");
}

Tensor si_sdr_loss(const Tensor& estimate, std::span<const double> reference,
                   const StftConfig& cfg) {
  if (estimate.dim() != 3 || estimate.size(0) != 2) {
    throw ShapeError("si_sdr_loss expects a packed [2, T, K] estimate, got " +
                     shape_str(estimate.shape()));
  }
  const Tensor x = istft_tensor(estimate, cfg);
  const std::size_t frames = estimate.size(1);
  if (reference.size() < x.numel()) {
    throw std::invalid_argument("si_sdr_loss: reference has " + std::to_string(reference.size()) +
                                " samples, estimate spans " + std::to_string(x.numel()));
  }
  const auto range = cfg.interior(frames);
  if (range.end <= range.begin) {
    throw std::invalid_argument("si_sdr_loss: signal too short for a nonempty interior region");
  }
  const std::size_t n = range.end - range.begin;
  const auto est = x.data().subspan(range.begin, n);
  const auto ref = reference.subspan(range.begin, n);

  double ss = 0.0, es = 0.0, ee = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    ss += ref[i] * ref[i];
    es += est[i] * ref[i];
    ee += est[i] * est[i];
  }
  if (!(ss > 0.0)) throw std::invalid_argument("si_sdr_loss: reference interior has zero energy");
  const double value = metrics::si_sdr(est, ref);
  std::vector<double> ref_copy(ref.begin(), ref.end());
  const std::size_t begin = range.begin;

  return Tensor::make_result(
      {}, {-value}, {x},
      [ref_copy = std::move(ref_copy), begin, ss, es, ee, value](detail::Node& self) {
        if (std::abs(value) >= metrics::kCapDb) return;
        auto& parent = *self.parents[0];
        auto& g = parent.grad_buffer();
        // loss = -10 log10(T / R), T = es^2 / ss, R = ee - es^2 / ss.
        const double residual = ee - es * es / ss;
        const double c = -10.0 / std::numbers::ln10 * self.grad[0];
        const double ref_coef = 2.0 / es + 2.0 * es / (ss * residual);
        const double est_coef = -2.0 / residual;
        for (std::size_t i = 0; i < ref_copy.size(); ++i) {
          g[begin + i] += c * (ref_coef * ref_copy[i] + est_coef * parent.data[begin + i]);
        }
      });
}

Trainer::Trainer(ConcateNet& model, std::vector<data::CorpusItem> corpus, TrainConfig config)
    : model_(model),
      corpus_(std::move(corpus)),
      config_(config),
      optimizer_(AdamConfig{config.lr, config.beta1, config.beta2, config.eps}) {
  config_.validate();
  if (corpus_.empty()) throw std::invalid_argument("training corpus is empty");
  const auto& mc = model_.config();
  segment_samples_ = static_cast<std::size_t>(std::llround(config_.segment_s * mc.sample_rate));
  const std::size_t min_samples = 2 * mc.window_len + mc.hop;
  for (const auto& item : corpus_) {
    if (item.speech.sample_rate != mc.sample_rate || item.background.sample_rate != mc.sample_rate) {
      throw std::invalid_argument("corpus item " + item.id + " is not at the model sample rate (" +
                                  std::to_string(mc.sample_rate) + " Hz)");
    }
    const std::size_t len = std::min(item.speech.size(), item.background.size());
    if (std::min(len, segment_samples_) < min_samples) {
      throw std::invalid_argument("corpus item " + item.id + " or the segment length is too short (" +
                                  std::to_string(min_samples) + " samples needed)");
    }
  }
}

TrainingExample Trainer::example(std::uint64_t step, std::size_t slot) const {
  const std::uint64_t n = corpus_.size();
  const std::uint64_t index = step * config_.batch_size + slot;
  const std::uint64_t epoch = index / n;

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  auto perm_rng = seeded(config_.seed, epoch, kPermStream);
  std::shuffle(order.begin(), order.end(), perm_rng);

  TrainingExample ex;
  ex.item = order[index % n];
  const auto& item = corpus_[ex.item];
  auto rng = seeded(config_.seed, index, kSampleStream);
  ex.snr_db = std::uniform_real_distribution<double>(config_.snr_low_db, config_.snr_high_db)(rng);

  const std::size_t len = std::min(item.speech.size(), item.background.size());
  const std::size_t seg = std::min(len, segment_samples_);
  // Crops that fall entirely inside a pause cannot be mixed at an SNR; draw
  // again from the same generator so the choice stays a function of index.
  std::uniform_int_distribution<std::size_t> pick(0, len - seg);
  std::size_t offset = pick(rng);
  for (int attempt = 1; !crop_has_energy(item, offset, seg, model_.config().stft()); ++attempt) {
    if (attempt == kMaxCropAttempts) {
      throw std::runtime_error("corpus item " + item.id + ": no crop of " + std::to_string(seg) +
                               " samples with both speech and background energy found");
    }
    offset = pick(rng);
  }
  const double sr = model_.config().sample_rate;
  data::MixSpec spec;
  spec.speech.sample_rate = sr;
  spec.background.sample_rate = sr;
  spec.speech.samples.assign(item.speech.samples.begin() + offset,
                             item.speech.samples.begin() + offset + seg);
  spec.background.samples.assign(item.background.samples.begin() + offset,
                                 item.background.samples.begin() + offset + seg);
  spec.snr_db = ex.snr_db;
  auto mixed = data::mix_at_snr(spec);
  ex.mixture = std::move(mixed.mixture);
  ex.speech = std::move(mixed.speech);
  return ex;
}

double Trainer::current_lr() const {
  if (config_.lr_decay_steps == 0) return config_.lr;
  const auto k = static_cast<double>(completed_steps() / config_.lr_decay_steps);
  return config_.lr * std::pow(config_.lr_decay, k);
}

double Trainer::forward_loss(const TrainingExample& ex) {
  const auto cfg = model_.config().stft();
  const Tensor packed = pack_complex(stft(ex.mixture, cfg));
  ForwardOptions options;
  options.nlr_enabled = config_.nlr_enabled;
  const auto out = model_.forward(packed, options);
  const Tensor loss = si_sdr_loss(out.estimate, ex.speech.samples, cfg);
  Tensor scaled = ops::scale(loss, 1.0 / static_cast<double>(config_.batch_size));
  scaled.backward();
  return loss.item();
}

StepResult Trainer::step() {
  const auto start = std::chrono::steady_clock::now();
  const std::uint64_t index = completed_steps();
  model_.set_training(true);
  model_.params().zero_grad();
  double total = 0.0;
  for (std::size_t slot = 0; slot < config_.batch_size; ++slot) {
    total += forward_loss(example(index, slot));
  }
  if (config_.grad_clip > 0.0) clip_grad_norm(model_.params(), config_.grad_clip);
  optimizer_.config().lr = current_lr();
  optimizer_.step(model_.params());

  StepResult r;
  r.step = completed_steps();
  r.loss = total / static_cast<double>(config_.batch_size);
  r.si_sdr_est = -r.loss;
  r.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
  return r;
}

void Trainer::save(const std::string& path, double last_loss) const {
  TrainingMeta meta;
  meta.step = completed_steps();
  meta.seed = config_.seed;
  meta.nlr_enabled = config_.nlr_enabled;
  meta.last_loss = last_loss;
  save_checkpoint(path, model_, meta, &optimizer_.state());
}

void Trainer::restore(const CheckpointData& data) {
  if (data.meta.seed != config_.seed) {
    throw std::invalid_argument("checkpoint was trained with seed " + std::to_string(data.meta.seed) +
                                ", config uses " + std::to_string(config_.seed));
  }
  if (data.meta.nlr_enabled != config_.nlr_enabled) {
    throw std::invalid_argument("checkpoint nlr_enabled setting differs from the training config");
  }
  if (data.optimizer) optimizer_.state() = *data.optimizer;
  optimizer_.state().step = data.meta.step;
}

void Trainer::run(const std::string& checkpoint_path, std::ostream* log) {
  if (log) *log << kTrainLogHeader << '\n';
  double last_loss = 0.0;
  while (completed_steps() < config_.steps) {
    const auto r = step();
    last_loss = r.loss;
    if (log) {
      *log << r.step << ',' << std::setprecision(17) << r.loss << ',' << r.si_sdr_est << ','
           << std::setprecision(6) << r.wall_ms << '\n';
      log->flush();
    }
    if (config_.checkpoint_every > 0 && r.step % config_.checkpoint_every == 0 &&
        r.step < config_.steps) {
      save(checkpoint_path, last_loss);
    }
  }
  save(checkpoint_path, last_loss);
}

}  // namespace concatenet
