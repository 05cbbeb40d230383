// Copyright 2026 The ConcateNet Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#ifndef CONCATENET_TRAINER_HPP_
#define CONCATENET_TRAINER_HPP_

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "concatenet/checkpoint.hpp"
#include "concatenet/data.hpp"
#include "concatenet/model.hpp"
#include "concatenet/optim.hpp"

namespace concatenet {

struct TrainConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  std::size_t batch_size = 4;
  double segment_s = 4.0;
  std::uint64_t steps = 1000;
  std::uint64_t seed = 0;
  double snr_low_db = -5.0;
  double snr_high_db = 15.0;
  bool nlr_enabled = true;
  double grad_clip = 0.0;           // 0 disables clipping
  double lr_decay = 1.0;            // multiplier applied every lr_decay_steps
  std::uint64_t lr_decay_steps = 0;  // 0 disables the schedule
  std::uint64_t checkpoint_every = 0;

  void validate() const;
};

/// -SI-SDR of istft(estimate) against reference over the interior region of
/// the synthesized signal. estimate is a packed [2, T, K] spectrogram;
/// reference must hold at least samples_for(T) samples (extra ones are
/// ignored). At the +-100 dB cap the gradient is zero.
Tensor si_sdr_loss(const Tensor& estimate, std::span<const double> reference,
                   const StftConfig& cfg);

/// One training example after mixing and cropping.
struct TrainingExample {
  Waveform mixture;
  Waveform speech;
  double snr_db = 0.0;
  std::size_t item = 0;
};

struct StepResult {
  std::uint64_t step = 0;  // 1-based index of the completed step
  double loss = 0.0;       // batch mean
  double si_sdr_est = 0.0;
  double wall_ms = 0.0;
};

/// Adam training on random crops of corpus items mixed at random SNRs.
///
/// Item order is a per-epoch permutation and every crop offset and SNR is
/// drawn from a generator seeded by (seed, sample index), so a run is a pure
/// function of (model init, corpus, config) and resuming from a checkpoint
/// reproduces the uninterrupted run. A crop that is silent in either source is
/// redrawn from the same generator.
class Trainer {
 public:
  Trainer(ConcateNet& model, std::vector<data::CorpusItem> corpus, TrainConfig config);

  /// Example for slot `slot` of batch `step` (0-based).
  TrainingExample example(std::uint64_t step, std::size_t slot) const;

  /// Runs one optimizer step on batch number completed_steps().
  StepResult step();

  std::uint64_t completed_steps() const { return optimizer_.state().step; }
  const TrainConfig& config() const { return config_; }
  const Adam& optimizer() const { return optimizer_; }
  double current_lr() const;

  void save(const std::string& path, double last_loss) const;
  /// Restores optimizer state from a checkpoint whose model state has
  /// already been loaded.
  void restore(const CheckpointData& data);

  /// Trains until completed_steps() == config.steps. Writes a header and one
  /// CSV line per step to `log`, and checkpoints every checkpoint_every steps
  /// and at the end.
  void run(const std::string& checkpoint_path, std::ostream* log);

 private:
  double forward_loss(const TrainingExample& ex);

  ConcateNet& model_;
  std::vector<data::CorpusItem> corpus_;
  TrainConfig config_;
  Adam optimizer_;
  std::size_t segment_samples_ = 0;
};

/// Header line of the training log.
inline constexpr const char* kTrainLogHeader = "step,loss,si_sdr_est,wall_ms";

}  // namespace concatenet

#endif  // CONCATENET_TRAINER_HPP_
