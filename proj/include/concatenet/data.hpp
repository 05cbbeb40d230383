// Copyright 2026 The ConcateNet Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#ifndef CONCATENET_DATA_HPP_
#define CONCATENET_DATA_HPP_

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "concatenet/stft.hpp"

namespace concatenet::data {

/// Recipe for one mixture: speech plus background rescaled to a target SNR,
/// optionally with white Gaussian noise at awgn_snr_db below the mixture.
struct MixSpec {
  Waveform speech;
  Waveform background;
  double snr_db = 0.0;
  std::optional<double> awgn_snr_db;
  std::uint64_t noise_seed = 0;
};

struct MixResult {
  Waveform mixture;
  Waveform speech;      // trimmed to the common length
  Waveform background;  // scaled by `gain`
  Waveform noise;       // empty unless awgn was requested
  double gain = 1.0;
};

/// mixture = s + g v (+ n) with g = sqrt(|s|^2 / |v|^2 * 10^(-snr/10)).
/// Inputs are trimmed to the shorter length and must share a sample rate.
MixResult mix_at_snr(const MixSpec& spec);

/// Held-out test recipe: target SNR plus white noise 20 dB below the mixture.
MixSpec test_mixture_recipe(Waveform speech, Waveform background, double snr_db,
                            std::uint64_t noise_seed);

struct CorpusItem {
  std::string id;
  Waveform speech;
  Waveform background;
};

/// Deterministic synthetic speech/background pairs. Item i depends only on
/// (seed, i). Speech is a formant-filtered harmonic source with a gliding
/// 80-300 Hz fundamental and a syllabic envelope; background mixes
/// band-filtered noise bursts, a noise bed, and tonal interferers.
CorpusItem synth_item(std::uint64_t seed, std::size_t index, double duration_s,
                      double sample_rate = 48000.0);
std::vector<CorpusItem> synth_corpus(std::uint64_t seed, std::size_t n_items, double duration_s,
                                     double sample_rate = 48000.0);

/// Manifest line: id<TAB>speech_path<TAB>background_path<TAB>snr_db
struct ManifestEntry {
  std::string id;
  std::string speech_path;
  std::string background_path;
  double snr_db = 0.0;
};

std::vector<ManifestEntry> read_manifest(const std::string& path);
void write_manifest(const std::string& path, const std::vector<ManifestEntry>& entries);

/// Writes every item as <dir>/<id>_speech.wav and <dir>/<id>_background.wav
/// (float32) plus <dir>/manifest.tsv with the given per-item SNRs.
std::vector<ManifestEntry> export_corpus(const std::string& dir,
                                         const std::vector<CorpusItem>& items,
                                         const std::vector<double>& snrs_db);

}  // namespace concatenet::data

#endif  // CONCATENET_DATA_HPP_
