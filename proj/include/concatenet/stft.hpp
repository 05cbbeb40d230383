// Copyright 2026 The ConcateNet Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#ifndef CONCATENET_STFT_HPP_
#define CONCATENET_STFT_HPP_

#include <cstddef>
#include <vector>

#include "concatenet/tensor.hpp"

namespace concatenet {

/// Mono time-domain signal.
struct Waveform {
  std::vector<double> samples;
  double sample_rate = 48000.0;

  std::size_t size() const { return samples.size(); }
};

/// Complex time-frequency representation, frame-major: element (m, k) is at
/// m * bins + k.
struct Spectrogram {
  std::size_t frames = 0;
  std::size_t bins = 0;
  std::vector<double> re;
  std::vector<double> im;
  std::size_t window_len = 2048;
  std::size_t hop = 1024;
  double sample_rate = 48000.0;

  static Spectrogram zeros(std::size_t frames, std::size_t bins, std::size_t window_len,
                           std::size_t hop, double sample_rate = 48000.0);
  bool same_layout(const Spectrogram& other) const {
    return frames == other.frames && bins == other.bins;
  }
};

struct StftConfig {
  std::size_t window_len = 2048;
  std::size_t hop = 1024;

  std::size_t bins() const { return window_len / 2 + 1; }
  std::size_t frames_for(std::size_t samples) const;
  /// Length of the signal spanned by `frames` frames.
  std::size_t samples_for(std::size_t frames) const;
  /// Samples [begin, end) covered by full overlap-add support: from one window
  /// after the start to one window before the end of the spanned signal.
  struct Range {
    std::size_t begin;
    std::size_t end;
  };
  Range interior(std::size_t frames) const;
  void validate() const;
};

/// Periodic Hamming window, 0.54 - 0.46 cos(2 pi n / N).
std::vector<double> hamming_window(std::size_t length);

/// Frame m covers samples [m * hop, m * hop + window_len); no edge padding.
/// Throws std::invalid_argument if the signal is shorter than one window.
Spectrogram stft(const Waveform& x, const StftConfig& cfg = {});

/// Weighted overlap-add with window-square normalization. The output spans
/// (frames - 1) * hop + window_len samples and reproduces every sample
/// covered by at least one analysis frame.
Waveform istft(const Spectrogram& spec);

/// [2, T, K] tensor: channel 0 real, channel 1 imaginary.
Tensor pack_complex(const Spectrogram& spec);
Spectrogram unpack_complex(const Tensor& packed, const StftConfig& cfg,
                           double sample_rate = 48000.0);

/// Differentiable inverse STFT of a packed [2, T, K] tensor; returns [N].
Tensor istft_tensor(const Tensor& packed, const StftConfig& cfg);

}  // namespace concatenet

#endif  // CONCATENET_STFT_HPP_
