// Copyright 2026 The ConcateNet Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#ifndef CONCATENET_MASKING_HPP_
#define CONCATENET_MASKING_HPP_

#include "concatenet/stft.hpp"
#include "concatenet/tensor.hpp"

namespace concatenet {

/// Per-bin complex multiplier, laid out like Spectrogram (frame-major).
struct ComplexMask {
  std::size_t frames = 0;
  std::size_t bins = 0;
  std::vector<double> re;
  std::vector<double> im;

  static ComplexMask identity(std::size_t frames, std::size_t bins);
  static ComplexMask from_packed(const Tensor& packed);
};

/// S(m, k) = M(m, k) Y(m, k).
Spectrogram apply_complex_mask(const Spectrogram& y, const ComplexMask& mask);

/// Neighborhood extent for multi-frame / multi-bin filtering. Tap (p, q)
/// reads Y(m - p, k - q) for p in [-lookahead, history] and
/// q in [-above, below].
struct FilterSupport {
  std::size_t lookahead = 0;  // P1
  std::size_t history = 0;    // P2
  std::size_t above = 0;      // Q1
  std::size_t below = 0;      // Q2

  std::size_t time_taps() const { return lookahead + history + 1; }
  std::size_t freq_taps() const { return above + below + 1; }
};

/// S(m, k) = sum_p sum_q M_pq(m, k) Y(m - p, k - q) with complex arithmetic
/// and zeros outside the spectrogram. coeffs is
/// [time_taps, freq_taps, 2, T, K]; index (p + lookahead, q + above).
Spectrogram deep_filter(const Spectrogram& y, const Tensor& coeffs, const FilterSupport& support);

/// S = S1 + residual (complex addition).
Spectrogram nlr_combine(const Spectrogram& s1, const Spectrogram& residual);

}  // namespace concatenet

#endif  // CONCATENET_MASKING_HPP_
