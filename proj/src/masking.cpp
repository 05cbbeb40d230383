// Copyright 2026 The ConcateNet Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "concatenet/masking.hpp"

#include "concatenet/ops.hpp"

namespace concatenet {

ComplexMask ComplexMask::identity(std::size_t frames, std::size_t bins) {
  return {frames, bins, std::vector<double>(frames * bins, 1.0),
          std::vector<double>(frames * bins, 0.0)};
}

ComplexMask ComplexMask::from_packed(const Tensor& packed) {
  if (packed.dim() != 3 || packed.size(0) != 2) {
    throw ShapeError("mask tensor must be [2, T, K], got " + shape_str(packed.shape()));
  }
  const std::size_t n = packed.size(1) * packed.size(2);
  auto d = packed.data();
  return {packed.size(1), packed.size(2), {d.begin(), d.begin() + static_cast<std::ptrdiff_t>(n)},
          {d.begin() + static_cast<std::ptrdiff_t>(n), d.end()}};
}

Spectrogram apply_complex_mask(const Spectrogram& y, const ComplexMask& mask) {
  if (y.frames != mask.frames || y.bins != mask.bins) {
    throw ShapeError("mask [" + std::to_string(mask.frames) + ", " + std::to_string(mask.bins) +
                     "] does not match spectrogram [" + std::to_string(y.frames) + ", " +
                     std::to_string(y.bins) + "]");
  }
  Spectrogram out = y;
  for (std::size_t i = 0; i < y.re.size(); ++i) {
    ops::complex_mul_elem(mask.re[i], mask.im[i], y.re[i], y.im[i], out.re[i], out.im[i]);
  }
  return out;
}

Spectrogram deep_filter(const Spectrogram& y, const Tensor& coeffs, const FilterSupport& support) {
  const std::size_t frames = y.frames, bins = y.bins;
  const std::size_t pt = support.time_taps(), qt = support.freq_taps();
  if (pt > frames || qt > bins) {
    throw std::invalid_argument("filter support " + std::to_string(pt) + "x" +
                                std::to_string(qt) + " exceeds spectrogram " +
                                std::to_string(frames) + "x" + std::to_string(bins));
  }
  if (coeffs.shape() != Shape{pt, qt, 2, frames, bins}) {
    throw ShapeError("deep filter coefficients " + shape_str(coeffs.shape()) +
                     " do not match support and spectrogram");
  }
  Spectrogram out = Spectrogram::zeros(frames, bins, y.window_len, y.hop, y.sample_rate);
  const std::size_t plane = frames * bins;
  auto c = coeffs.data();
  for (std::size_t pi = 0; pi < pt; ++pi) {
    const auto p = static_cast<std::ptrdiff_t>(pi) - static_cast<std::ptrdiff_t>(support.lookahead);
    for (std::size_t qi = 0; qi < qt; ++qi) {
      const auto q = static_cast<std::ptrdiff_t>(qi) - static_cast<std::ptrdiff_t>(support.above);
      const double* mre = c.data() + (pi * qt + qi) * 2 * plane;
      const double* mim = mre + plane;
      for (std::size_t m = 0; m < frames; ++m) {
        const auto src_m = static_cast<std::ptrdiff_t>(m) - p;
        if (src_m < 0 || src_m >= static_cast<std::ptrdiff_t>(frames)) continue;
        for (std::size_t k = 0; k < bins; ++k) {
          const auto src_k = static_cast<std::ptrdiff_t>(k) - q;
          if (src_k < 0 || src_k >= static_cast<std::ptrdiff_t>(bins)) continue;
          const std::size_t dst = m * bins + k;
          const std::size_t src = static_cast<std::size_t>(src_m) * bins + static_cast<std::size_t>(src_k);
          double re = 0.0, im = 0.0;
          ops::complex_mul_elem(mre[dst], mim[dst], y.re[src], y.im[src], re, im);
          out.re[dst] += re;
          out.im[dst] += im;
        }
      }
    }
  }
  return out;
}

Spectrogram nlr_combine(const Spectrogram& s1, const Spectrogram& residual) {
  if (!s1.same_layout(residual)) {
    throw ShapeError("refinement residual does not match the initial estimate");
  }
  Spectrogram out = s1;
  for (std::size_t i = 0; i < out.re.size(); ++i) {
    out.re[i] += residual.re[i];
    out.im[i] += residual.im[i];
  }
  return out;
}

}  // namespace concatenet
