// Copyright 2026 The ConcateNet Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "concatenet/filterbank.hpp"

#include <cmath>
#include <ostream>
#include <stdexcept>
#include <string>

#include "concatenet/ops.hpp"

namespace concatenet {

double erb_hz(double f_hz) { return 24.7 * (4.37 * f_hz / 1000.0 + 1.0); }

double erb_rate(double f_hz) { return 21.4 * std::log10(4.37 * f_hz / 1000.0 + 1.0); }

double erb_rate_to_hz(double rate) {
  return (std::pow(10.0, rate / 21.4) - 1.0) * 1000.0 / 4.37;
}

FilterbankMatrices build_filterbank(const FilterbankSpec& spec) {
  if (spec.bands < 2) throw std::invalid_argument("filterbank needs at least 2 bands");
  if (spec.bins < 2) throw std::invalid_argument("filterbank needs at least 2 bins");
  if (!(spec.sample_rate > 0.0) || !(spec.f_min > 0.0) || !(spec.f_min < spec.f_max) ||
      spec.f_max > spec.sample_rate / 2.0) {
    throw std::invalid_argument("invalid filterbank frequency range [" +
                                std::to_string(spec.f_min) + ", " + std::to_string(spec.f_max) +
                                "] Hz at " + std::to_string(spec.sample_rate) + " Hz");
  }
  const std::size_t bands = spec.bands, bins = spec.bins;
  const double bin_hz = spec.sample_rate / (2.0 * static_cast<double>(bins - 1));

  FilterbankMatrices fb;
  fb.centers_hz.resize(bands);
  const double lo = erb_rate(spec.f_min), hi = erb_rate(spec.f_max);
  for (std::size_t b = 0; b < bands; ++b) {
    fb.centers_hz[b] =
        erb_rate_to_hz(lo + (hi - lo) * static_cast<double>(b) / static_cast<double>(bands - 1));
  }

  std::vector<double> analysis(bands * bins);
  for (std::size_t b = 0; b < bands; ++b) {
    const double fc = fb.centers_hz[b];
    const double bw = 1.019 * erb_hz(fc);
    double l1 = 0.0;
    for (std::size_t k = 0; k < bins; ++k) {
      const double x = (static_cast<double>(k) * bin_hz - fc) / bw;
      const double r = 1.0 / ((1.0 + x * x) * (1.0 + x * x));
      analysis[b * bins + k] = r;
      l1 += r;
    }
    for (std::size_t k = 0; k < bins; ++k) analysis[b * bins + k] /= l1;
  }

  // Rows sum to one, so synthesis * analysis * 1 = 1 when each bin's
  // synthesis weights are its analysis column divided by the column sum.
  std::vector<double> synthesis(bins * bands);
  for (std::size_t k = 0; k < bins; ++k) {
    double col = 0.0;
    for (std::size_t b = 0; b < bands; ++b) col += analysis[b * bins + k];
    for (std::size_t b = 0; b < bands; ++b) synthesis[k * bands + b] = analysis[b * bins + k] / col;
  }
  fb.analysis = Tensor({bands, bins}, std::move(analysis));
  fb.synthesis = Tensor({bins, bands}, std::move(synthesis));
  return fb;
}

Tensor analyze(const Tensor& x, const FilterbankMatrices& fb) {
  if (x.dim() != 3 || x.size(2) != fb.bins()) {
    throw ShapeError("filterbank analysis expects [C, T, " + std::to_string(fb.bins()) +
                     "], got " + shape_str(x.shape()));
  }
  return ops::matmul_last(x, fb.analysis);
}

Tensor synthesize(const Tensor& x, const FilterbankMatrices& fb) {
  if (x.dim() != 3 || x.size(2) != fb.bands()) {
    throw ShapeError("filterbank synthesis expects [C, T, " + std::to_string(fb.bands()) +
                     "], got " + shape_str(x.shape()));
  }
  return ops::matmul_last(x, fb.synthesis);
}

void write_analysis_csv(std::ostream& os, const FilterbankMatrices& fb, double sample_rate) {
  const std::size_t bins = fb.bins(), bands = fb.bands();
  const double bin_hz = sample_rate / (2.0 * static_cast<double>(bins - 1));
  os << "center_hz";
  for (std::size_t k = 0; k < bins; ++k) os << ',' << static_cast<double>(k) * bin_hz;
  os << '\n';
  auto a = fb.analysis.data();
  for (std::size_t b = 0; b < bands; ++b) {
    os << fb.centers_hz[b];
    for (std::size_t k = 0; k < bins; ++k) os << ',' << a[b * bins + k];
    os << '\n';
  }
}

}  // namespace concatenet
