// Copyright 2026 The ConcateNet Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#ifndef CONCATENET_FILTERBANK_HPP_
#define CONCATENET_FILTERBANK_HPP_

#include <iosfwd>
#include <vector>

#include "concatenet/tensor.hpp"

namespace concatenet {

struct FilterbankSpec {
  std::size_t bins = 1025;
  std::size_t bands = 256;
  double sample_rate = 48000.0;
  double f_min = 50.0;
  double f_max = 23000.0;
};

/// Fixed gammatone band mapping between linear STFT bins and auditory bands.
struct FilterbankMatrices {
  Tensor analysis;   // [B, K], rows L1-normalized
  Tensor synthesis;  // [K, B]
  std::vector<double> centers_hz;

  std::size_t bands() const { return analysis.size(0); }
  std::size_t bins() const { return analysis.size(1); }
};

/// Glasberg-Moore equivalent rectangular bandwidth in Hz.
double erb_hz(double f_hz);
/// ERB-rate scale (number of ERBs below f) and its inverse.
double erb_rate(double f_hz);
double erb_rate_to_hz(double rate);

/// Builds B bands with centers uniformly spaced on the ERB-rate scale over
/// [f_min, f_max]. Row b holds the 4th-order gammatone magnitude response
///   |H_b(f)| = (1 + ((f - f_c) / b_w)^2)^-2,  b_w = 1.019 ERB(f_c),
/// sampled at the bin frequencies and L1-normalized. The synthesis matrix is
/// the transpose rescaled per bin so a flat band vector maps back to a flat
/// spectrum.
FilterbankMatrices build_filterbank(const FilterbankSpec& spec = {});

/// [C, T, K] -> [C, T, B]
Tensor analyze(const Tensor& x, const FilterbankMatrices& fb);
/// [C, T, B] -> [C, T, K]
Tensor synthesize(const Tensor& x, const FilterbankMatrices& fb);

/// Writes the analysis matrix as CSV, one band per row, preceded by a
/// header row of bin frequencies and a leading center-frequency column.
void write_analysis_csv(std::ostream& os, const FilterbankMatrices& fb, double sample_rate);

}  // namespace concatenet

#endif  // CONCATENET_FILTERBANK_HPP_
