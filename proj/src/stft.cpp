// Copyright 2026 The ConcateNet Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "concatenet/stft.hpp"

#include <fftw3.h>

#include <cmath>
#include <mutex>
#include <numbers>
#include <stdexcept>
#include <string>

namespace concatenet {

namespace {

// FFTW's planner is not thread-safe; execution on distinct plans is.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

// Real <-> half-complex transforms of one fixed length with owned buffers.
class RealFft {
 public:
  explicit RealFft(std::size_t n) : n_(n) {
    real_ = fftw_alloc_real(n);
    spec_ = fftw_alloc_complex(n / 2 + 1);
    std::lock_guard<std::mutex> lock(planner_mutex());
    forward_ = fftw_plan_dft_r2c_1d(static_cast<int>(n), real_, spec_, FFTW_ESTIMATE);
    inverse_ = fftw_plan_dft_c2r_1d(static_cast<int>(n), spec_, real_, FFTW_ESTIMATE);
  }
  ~RealFft() {
    {
      std::lock_guard<std::mutex> lock(planner_mutex());
      fftw_destroy_plan(forward_);
      fftw_destroy_plan(inverse_);
    }
    fftw_free(real_);
    fftw_free(spec_);
  }
  RealFft(const RealFft&) = delete;
  RealFft& operator=(const RealFft&) = delete;

  double* real() { return real_; }
  fftw_complex* spec() { return spec_; }
  void forward() { fftw_execute(forward_); }
  // Unnormalized: the result is n times the inverse DFT.
  void inverse() { fftw_execute(inverse_); }
  std::size_t size() const { return n_; }

 private:
  std::size_t n_;
  double* real_;
  fftw_complex* spec_;
  fftw_plan forward_;
  fftw_plan inverse_;
};

// Sum of squared windows landing on each output sample.
std::vector<double> ola_norm(const StftConfig& cfg, const std::vector<double>& window,
                             std::size_t frames) {
  std::vector<double> norm(cfg.samples_for(frames), 0.0);
  for (std::size_t m = 0; m < frames; ++m)
    for (std::size_t j = 0; j < cfg.window_len; ++j)
      norm[m * cfg.hop + j] += window[j] * window[j];
  return norm;
}

// Shared synthesis: frames of (re, im) with K bins -> normalized OLA signal.
std::vector<double> overlap_add(const StftConfig& cfg, std::size_t frames, const double* re,
                                const double* im) {
  const std::size_t n = cfg.window_len, bins = cfg.bins();
  const auto window = hamming_window(n);
  const auto norm = ola_norm(cfg, window, frames);
  std::vector<double> out(norm.size(), 0.0);
  RealFft fft(n);
  const double inv_n = 1.0 / static_cast<double>(n);
  for (std::size_t m = 0; m < frames; ++m) {
    for (std::size_t k = 0; k < bins; ++k) {
      fft.spec()[k][0] = re[m * bins + k];
      fft.spec()[k][1] = im[m * bins + k];
    }
    fft.inverse();
    for (std::size_t j = 0; j < n; ++j) {
      out[m * cfg.hop + j] += window[j] * fft.real()[j] * inv_n;
    }
  }
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = norm[i] > 0.0 ? out[i] / norm[i] : 0.0;
  return out;
}

}  // namespace

Spectrogram Spectrogram::zeros(std::size_t frames, std::size_t bins, std::size_t window_len,
                               std::size_t hop, double sample_rate) {
  Spectrogram s;
  s.frames = frames;
  s.bins = bins;
  s.re.assign(frames * bins, 0.0);
  s.im.assign(frames * bins, 0.0);
  s.window_len = window_len;
  s.hop = hop;
  s.sample_rate = sample_rate;
  return s;
}

void StftConfig::validate() const {
  if (window_len < 2 || window_len % 2 != 0) {
    throw std::invalid_argument("window length must be even and >= 2, got " +
                                std::to_string(window_len));
  }
  if (hop == 0 || hop > window_len) {
    throw std::invalid_argument("hop must be in [1, window_len], got " + std::to_string(hop));
  }
}

std::size_t StftConfig::frames_for(std::size_t samples) const {
  if (samples < window_len) return 0;
  return 1 + (samples - window_len) / hop;
}

std::size_t StftConfig::samples_for(std::size_t frames) const {
  return frames == 0 ? 0 : (frames - 1) * hop + window_len;
}

StftConfig::Range StftConfig::interior(std::size_t frames) const {
  const std::size_t total = samples_for(frames);
  if (total < 2 * window_len) return {window_len, window_len};
  return {window_len, total - window_len};
}

std::vector<double> hamming_window(std::size_t length) {
  std::vector<double> w(length);
  for (std::size_t i = 0; i < length; ++i) {
    w[i] = 0.54 - 0.46 * std::cos(2.0 * std::numbers::pi * static_cast<double>(i) /
                                  static_cast<double>(length));
  }
  return w;
}

Spectrogram stft(const Waveform& x, const StftConfig& cfg) {
  cfg.validate();
  if (x.size() < cfg.window_len) {
    throw std::invalid_argument("signal of " + std::to_string(x.size()) +
                                " samples is shorter than one window (" +
                                std::to_string(cfg.window_len) + ")");
  }
  const std::size_t frames = cfg.frames_for(x.size());
  const std::size_t bins = cfg.bins();
  auto spec = Spectrogram::zeros(frames, bins, cfg.window_len, cfg.hop, x.sample_rate);
  const auto window = hamming_window(cfg.window_len);
  RealFft fft(cfg.window_len);
  for (std::size_t m = 0; m < frames; ++m) {
    const double* src = x.samples.data() + m * cfg.hop;
    for (std::size_t j = 0; j < cfg.window_len; ++j) fft.real()[j] = window[j] * src[j];
    fft.forward();
    for (std::size_t k = 0; k < bins; ++k) {
      spec.re[m * bins + k] = fft.spec()[k][0];
      spec.im[m * bins + k] = fft.spec()[k][1];
    }
  }
  return spec;
}

Waveform istft(const Spectrogram& spec) {
  StftConfig cfg{spec.window_len, spec.hop};
  cfg.validate();
  if (spec.bins != cfg.bins() || spec.re.size() != spec.frames * spec.bins ||
      spec.im.size() != spec.re.size()) {
    throw std::invalid_argument("spectrogram with " + std::to_string(spec.bins) +
                                " bins does not match window length " +
                                std::to_string(spec.window_len));
  }
  return {overlap_add(cfg, spec.frames, spec.re.data(), spec.im.data()), spec.sample_rate};
}

Tensor pack_complex(const Spectrogram& spec) {
  std::vector<double> data;
  data.reserve(2 * spec.re.size());
  data.insert(data.end(), spec.re.begin(), spec.re.end());
  data.insert(data.end(), spec.im.begin(), spec.im.end());
  return Tensor({2, spec.frames, spec.bins}, std::move(data));
}

Spectrogram unpack_complex(const Tensor& packed, const StftConfig& cfg, double sample_rate) {
  if (packed.dim() != 3 || packed.size(0) != 2) {
    throw ShapeError("unpack_complex expects [2, T, K], got " + shape_str(packed.shape()));
  }
  const std::size_t frames = packed.size(1), bins = packed.size(2);
  Spectrogram s;
  s.frames = frames;
  s.bins = bins;
  auto d = packed.data();
  s.re.assign(d.begin(), d.begin() + static_cast<std::ptrdiff_t>(frames * bins));
  s.im.assign(d.begin() + static_cast<std::ptrdiff_t>(frames * bins), d.end());
  s.window_len = cfg.window_len;
  s.hop = cfg.hop;
  s.sample_rate = sample_rate;
  return s;
}

Tensor istft_tensor(const Tensor& packed, const StftConfig& cfg) {
  cfg.validate();
  if (packed.dim() != 3 || packed.size(0) != 2 || packed.size(2) != cfg.bins()) {
    throw ShapeError("istft_tensor expects [2, T, " + std::to_string(cfg.bins()) + "], got " +
                     shape_str(packed.shape()));
  }
  const std::size_t frames = packed.size(1), bins = cfg.bins();
  const double* re = packed.data().data();
  const double* im = re + frames * bins;
  auto out = overlap_add(cfg, frames, re, im);
  const std::size_t length = out.size();
  return Tensor::make_result(
      {length}, std::move(out), {packed}, [cfg, frames, bins](detail::Node& self) {
        auto& p = *self.parents[0];
        if (!p.requires_grad) return;
        // Adjoint of: x[n] = sum_m w[n - m hop] irfft(X_m)[n - m hop] / norm[n].
        // For u = w * g / norm on one frame, d/dRe X_k = c_k Re(rfft(u)_k) / N and
        // d/dIm X_k = c_k Im(rfft(u)_k) / N, with c_k = 1 at DC/Nyquist, else 2.
        const std::size_t n = cfg.window_len;
        const auto window = hamming_window(n);
        const auto norm = ola_norm(cfg, window, frames);
        auto& g = p.grad_buffer();
        RealFft fft(n);
        const double inv_n = 1.0 / static_cast<double>(n);
        for (std::size_t m = 0; m < frames; ++m) {
          for (std::size_t j = 0; j < n; ++j) {
            const std::size_t s = m * cfg.hop + j;
            fft.real()[j] = norm[s] > 0.0 ? window[j] * self.grad[s] / norm[s] : 0.0;
          }
          fft.forward();
          for (std::size_t k = 0; k < bins; ++k) {
            const double c = (k == 0 || k == bins - 1) ? inv_n : 2.0 * inv_n;
            g[m * bins + k] += c * fft.spec()[k][0];
            g[frames * bins + m * bins + k] += c * fft.spec()[k][1];
          }
        }
      });
}

}  // namespace concatenet
