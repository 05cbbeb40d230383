// Copyright 2026 The ConcateNet Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "concatenet/layers.hpp"

#include <Eigen/Core>
#include <cmath>

namespace concatenet::layers {

namespace {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstMap = Eigen::Map<const RowMatrix>;
using MutMap = Eigen::Map<RowMatrix>;
using ConstVec = Eigen::Map<const Eigen::VectorXd>;
using MutVec = Eigen::Map<Eigen::VectorXd>;

void require_3d(const Tensor& x, const char* op) {
  if (x.dim() != 3 || x.numel() == 0) {
    throw ShapeError(std::string(op) + " expects a non-empty [C, T, F] tensor, got " +
                     shape_str(x.shape()));
  }
}

void require_stride(std::size_t stride_f) {
  if (stride_f != 1 && stride_f != 2) {
    throw std::invalid_argument("frequency stride must be 1 or 2, got " +
                                std::to_string(stride_f));
  }
}

// Valid output range [lo, hi) for out[fo] reading in[stride * fo + off].
struct TapRange {
  std::size_t lo;
  std::size_t hi;
};

TapRange tap_range(std::ptrdiff_t off, std::size_t stride, std::size_t bins_in,
                   std::size_t bins_out) {
  const auto s = static_cast<std::ptrdiff_t>(stride);
  const auto f_in = static_cast<std::ptrdiff_t>(bins_in);
  std::ptrdiff_t lo = off < 0 ? (-off + s - 1) / s : 0;
  std::ptrdiff_t hi = (f_in - 1 - off) >= 0 ? (f_in - 1 - off) / s + 1 : 0;
  hi = std::min<std::ptrdiff_t>(hi, static_cast<std::ptrdiff_t>(bins_out));
  if (hi < lo) hi = lo;
  return {static_cast<std::size_t>(lo), static_cast<std::size_t>(hi)};
}

// Strided 3x3 causal correlation of one input plane into one output plane.
//   out[t, fo] += sum_{lag, tap} w[lag, tap] * in[t - lag, stride * fo + tap - 1]
void correlate_plane(const double* in, const double* w, double* out, std::size_t frames,
                     std::size_t bins_in, std::size_t bins_out, std::size_t stride) {
  for (std::size_t lag = 0; lag < kKernel; ++lag) {
    for (std::size_t tap = 0; tap < kKernel; ++tap) {
      const double wv = w[lag * kKernel + tap];
      if (wv == 0.0) continue;
      const auto off = static_cast<std::ptrdiff_t>(tap) - 1;
      const auto r = tap_range(off, stride, bins_in, bins_out);
      for (std::size_t t = lag; t < frames; ++t) {
        const double* src = in + (t - lag) * bins_in;
        double* dst = out + t * bins_out;
        for (std::size_t fo = r.lo; fo < r.hi; ++fo) {
          dst[fo] += wv * src[static_cast<std::ptrdiff_t>(stride * fo) + off];
        }
      }
    }
  }
}

// Adjoint of correlate_plane with respect to the input and the kernel.
void correlate_plane_backward(const double* in, const double* w, const double* grad_out,
                              double* grad_in, double* grad_w, std::size_t frames,
                              std::size_t bins_in, std::size_t bins_out, std::size_t stride) {
  for (std::size_t lag = 0; lag < kKernel; ++lag) {
    for (std::size_t tap = 0; tap < kKernel; ++tap) {
      const double wv = w[lag * kKernel + tap];
      const auto off = static_cast<std::ptrdiff_t>(tap) - 1;
      const auto r = tap_range(off, stride, bins_in, bins_out);
      double acc = 0.0;
      for (std::size_t t = lag; t < frames; ++t) {
        const double* src = in + (t - lag) * bins_in;
        const double* g = grad_out + t * bins_out;
        double* gi = grad_in ? grad_in + (t - lag) * bins_in : nullptr;
        for (std::size_t fo = r.lo; fo < r.hi; ++fo) {
          const auto fi = static_cast<std::ptrdiff_t>(stride * fo) + off;
          acc += g[fo] * src[fi];
          if (gi) gi[fi] += wv * g[fo];
        }
      }
      if (grad_w) grad_w[lag * kKernel + tap] += acc;
    }
  }
}

// Transposed frequency-stride-2 plane: out[t, 2 fi + tap - 1] += w * in[t - lag, fi].
// This is exactly the input-adjoint of a stride-2 correlation from a [T, 2F]
// plane down to [T, F], so both directions reuse the strided kernels.
void transposed_plane(const double* in, const double* w, double* out, std::size_t frames,
                      std::size_t bins_in) {
  const std::size_t bins_out = 2 * bins_in;
  for (std::size_t lag = 0; lag < kKernel; ++lag) {
    for (std::size_t tap = 0; tap < kKernel; ++tap) {
      const double wv = w[lag * kKernel + tap];
      if (wv == 0.0) continue;
      const auto off = static_cast<std::ptrdiff_t>(tap) - 1;
      const auto r = tap_range(off, 2, bins_out, bins_in);
      for (std::size_t t = lag; t < frames; ++t) {
        const double* src = in + (t - lag) * bins_in;
        double* dst = out + t * bins_out;
        for (std::size_t fi = r.lo; fi < r.hi; ++fi) {
          dst[static_cast<std::ptrdiff_t>(2 * fi) + off] += wv * src[fi];
        }
      }
    }
  }
}

void transposed_plane_backward(const double* in, const double* w, const double* grad_out,
                               double* grad_in, double* grad_w, std::size_t frames,
                               std::size_t bins_in) {
  const std::size_t bins_out = 2 * bins_in;
  for (std::size_t lag = 0; lag < kKernel; ++lag) {
    for (std::size_t tap = 0; tap < kKernel; ++tap) {
      const double wv = w[lag * kKernel + tap];
      const auto off = static_cast<std::ptrdiff_t>(tap) - 1;
      const auto r = tap_range(off, 2, bins_out, bins_in);
      double acc = 0.0;
      for (std::size_t t = lag; t < frames; ++t) {
        const double* src = in + (t - lag) * bins_in;
        const double* g = grad_out + t * bins_out;
        double* gi = grad_in ? grad_in + (t - lag) * bins_in : nullptr;
        for (std::size_t fi = r.lo; fi < r.hi; ++fi) {
          const double gv = g[static_cast<std::ptrdiff_t>(2 * fi) + off];
          acc += gv * src[fi];
          if (gi) gi[fi] += wv * gv;
        }
      }
      if (grad_w) grad_w[lag * kKernel + tap] += acc;
    }
  }
}

double* grad_ptr(detail::Node& node) {
  return node.requires_grad ? node.grad_buffer().data() : nullptr;
}

}  // namespace

std::size_t conv_output_bins(std::size_t bins, std::size_t stride_f) {
  require_stride(stride_f);
  return stride_f == 1 ? bins : (bins + 1) / 2;
}

Tensor conv2d_causal(const Tensor& x, const Tensor& weight, const Tensor& bias,
                     std::size_t stride_f) {
  require_3d(x, "conv2d_causal");
  require_stride(stride_f);
  const std::size_t c_in = x.size(0), frames = x.size(1), bins = x.size(2);
  if (weight.dim() != 4 || weight.size(1) != c_in || weight.size(2) != kKernel ||
      weight.size(3) != kKernel) {
    throw ShapeError("conv2d_causal: weight " + shape_str(weight.shape()) +
                     " incompatible with input " + shape_str(x.shape()));
  }
  const std::size_t c_out = weight.size(0);
  if (bias.shape() != Shape{c_out}) {
    throw ShapeError("conv2d_causal: bias must be [" + std::to_string(c_out) + "]");
  }
  const std::size_t bins_out = conv_output_bins(bins, stride_f);
  const std::size_t plane_in = frames * bins, plane_out = frames * bins_out;
  const std::size_t ksz = kKernel * kKernel;

  std::vector<double> out(c_out * plane_out);
  auto xd = x.data();
  auto wd = weight.data();
  auto bd = bias.data();
  for (std::size_t co = 0; co < c_out; ++co) {
    double* dst = out.data() + co * plane_out;
    std::fill(dst, dst + plane_out, bd[co]);
    for (std::size_t ci = 0; ci < c_in; ++ci) {
      correlate_plane(xd.data() + ci * plane_in, wd.data() + (co * c_in + ci) * ksz, dst,
                      frames, bins, bins_out, stride_f);
    }
  }
  return Tensor::make_result(
      {c_out, frames, bins_out}, std::move(out), {x, weight, bias},
      [=](detail::Node& self) {
        auto& px = *self.parents[0];
        auto& pw = *self.parents[1];
        auto& pb = *self.parents[2];
        double* gx = grad_ptr(px);
        double* gw = grad_ptr(pw);
        if (pb.requires_grad) {
          auto& gb = pb.grad_buffer();
          for (std::size_t co = 0; co < c_out; ++co) {
            const double* g = self.grad.data() + co * plane_out;
            double acc = 0.0;
            for (std::size_t i = 0; i < plane_out; ++i) acc += g[i];
            gb[co] += acc;
          }
        }
        if (!gx && !gw) return;
        for (std::size_t co = 0; co < c_out; ++co) {
          for (std::size_t ci = 0; ci < c_in; ++ci) {
            const std::size_t wo = (co * c_in + ci) * ksz;
            correlate_plane_backward(px.data.data() + ci * plane_in, pw.data.data() + wo,
                                     self.grad.data() + co * plane_out,
                                     gx ? gx + ci * plane_in : nullptr, gw ? gw + wo : nullptr,
                                     frames, bins, bins_out, stride_f);
          }
        }
      });
}

Tensor depthwise_conv_causal(const Tensor& x, const Tensor& weight, std::size_t stride_f) {
  require_3d(x, "depthwise_conv_causal");
  require_stride(stride_f);
  const std::size_t channels = x.size(0), frames = x.size(1), bins = x.size(2);
  if (weight.shape() != Shape{channels, kKernel, kKernel}) {
    throw ShapeError("depthwise_conv_causal: weight " + shape_str(weight.shape()) +
                     " incompatible with input " + shape_str(x.shape()));
  }
  const std::size_t bins_out = conv_output_bins(bins, stride_f);
  const std::size_t plane_in = frames * bins, plane_out = frames * bins_out;
  const std::size_t ksz = kKernel * kKernel;

  std::vector<double> out(channels * plane_out, 0.0);
  for (std::size_t c = 0; c < channels; ++c) {
    correlate_plane(x.data().data() + c * plane_in, weight.data().data() + c * ksz,
                    out.data() + c * plane_out, frames, bins, bins_out, stride_f);
  }
  return Tensor::make_result(
      {channels, frames, bins_out}, std::move(out), {x, weight}, [=](detail::Node& self) {
        auto& px = *self.parents[0];
        auto& pw = *self.parents[1];
        double* gx = grad_ptr(px);
        double* gw = grad_ptr(pw);
        for (std::size_t c = 0; c < channels; ++c) {
          correlate_plane_backward(px.data.data() + c * plane_in, pw.data.data() + c * ksz,
                                   self.grad.data() + c * plane_out,
                                   gx ? gx + c * plane_in : nullptr, gw ? gw + c * ksz : nullptr,
                                   frames, bins, bins_out, stride_f);
        }
      });
}

Tensor pointwise_conv(const Tensor& x, const Tensor& weight, const Tensor& bias) {
  require_3d(x, "pointwise_conv");
  const std::size_t c_in = x.size(0), frames = x.size(1), bins = x.size(2);
  if (weight.dim() != 2 || weight.size(1) != c_in) {
    throw ShapeError("pointwise_conv: weight " + shape_str(weight.shape()) +
                     " incompatible with input " + shape_str(x.shape()));
  }
  const std::size_t c_out = weight.size(0);
  if (bias.shape() != Shape{c_out}) {
    throw ShapeError("pointwise_conv: bias must be [" + std::to_string(c_out) + "]");
  }
  const std::size_t plane = frames * bins;
  std::vector<double> out(c_out * plane);
  MutMap Y(out.data(), c_out, plane);
  Y.noalias() = ConstMap(weight.data().data(), c_out, c_in) *
                ConstMap(x.data().data(), c_in, plane);
  Y.colwise() += ConstVec(bias.data().data(), c_out);
  return Tensor::make_result(
      {c_out, frames, bins}, std::move(out), {x, weight, bias}, [=](detail::Node& self) {
        auto& px = *self.parents[0];
        auto& pw = *self.parents[1];
        auto& pb = *self.parents[2];
        ConstMap G(self.grad.data(), c_out, plane);
        if (px.requires_grad) {
          MutMap(px.grad_buffer().data(), c_in, plane).noalias() +=
              ConstMap(pw.data.data(), c_out, c_in).transpose() * G;
        }
        if (pw.requires_grad) {
          MutMap(pw.grad_buffer().data(), c_out, c_in).noalias() +=
              G * ConstMap(px.data.data(), c_in, plane).transpose();
        }
        if (pb.requires_grad) {
          MutVec(pb.grad_buffer().data(), c_out) += G.rowwise().sum();
        }
      });
}

Tensor depthwise_conv_transposed_freq(const Tensor& x, const Tensor& weight) {
  require_3d(x, "depthwise_conv_transposed_freq");
  const std::size_t channels = x.size(0), frames = x.size(1), bins = x.size(2);
  if (weight.shape() != Shape{channels, kKernel, kKernel}) {
    throw ShapeError("depthwise_conv_transposed_freq: weight " + shape_str(weight.shape()) +
                     " incompatible with input " + shape_str(x.shape()));
  }
  const std::size_t plane_in = frames * bins, plane_out = 2 * plane_in;
  const std::size_t ksz = kKernel * kKernel;
  std::vector<double> out(channels * plane_out, 0.0);
  for (std::size_t c = 0; c < channels; ++c) {
    transposed_plane(x.data().data() + c * plane_in, weight.data().data() + c * ksz,
                     out.data() + c * plane_out, frames, bins);
  }
  return Tensor::make_result(
      {channels, frames, 2 * bins}, std::move(out), {x, weight}, [=](detail::Node& self) {
        auto& px = *self.parents[0];
        auto& pw = *self.parents[1];
        double* gx = grad_ptr(px);
        double* gw = grad_ptr(pw);
        for (std::size_t c = 0; c < channels; ++c) {
          transposed_plane_backward(px.data.data() + c * plane_in, pw.data.data() + c * ksz,
                                    self.grad.data() + c * plane_out,
                                    gx ? gx + c * plane_in : nullptr, gw ? gw + c * ksz : nullptr,
                                    frames, bins);
        }
      });
}

Tensor batch_norm(const Tensor& x, BatchNormParams& params, bool training) {
  require_3d(x, "batch_norm");
  const std::size_t channels = x.size(0);
  const std::size_t count = x.size(1) * x.size(2);
  if (params.gamma.shape() != Shape{channels} || params.beta.shape() != Shape{channels} ||
      params.running_mean.shape() != Shape{channels} ||
      params.running_var.shape() != Shape{channels}) {
    throw ShapeError("batch_norm: parameters do not match " + std::to_string(channels) +
                     " channels");
  }
  auto xd = x.data();
  auto gamma = params.gamma.data();
  auto beta = params.beta.data();

  std::vector<double> mean(channels), inv_std(channels);
  if (training) {
    auto rm = params.running_mean.data();
    auto rv = params.running_var.data();
    for (std::size_t c = 0; c < channels; ++c) {
      const double* v = xd.data() + c * count;
      double m = 0.0;
      for (std::size_t i = 0; i < count; ++i) m += v[i];
      m /= static_cast<double>(count);
      double var = 0.0;
      for (std::size_t i = 0; i < count; ++i) var += (v[i] - m) * (v[i] - m);
      const double biased = var / static_cast<double>(count);
      const double unbiased = count > 1 ? var / static_cast<double>(count - 1) : biased;
      mean[c] = m;
      inv_std[c] = 1.0 / std::sqrt(biased + params.eps);
      rm[c] = (1.0 - params.momentum) * rm[c] + params.momentum * m;
      rv[c] = (1.0 - params.momentum) * rv[c] + params.momentum * unbiased;
    }
  } else {
    auto rm = params.running_mean.data();
    auto rv = params.running_var.data();
    for (std::size_t c = 0; c < channels; ++c) {
      mean[c] = rm[c];
      inv_std[c] = 1.0 / std::sqrt(rv[c] + params.eps);
    }
  }

  std::vector<double> xhat(x.numel()), out(x.numel());
  for (std::size_t c = 0; c < channels; ++c) {
    for (std::size_t i = 0; i < count; ++i) {
      const std::size_t k = c * count + i;
      xhat[k] = (xd[k] - mean[c]) * inv_std[c];
      out[k] = gamma[c] * xhat[k] + beta[c];
    }
  }
  return Tensor::make_result(
      x.shape(), std::move(out), {x, params.gamma, params.beta},
      [=, xhat = std::move(xhat), inv_std = std::move(inv_std)](detail::Node& self) {
        auto& px = *self.parents[0];
        auto& pg = *self.parents[1];
        auto& pb = *self.parents[2];
        const auto n = static_cast<double>(count);
        for (std::size_t c = 0; c < channels; ++c) {
          const double* g = self.grad.data() + c * count;
          const double* xh = xhat.data() + c * count;
          double sum_g = 0.0, sum_gx = 0.0;
          for (std::size_t i = 0; i < count; ++i) {
            sum_g += g[i];
            sum_gx += g[i] * xh[i];
          }
          if (pg.requires_grad) pg.grad_buffer()[c] += sum_gx;
          if (pb.requires_grad) pb.grad_buffer()[c] += sum_g;
          if (!px.requires_grad) continue;
          double* gx = px.grad_buffer().data() + c * count;
          const double gam = pg.data[c];
          if (training) {
            const double k = gam * inv_std[c] / n;
            for (std::size_t i = 0; i < count; ++i) {
              gx[i] += k * (n * g[i] - sum_g - xh[i] * sum_gx);
            }
          } else {
            const double k = gam * inv_std[c];
            for (std::size_t i = 0; i < count; ++i) gx[i] += k * g[i];
          }
        }
      });
}

Tensor gru(const Tensor& x, const GruParams& params, bool reverse) {
  if (x.dim() != 3) throw ShapeError("gru expects [N, L, D], got " + shape_str(x.shape()));
  const std::size_t batch = x.size(0), steps = x.size(1), features = x.size(2);
  if (params.w_hh.dim() != 2) throw ShapeError("gru: w_hh must be [3H, H]");
  const std::size_t hidden = params.w_hh.size(1);
  const std::size_t gates = 3 * hidden;
  if (params.w_hh.shape() != Shape{gates, hidden} ||
      params.w_ih.shape() != Shape{gates, features} || params.b_ih.shape() != Shape{gates} ||
      params.b_hh.shape() != Shape{gates}) {
    throw ShapeError("gru: parameters do not match input " + shape_str(x.shape()) +
                     " with hidden size " + std::to_string(hidden));
  }

  const std::size_t rows = batch * steps;
  // Input projections for every step at once: [N*L, 3H].
  RowMatrix in_proj = ConstMap(x.data().data(), rows, features) *
                      ConstMap(params.w_ih.data().data(), gates, features).transpose();
  in_proj.rowwise() += ConstVec(params.b_ih.data().data(), gates).transpose();

  ConstMap w_hh(params.w_hh.data().data(), gates, hidden);
  ConstVec b_hh(params.b_hh.data().data(), gates);

  // Saved per step: r, z, n, (W_hn h + b_hn), h_prev.
  std::vector<double> saved(rows * 5 * hidden);
  std::vector<double> out(rows * hidden);
  Eigen::VectorXd h(hidden), hproj(gates);
  for (std::size_t b = 0; b < batch; ++b) {
    h.setZero();
    for (std::size_t s = 0; s < steps; ++s) {
      const std::size_t t = reverse ? steps - 1 - s : s;
      const std::size_t row = b * steps + t;
      hproj.noalias() = w_hh * h + b_hh;
      const double* gi = in_proj.data() + row * gates;
      double* sv = saved.data() + row * 5 * hidden;
      double* ho = out.data() + row * hidden;
      for (std::size_t j = 0; j < hidden; ++j) {
        const double r = 1.0 / (1.0 + std::exp(-(gi[j] + hproj[j])));
        const double z = 1.0 / (1.0 + std::exp(-(gi[hidden + j] + hproj[hidden + j])));
        const double hn = hproj[2 * hidden + j];
        const double n = std::tanh(gi[2 * hidden + j] + r * hn);
        sv[j] = r;
        sv[hidden + j] = z;
        sv[2 * hidden + j] = n;
        sv[3 * hidden + j] = hn;
        sv[4 * hidden + j] = h[j];
        ho[j] = (1.0 - z) * n + z * h[j];
      }
      h = Eigen::Map<const Eigen::VectorXd>(ho, hidden);
    }
  }

  return Tensor::make_result(
      {batch, steps, hidden}, std::move(out),
      {x, params.w_ih, params.w_hh, params.b_ih, params.b_hh},
      [=, saved = std::move(saved)](detail::Node& self) {
        auto& px = *self.parents[0];
        auto& pwi = *self.parents[1];
        auto& pwh = *self.parents[2];
        auto& pbi = *self.parents[3];
        auto& pbh = *self.parents[4];
        ConstMap w_ih_m(pwi.data.data(), gates, features);
        ConstMap w_hh_m(pwh.data.data(), gates, hidden);

        // Pre-activation gradients for every step; weight grads are then two GEMMs.
        RowMatrix d_in(rows, gates), d_hid(rows, gates);
        RowMatrix h_prev(rows, hidden);
        Eigen::VectorXd dh(hidden), dh_next(hidden);
        for (std::size_t b = 0; b < batch; ++b) {
          dh_next.setZero();
          for (std::size_t s = steps; s-- > 0;) {
            const std::size_t t = reverse ? steps - 1 - s : s;
            const std::size_t row = b * steps + t;
            const double* sv = saved.data() + row * 5 * hidden;
            const double* go = self.grad.data() + row * hidden;
            double* di = d_in.data() + row * gates;
            double* dhd = d_hid.data() + row * gates;
            for (std::size_t j = 0; j < hidden; ++j) {
              const double r = sv[j], z = sv[hidden + j], n = sv[2 * hidden + j];
              const double hn = sv[3 * hidden + j], hp = sv[4 * hidden + j];
              h_prev(row, j) = hp;
              const double dht = go[j] + dh_next[j];
              const double dn = dht * (1.0 - z) * (1.0 - n * n);
              const double dz = dht * (hp - n) * z * (1.0 - z);
              const double dr = dn * hn * r * (1.0 - r);
              di[j] = dr;
              di[hidden + j] = dz;
              di[2 * hidden + j] = dn;
              dhd[j] = dr;
              dhd[hidden + j] = dz;
              dhd[2 * hidden + j] = dn * r;
              dh[j] = dht * z;
            }
            dh.noalias() += w_hh_m.transpose() * Eigen::Map<const Eigen::VectorXd>(dhd, gates);
            dh_next = dh;
          }
        }
        if (px.requires_grad) {
          MutMap(px.grad_buffer().data(), rows, features).noalias() += d_in * w_ih_m;
        }
        if (pwi.requires_grad) {
          MutMap(pwi.grad_buffer().data(), gates, features).noalias() +=
              d_in.transpose() * ConstMap(px.data.data(), rows, features);
        }
        if (pwh.requires_grad) {
          MutMap(pwh.grad_buffer().data(), gates, hidden).noalias() += d_hid.transpose() * h_prev;
        }
        if (pbi.requires_grad) MutVec(pbi.grad_buffer().data(), gates) += d_in.colwise().sum().transpose();
        if (pbh.requires_grad) MutVec(pbh.grad_buffer().data(), gates) += d_hid.colwise().sum().transpose();
      });
}

namespace {

Tensor concat_last(const Tensor& a, const Tensor& b) {
  const std::size_t wa = a.shape().back(), wb = b.shape().back();
  const std::size_t rows = a.numel() / wa;
  Shape shape = a.shape();
  shape.back() = wa + wb;
  std::vector<double> out(rows * (wa + wb));
  for (std::size_t r = 0; r < rows; ++r) {
    std::copy_n(a.data().data() + r * wa, wa, out.data() + r * (wa + wb));
    std::copy_n(b.data().data() + r * wb, wb, out.data() + r * (wa + wb) + wa);
  }
  return Tensor::make_result(std::move(shape), std::move(out), {a, b},
                             [=](detail::Node& self) {
                               auto& pa = *self.parents[0];
                               auto& pb = *self.parents[1];
                               const std::size_t w = wa + wb;
                               if (pa.requires_grad) {
                                 auto& g = pa.grad_buffer();
                                 for (std::size_t r = 0; r < rows; ++r)
                                   for (std::size_t j = 0; j < wa; ++j)
                                     g[r * wa + j] += self.grad[r * w + j];
                               }
                               if (pb.requires_grad) {
                                 auto& g = pb.grad_buffer();
                                 for (std::size_t r = 0; r < rows; ++r)
                                   for (std::size_t j = 0; j < wb; ++j)
                                     g[r * wb + j] += self.grad[r * w + wa + j];
                               }
                             });
}

}  // namespace

Tensor bidirectional_gru(const Tensor& x, const GruParams& forward, const GruParams& backward) {
  if (x.dim() != 3) throw ShapeError("bidirectional_gru expects [N, L, D]");
  const std::size_t features = x.size(2);
  if (features % 2 != 0) {
    throw ShapeError("bidirectional GRU needs an even feature size, got " +
                     std::to_string(features));
  }
  if (forward.hidden() != features / 2 || backward.hidden() != features / 2) {
    throw ShapeError("bidirectional GRU hidden size must be half the feature size");
  }
  return concat_last(gru(x, forward, false), gru(x, backward, true));
}

}  // namespace concatenet::layers
