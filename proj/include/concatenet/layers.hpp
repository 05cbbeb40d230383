// Copyright 2026 The ConcateNet Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#ifndef CONCATENET_LAYERS_HPP_
#define CONCATENET_LAYERS_HPP_

#include "concatenet/tensor.hpp"

// Differentiable layer primitives. Feature maps are [channels, time, freq].
//
// All 3x3 kernels are stored as [..., lag, freq_tap]: lag 0 is the current
// frame, lag 2 the frame two steps in the past; freq_tap 0/1/2 reads input
// bin (stride * f_out - 1, stride * f_out, stride * f_out + 1). Time padding
// is two frames of zeros in the past and none in the future, so output
// frame t never reads input frames after t.

namespace concatenet::layers {

inline constexpr std::size_t kKernel = 3;

/// Output frequency size of a strided causal conv: F for stride 1,
/// ceil(F / 2) for stride 2.
std::size_t conv_output_bins(std::size_t bins, std::size_t stride_f);

/// Full 3x3 causal convolution. weight [C_out, C_in, 3, 3], bias [C_out].
Tensor conv2d_causal(const Tensor& x, const Tensor& weight, const Tensor& bias,
                     std::size_t stride_f = 1);

/// Per-channel 3x3 causal convolution without bias. weight [C, 3, 3].
Tensor depthwise_conv_causal(const Tensor& x, const Tensor& weight,
                             std::size_t stride_f = 1);

/// 1x1 channel mixing. weight [C_out, C_in], bias [C_out].
Tensor pointwise_conv(const Tensor& x, const Tensor& weight, const Tensor& bias);

/// Per-channel transposed 3x3 convolution with stride 2 along frequency:
/// [C, T, F] -> [C, T, 2F]. Input bin f feeds output bins 2f-1, 2f, 2f+1
/// through freq taps 0, 1, 2; time handling matches depthwise_conv_causal.
Tensor depthwise_conv_transposed_freq(const Tensor& x, const Tensor& weight);

struct BatchNormParams {
  Tensor gamma;         // [C], trainable
  Tensor beta;          // [C], trainable
  Tensor running_mean;  // [C], buffer
  Tensor running_var;   // [C], buffer
  double eps = 1e-5;
  double momentum = 0.1;
};

/// Per-channel normalization over the time and frequency axes. Training mode
/// normalizes with the batch statistics and updates the running estimates
/// (unbiased variance); eval mode uses the running estimates and mutates
/// nothing.
Tensor batch_norm(const Tensor& x, BatchNormParams& params, bool training);

struct GruParams {
  Tensor w_ih;  // [3H, D], gate order: reset, update, candidate
  Tensor w_hh;  // [3H, H]
  Tensor b_ih;  // [3H]
  Tensor b_hh;  // [3H]

  std::size_t hidden() const { return w_hh.shape()[1]; }
};

/// Single-direction GRU over a batch of sequences. x is [N, L, D]; returns
/// [N, L, H]. The initial state is zero. With reverse=true step L-1 is
/// processed first, so output l depends on inputs l..L-1.
///
///   r  = sigmoid(W_ir x + b_ir + W_hr h + b_hr)
///   z  = sigmoid(W_iz x + b_iz + W_hz h + b_hz)
///   n  = tanh(W_in x + b_in + r * (W_hn h + b_hn))
///   h' = (1 - z) * n + z * h
Tensor gru(const Tensor& x, const GruParams& params, bool reverse = false);

/// Bidirectional GRU whose two directions each have hidden size D / 2,
/// concatenated on the feature axis so the output width equals the input
/// width. Throws ShapeError for odd D.
Tensor bidirectional_gru(const Tensor& x, const GruParams& forward,
                         const GruParams& backward);

}  // namespace concatenet::layers

#endif  // CONCATENET_LAYERS_HPP_
