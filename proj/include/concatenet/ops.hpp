// Copyright 2026 The ConcateNet Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#ifndef CONCATENET_OPS_HPP_
#define CONCATENET_OPS_HPP_

#include <array>

#include "concatenet/tensor.hpp"

namespace concatenet::ops {

// Element-wise. Binary ops require identical shapes (no broadcasting).
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& x, double factor);
Tensor square(const Tensor& x);
Tensor relu(const Tensor& x);
Tensor tanh(const Tensor& x);
Tensor sigmoid(const Tensor& x);

/// Sum of all elements as a 0-d tensor.
Tensor sum(const Tensor& x);
Tensor mean(const Tensor& x);
/// Sum of w[i] * x[i] with a constant weight vector; used to reduce
/// non-scalar outputs to a scalar in tests and gradient checks.
Tensor weighted_sum(const Tensor& x, std::span<const double> weights);

/// Concatenates along axis 0. Trailing dimensions must agree.
Tensor concat0(const Tensor& a, const Tensor& b);

/// Axis permutation of a 3-d tensor: out.shape[i] = x.shape[perm[i]].
Tensor permute3(const Tensor& x, std::array<std::size_t, 3> perm);

/// Applies a matrix along the last axis: out[..., r] = sum_k x[..., k] * m[r, k].
/// m is typically constant (filterbank matrices) but gradients flow to it if
/// it requires grad.
Tensor matmul_last(const Tensor& x, const Tensor& m);

/// Complex element-wise product of packed [2, T, K] tensors
/// (channel 0 = real, channel 1 = imaginary).
Tensor complex_multiply(const Tensor& a, const Tensor& b);

/// Real and imaginary parts of (ar + i ai)(br + i bi). Shared by every
/// complex-product path so that all of them round identically.
inline void complex_mul_elem(double ar, double ai, double br, double bi,
                             double& out_re, double& out_im) {
  out_re = ar * br - ai * bi;
  out_im = ar * bi + ai * br;
}

}  // namespace concatenet::ops

#endif  // CONCATENET_OPS_HPP_
