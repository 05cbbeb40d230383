// Copyright 2026 The ConcateNet Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "concatenet/ops.hpp"

#include <Eigen/Core>
#include <cmath>

namespace concatenet::ops {

namespace {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstMap = Eigen::Map<const RowMatrix>;
using MutMap = Eigen::Map<RowMatrix>;

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (a.shape() != b.shape()) {
    throw ShapeError(std::string(op) + ": shape mismatch " + shape_str(a.shape()) +
                     " vs " + shape_str(b.shape()));
  }
}

// Unary op with derivative expressed in terms of input x and output y.
template <typename Fwd, typename Deriv>
Tensor unary(const Tensor& x, Fwd fwd, Deriv deriv) {
  auto in = x.data();
  std::vector<double> out(in.size());
  for (std::size_t i = 0; i < in.size(); ++i) out[i] = fwd(in[i]);
  return Tensor::make_result(x.shape(), std::move(out), {x}, [deriv](detail::Node& self) {
    auto& p = *self.parents[0];
    if (!p.requires_grad) return;
    auto& g = p.grad_buffer();
    for (std::size_t i = 0; i < g.size(); ++i) {
      g[i] += self.grad[i] * deriv(p.data[i], self.data[i]);
    }
  });
}

}  // namespace

Tensor add(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "add");
  auto x = a.data(), y = b.data();
  std::vector<double> out(x.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = x[i] + y[i];
  return Tensor::make_result(a.shape(), std::move(out), {a, b}, [](detail::Node& self) {
    for (auto& p : self.parents) {
      if (!p->requires_grad) continue;
      auto& g = p->grad_buffer();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i];
    }
  });
}

Tensor sub(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "sub");
  auto x = a.data(), y = b.data();
  std::vector<double> out(x.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = x[i] - y[i];
  return Tensor::make_result(a.shape(), std::move(out), {a, b}, [](detail::Node& self) {
    for (std::size_t k = 0; k < 2; ++k) {
      auto& p = *self.parents[k];
      if (!p.requires_grad) continue;
      const double sign = k == 0 ? 1.0 : -1.0;
      auto& g = p.grad_buffer();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += sign * self.grad[i];
    }
  });
}

Tensor mul(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "mul");
  auto x = a.data(), y = b.data();
  std::vector<double> out(x.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = x[i] * y[i];
  return Tensor::make_result(a.shape(), std::move(out), {a, b}, [](detail::Node& self) {
    auto& pa = *self.parents[0];
    auto& pb = *self.parents[1];
    if (pa.requires_grad) {
      auto& g = pa.grad_buffer();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] * pb.data[i];
    }
    if (pb.requires_grad) {
      auto& g = pb.grad_buffer();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] * pa.data[i];
    }
  });
}

Tensor scale(const Tensor& x, double factor) {
  return unary(
      x, [factor](double v) { return factor * v; },
      [factor](double, double) { return factor; });
}

Tensor square(const Tensor& x) {
  return unary(
      x, [](double v) { return v * v; }, [](double v, double) { return 2.0 * v; });
}

Tensor relu(const Tensor& x) {
  return unary(
      x, [](double v) { return v > 0.0 ? v : 0.0; },
      [](double v, double) { return v > 0.0 ? 1.0 : 0.0; });
}

Tensor tanh(const Tensor& x) {
  return unary(
      x, [](double v) { return std::tanh(v); },
      [](double, double y) { return 1.0 - y * y; });
}

Tensor sigmoid(const Tensor& x) {
  return unary(
      x, [](double v) { return 1.0 / (1.0 + std::exp(-v)); },
      [](double, double y) { return y * (1.0 - y); });
}

Tensor sum(const Tensor& x) {
  double total = 0.0;
  for (double v : x.data()) total += v;
  return Tensor::make_result(Shape{}, {total}, {x}, [](detail::Node& self) {
    auto& p = *self.parents[0];
    if (!p.requires_grad) return;
    auto& g = p.grad_buffer();
    for (double& v : g) v += self.grad[0];
  });
}

Tensor mean(const Tensor& x) {
  if (x.numel() == 0) throw ShapeError("mean of empty tensor");
  return scale(sum(x), 1.0 / static_cast<double>(x.numel()));
}

Tensor weighted_sum(const Tensor& x, std::span<const double> weights) {
  if (weights.size() != x.numel()) {
    throw ShapeError("weighted_sum: weight count does not match " + shape_str(x.shape()));
  }
  auto in = x.data();
  double total = 0.0;
  for (std::size_t i = 0; i < in.size(); ++i) total += weights[i] * in[i];
  std::vector<double> w(weights.begin(), weights.end());
  return Tensor::make_result(Shape{}, {total}, {x}, [w = std::move(w)](detail::Node& self) {
    auto& p = *self.parents[0];
    if (!p.requires_grad) return;
    auto& g = p.grad_buffer();
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[0] * w[i];
  });
}

Tensor concat0(const Tensor& a, const Tensor& b) {
  if (a.dim() == 0 || a.dim() != b.dim() ||
      !std::equal(a.shape().begin() + 1, a.shape().end(), b.shape().begin() + 1)) {
    throw ShapeError("concat0: incompatible shapes " + shape_str(a.shape()) + " and " +
                     shape_str(b.shape()));
  }
  Shape shape = a.shape();
  shape[0] += b.shape()[0];
  std::vector<double> out;
  out.reserve(a.numel() + b.numel());
  out.insert(out.end(), a.data().begin(), a.data().end());
  out.insert(out.end(), b.data().begin(), b.data().end());
  const std::size_t split = a.numel();
  return Tensor::make_result(std::move(shape), std::move(out), {a, b},
                             [split](detail::Node& self) {
                               auto& pa = *self.parents[0];
                               auto& pb = *self.parents[1];
                               if (pa.requires_grad) {
                                 auto& g = pa.grad_buffer();
                                 for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i];
                               }
                               if (pb.requires_grad) {
                                 auto& g = pb.grad_buffer();
                                 for (std::size_t i = 0; i < g.size(); ++i)
                                   g[i] += self.grad[split + i];
                               }
                             });
}

Tensor permute3(const Tensor& x, std::array<std::size_t, 3> perm) {
  if (x.dim() != 3) throw ShapeError("permute3 expects a 3-d tensor, got " + shape_str(x.shape()));
  const Shape& s = x.shape();
  const std::array<std::size_t, 3> in_stride = {s[1] * s[2], s[2], 1};
  const Shape out_shape = {s[perm[0]], s[perm[1]], s[perm[2]]};
  // Index map: out flat position -> in flat position.
  std::vector<std::size_t> index(x.numel());
  std::size_t pos = 0;
  for (std::size_t i = 0; i < out_shape[0]; ++i)
    for (std::size_t j = 0; j < out_shape[1]; ++j)
      for (std::size_t k = 0; k < out_shape[2]; ++k)
        index[pos++] = i * in_stride[perm[0]] + j * in_stride[perm[1]] + k * in_stride[perm[2]];
  auto in = x.data();
  std::vector<double> out(index.size());
  for (std::size_t i = 0; i < index.size(); ++i) out[i] = in[index[i]];
  return Tensor::make_result(out_shape, std::move(out), {x},
                             [index = std::move(index)](detail::Node& self) {
                               auto& p = *self.parents[0];
                               if (!p.requires_grad) return;
                               auto& g = p.grad_buffer();
                               for (std::size_t i = 0; i < index.size(); ++i)
                                 g[index[i]] += self.grad[i];
                             });
}

Tensor matmul_last(const Tensor& x, const Tensor& m) {
  if (x.dim() == 0 || m.dim() != 2 || x.shape().back() != m.shape()[1]) {
    throw ShapeError("matmul_last: cannot apply " + shape_str(m.shape()) + " to " +
                     shape_str(x.shape()));
  }
  const std::size_t cols_in = m.shape()[1];
  const std::size_t cols_out = m.shape()[0];
  const std::size_t rows = x.numel() / cols_in;
  Shape shape = x.shape();
  shape.back() = cols_out;
  std::vector<double> out(rows * cols_out);
  ConstMap X(x.data().data(), rows, cols_in);
  ConstMap M(m.data().data(), cols_out, cols_in);
  MutMap(out.data(), rows, cols_out).noalias() = X * M.transpose();
  return Tensor::make_result(std::move(shape), std::move(out), {x, m},
                             [rows, cols_in, cols_out](detail::Node& self) {
                               auto& px = *self.parents[0];
                               auto& pm = *self.parents[1];
                               ConstMap G(self.grad.data(), rows, cols_out);
                               if (px.requires_grad) {
                                 ConstMap Mm(pm.data.data(), cols_out, cols_in);
                                 MutMap(px.grad_buffer().data(), rows, cols_in).noalias() += G * Mm;
                               }
                               if (pm.requires_grad) {
                                 ConstMap Xm(px.data.data(), rows, cols_in);
                                 MutMap(pm.grad_buffer().data(), cols_out, cols_in).noalias() +=
                                     G.transpose() * Xm;
                               }
                             });
}

Tensor complex_multiply(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "complex_multiply");
  if (a.dim() < 1 || a.shape()[0] != 2) {
    throw ShapeError("complex_multiply expects packed [2, ...] tensors, got " +
                     shape_str(a.shape()));
  }
  const std::size_t n = a.numel() / 2;
  auto x = a.data(), y = b.data();
  std::vector<double> out(a.numel());
  for (std::size_t i = 0; i < n; ++i) {
    complex_mul_elem(x[i], x[n + i], y[i], y[n + i], out[i], out[n + i]);
  }
  return Tensor::make_result(a.shape(), std::move(out), {a, b}, [n](detail::Node& self) {
    // d/da of (a * b) with upstream g: conj(b) * g, and symmetrically for b.
    for (std::size_t k = 0; k < 2; ++k) {
      auto& p = *self.parents[k];
      if (!p.requires_grad) continue;
      const auto& other = self.parents[1 - k]->data;
      auto& g = p.grad_buffer();
      for (std::size_t i = 0; i < n; ++i) {
        const double gr = self.grad[i], gi = self.grad[n + i];
        const double orr = other[i], oi = other[n + i];
        g[i] += gr * orr + gi * oi;
        g[n + i] += -gr * oi + gi * orr;
      }
    }
  });
}

}  // namespace concatenet::ops
