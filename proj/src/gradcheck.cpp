// Copyright 2026 The ConcateNet Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "concatenet/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "concatenet/ops.hpp"

namespace concatenet {

namespace {

constexpr int kMaxRetries = 2;
// Rounding error of one forward evaluation, in units of eps times the
// magnitude of the terms summed into the scalar.
constexpr double kRoundingUlps = 64.0;

std::vector<double> reduction_weights(std::size_t n) {
  std::mt19937_64 rng(0x5eedULL + n);
  std::uniform_real_distribution<double> dist(0.5, 1.5);
  std::vector<double> w(n);
  for (std::size_t i = 0; i < n; ++i) w[i] = (i % 2 ? -1.0 : 1.0) * dist(rng);
  return w;
}

Tensor reduce_to_scalar(const Tensor& y) {
  if (y.numel() == 1) return y.dim() == 0 ? y : y.reshape({});
  return ops::weighted_sum(y, reduction_weights(y.numel()));
}

double term_magnitude(const Tensor& y) {
  if (y.numel() == 1) return std::abs(y.data()[0]);
  const auto w = reduction_weights(y.numel());
  double total = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) total += std::abs(w[i] * y.data()[i]);
  return total;
}

double eval_scalar(const std::function<Tensor()>& f) {
  NoGradGuard guard;
  return reduce_to_scalar(f()).item();
}

}  // namespace

GradCheckResult grad_check_detailed(const std::function<Tensor()>& f,
                                    std::vector<Tensor> inputs, double h) {
  std::vector<bool> previous(inputs.size());
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    previous[i] = inputs[i].requires_grad();
    inputs[i].set_requires_grad(true);
    inputs[i].zero_grad();
  }
  const Tensor out = f();
  const double f_scale = std::max(term_magnitude(out), 1.0);
  Tensor loss = reduce_to_scalar(out);
  loss.backward();

  GradCheckResult result;
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    Tensor& x = inputs[i];
    std::vector<double> analytic(x.numel(), 0.0);
    if (x.has_grad()) std::copy(x.grad().begin(), x.grad().end(), analytic.begin());
    auto data = x.data();
    for (std::size_t k = 0; k < data.size(); ++k) {
      const double saved = data[k];
      auto central = [&](double step) {
        data[k] = saved + step;
        const double up = eval_scalar(f);
        data[k] = saved - step;
        const double down = eval_scalar(f);
        data[k] = saved;
        return (up - down) / (2.0 * step);
      };
      // A smooth function gives nearly the same estimate at h and h/10. When
      // they disagree by more than rounding can explain, the larger step
      // straddles a kink (a ReLU switching); move closer to the point.
      double step = h;
      double numeric = central(step);
      for (int attempt = 0; attempt < kMaxRetries; ++attempt) {
        const double finer = central(step * 0.1);
        const double noise = kRoundingUlps * std::numeric_limits<double>::epsilon() * f_scale / (step * 0.1);
        const double gap = std::abs(finer - numeric);
        if (gap <= 1e-6 * std::max(std::abs(finer), std::abs(numeric)) + noise) break;
        numeric = finer;
        step *= 0.1;
      }
      const double denom = std::max({std::abs(analytic[k]), std::abs(numeric), 1e-8});
      const double err = std::abs(analytic[k] - numeric) / denom;
      ++result.checked;
      if (err > result.max_rel_error) {
        result.max_rel_error = err;
        result.worst_input = i;
        result.worst_index = k;
        result.worst_analytic = analytic[k];
        result.worst_numeric = numeric;
      }
    }
  }
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    inputs[i].zero_grad();
    inputs[i].set_requires_grad(previous[i]);
  }
  return result;
}

double grad_check(const std::function<Tensor(const Tensor&)>& f, Tensor x, double h) {
  return grad_check_detailed([&] { return f(x); }, {x}, h).max_rel_error;
}

}  // namespace concatenet
