// Copyright 2026 The ConcateNet Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "concatenet/optim.hpp"

#include <cmath>
#include <stdexcept>

namespace concatenet {

void Adam::step(ParameterSet& params) {
  bool any = false;
  for (const auto& [name, t] : params.parameters()) any = any || t.has_grad();
  if (!any) throw std::logic_error("Adam::step called without gradients; run backward() first");

  ++state_.step;
  const double t = static_cast<double>(state_.step);
  const double bc1 = 1.0 - std::pow(config_.beta1, t);
  const double bc2 = 1.0 - std::pow(config_.beta2, t);
  for (const auto& [name, param] : params.parameters()) {
    if (!param.has_grad()) continue;
    Tensor p = param;
    auto g = p.grad();
    auto w = p.data();
    auto& m = state_.m[name];
    auto& v = state_.v[name];
    if (m.size() != w.size()) m.assign(w.size(), 0.0);
    if (v.size() != w.size()) v.assign(w.size(), 0.0);
    for (std::size_t i = 0; i < w.size(); ++i) {
      m[i] = config_.beta1 * m[i] + (1.0 - config_.beta1) * g[i];
      v[i] = config_.beta2 * v[i] + (1.0 - config_.beta2) * g[i] * g[i];
      const double m_hat = m[i] / bc1;
      const double v_hat = v[i] / bc2;
      w[i] -= config_.lr * m_hat / (std::sqrt(v_hat) + config_.eps);
    }
  }
}

double clip_grad_norm(ParameterSet& params, double max_norm) {
  double sq = 0.0;
  for (const auto& [name, t] : params.parameters()) {
    for (double g : t.grad()) sq += g * g;
  }
  const double norm = std::sqrt(sq);
  if (max_norm > 0.0 && norm > max_norm) {
    const double s = max_norm / norm;
    for (const auto& [name, t] : params.parameters()) {
      if (!t.has_grad()) continue;
      Tensor handle = t;
      for (double& g : handle.mutable_grad()) g *= s;
    }
  }
  return norm;
}

}  // namespace concatenet
