// Copyright 2026 The ConcateNet Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#ifndef CONCATENET_OPTIM_HPP_
#define CONCATENET_OPTIM_HPP_

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "concatenet/model.hpp"

namespace concatenet {

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// Moment estimates keyed by parameter name.
struct AdamState {
  std::uint64_t step = 0;
  std::map<std::string, std::vector<double>> m;
  std::map<std::string, std::vector<double>> v;
};

/// Adam with bias correction. Parameters without a gradient are skipped;
/// a step where no parameter has one throws std::logic_error.
class Adam {
 public:
  explicit Adam(AdamConfig config = {}) : config_(config) {}

  void step(ParameterSet& params);

  AdamConfig& config() { return config_; }
  const AdamConfig& config() const { return config_; }
  AdamState& state() { return state_; }
  const AdamState& state() const { return state_; }

 private:
  AdamConfig config_;
  AdamState state_;
};

/// Scales all gradients so their global L2 norm is at most max_norm.
/// Returns the norm before clipping.
double clip_grad_norm(ParameterSet& params, double max_norm);

}  // namespace concatenet

#endif  // CONCATENET_OPTIM_HPP_
