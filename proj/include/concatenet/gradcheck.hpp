// Copyright 2026 The ConcateNet Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#ifndef CONCATENET_GRADCHECK_HPP_
#define CONCATENET_GRADCHECK_HPP_

#include <functional>
#include <vector>

#include "concatenet/tensor.hpp"

namespace concatenet {

struct GradCheckResult {
  double max_rel_error = 0.0;
  std::size_t worst_input = 0;
  std::size_t worst_index = 0;
  double worst_analytic = 0.0;
  double worst_numeric = 0.0;
  std::size_t checked = 0;
};

/// Compares reverse-mode gradients of f against central differences for
/// every element of every tensor in `inputs`. f is re-evaluated with
/// perturbed inputs, so it must read the tensors' current data each call.
/// A non-scalar output is reduced with a fixed pseudo-random weighting.
///
/// Each element is also evaluated at h/10. If the two estimates disagree by
/// more than rounding noise (the step crosses a kink such as a ReLU
/// switching), the finer one is kept and the test repeats down to h/100.
///
/// Relative error per element is |a - n| / max(|a|, |n|, 1e-8).
GradCheckResult grad_check_detailed(const std::function<Tensor()>& f,
                                    std::vector<Tensor> inputs, double h = 1e-4);

/// Single-input form; returns the max relative error.
double grad_check(const std::function<Tensor(const Tensor&)>& f, Tensor x, double h = 1e-4);

}  // namespace concatenet

#endif  // CONCATENET_GRADCHECK_HPP_
