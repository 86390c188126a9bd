#pragma once

#include <functional>
#include <string>
#include <vector>

#include "mdk/tensor.hpp"

namespace mdk {

struct GradCheckReport {
  double max_rel_err = 0.0;
  std::string worst_param;
  int worst_index = -1;
  double worst_analytic = 0.0;
  double worst_numeric = 0.0;
  std::size_t entries_checked = 0;
  double tol = 0.0;
  bool passed = false;
};

// Compares the analytic gradient of a scalar function against central finite
// differences, entry by entry, over every listed parameter.
//
// f(true) must evaluate the scalar at the current parameters AND write the
// analytic gradients into each slot's grad; f(false) must evaluate the scalar
// only. h must lie in [1e-7, 1e-4]. Relative error per entry is
// |a - n| / max(|a|, |n|, guard).
GradCheckReport grad_check(const std::vector<ParamSlot*>& params,
                           const std::function<double(bool with_grads)>& f,
                           double h, double tol, double guard = 1e-6);

}  // namespace mdk
