#include "mdk/tensor.hpp"

#include <cmath>

namespace mdk {

bool all_finite(const std::vector<double>& v) {
  for (double x : v)
    if (!std::isfinite(x)) return false;
  return true;
}

bool all_finite(const Tensor4& t) { return all_finite(t.data); }
bool all_finite(const Matrix& m) { return all_finite(m.data); }

}  // namespace mdk
