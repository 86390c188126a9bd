#pragma once

#include <cstdint>

#include "mdk/rng.hpp"
#include "mdk/tensor.hpp"

namespace mdk {

// Weights ~ Uniform(+-sqrt(6 / (fan_in + fan_out))); biases stay zero.
// Each slot draws from its own stream keyed by (root, "init:" + name), so the
// same slot initializes identically no matter which variant instantiates it.
inline void init_xavier(ParamSlot& slot, int fan_in, int fan_out,
                        std::uint64_t root_seed) {
  Rng rng(derive_seed(root_seed, "init:" + slot.name));
  const double bound = std::sqrt(6.0 / (fan_in + fan_out));
  for (double& v : slot.value.data) v = rng.uniform(-bound, bound);
}

inline void init_constant(ParamSlot& slot, double value) {
  for (double& v : slot.value.data) v = value;
}

}  // namespace mdk
