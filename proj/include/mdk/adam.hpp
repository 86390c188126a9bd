#pragma once

#include <map>
#include <string>
#include <vector>

#include "mdk/model.hpp"

namespace mdk {

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// First and second moment estimates keyed by parameter name.
struct AdamState {
  long long t = 0;
  std::map<std::string, std::vector<double>> m;
  std::map<std::string, std::vector<double>> v;
};

// One bias-corrected update of a single parameter vector.
void adam_update(std::vector<double>& values, const std::vector<double>& grads,
                 std::vector<double>& m, std::vector<double>& v, long long t,
                 const AdamConfig& cfg);

// Applies one step over every slot; aborts on non-finite gradients.
void optimizer_step(ModelParams& params, AdamState& state, const AdamConfig& cfg);

}  // namespace mdk
