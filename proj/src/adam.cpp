#include "mdk/adam.hpp"

#include <cmath>

namespace mdk {

void adam_update(std::vector<double>& values, const std::vector<double>& grads,
                 std::vector<double>& m, std::vector<double>& v, long long t,
                 const AdamConfig& cfg) {
  if (values.size() != grads.size())
    throw DimensionError("adam_update: gradient size mismatch");
  if (m.size() != values.size()) m.assign(values.size(), 0.0);
  if (v.size() != values.size()) v.assign(values.size(), 0.0);

  const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(t));
  const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(t));
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double g = grads[i];
    m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * g;
    v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * g * g;
    const double m_hat = m[i] / bc1;
    const double v_hat = v[i] / bc2;
    values[i] -= cfg.lr * m_hat / (std::sqrt(v_hat) + cfg.eps);
  }
}

void optimizer_step(ModelParams& params, AdamState& state, const AdamConfig& cfg) {
  ++state.t;
  params.for_each_slot([&](ParamSlot& slot) {
    if (!all_finite(slot.grad))
      throw TrainAbort("optimizer_step: non-finite gradient in " + slot.name);
    adam_update(slot.value.data, slot.grad.data, state.m[slot.name],
                state.v[slot.name], state.t, cfg);
  });
}

}  // namespace mdk
