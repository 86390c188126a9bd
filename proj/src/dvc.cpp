#include "mdk/dvc.hpp"

#include <algorithm>

#include "mdk/ops.hpp"

namespace mdk {

int pair_index(int s, int t, int M) {
  if (s < 0 || s >= M || t < 0 || t >= M)
    throw ConfigError("pair_index: class id out of range");
  if (s == t)
    throw ConfigError("pair_index: s == t is a core class, not a pair");
  const int lo = std::min(s, t);
  const int hi = std::max(s, t);
  // Pairs with first element k occupy a block of (M - 1 - k) slots.
  const int offset = lo * M - lo * (lo + 1) / 2 + (hi - lo - 1);
  return M + offset;
}

VirtualLabel init_virtual_label(int m, int M) {
  if (m < 0 || m >= M) throw ConfigError("init_virtual_label: m out of range");
  VirtualLabel v(virtual_class_count(M), 0.0);
  v[m] = 1.0;
  return v;
}

VirtualLabel correct_prediction(const VirtualLabel& v_hat, int t, int M) {
  if (t < 0 || t >= M) throw ConfigError("correct_prediction: t out of range");
  if (static_cast<int>(v_hat.size()) != virtual_class_count(M))
    throw DimensionError("correct_prediction: label length != V");
  VirtualLabel v_star = v_hat;
  for (int s = 0; s < M; ++s) {
    if (s == t) continue;
    const int p = pair_index(s, t, M);
    v_star[p] = v_hat[p] + v_hat[s];
  }
  return v_star;
}

void ScheduleConfig::validate() const {
  if (!(0 <= kappa && kappa < iota))
    throw ConfigError("ScheduleConfig: need 0 <= kappa < iota");
  if (tau < 1) throw ConfigError("ScheduleConfig: tau must be >= 1");
  if (!(0.0 <= rho_max && rho_max <= 1.0))
    throw ConfigError("ScheduleConfig: rho_max outside [0, 1]");
}

double alpha_schedule(int e, const ScheduleConfig& cfg) {
  cfg.validate();
  if (e <= cfg.kappa) return 0.0;
  const double frac = static_cast<double>(e - cfg.kappa) /
                      static_cast<double>(cfg.iota - cfg.kappa);
  return cfg.rho_max * std::min(1.0, frac);
}

int window_index(int e, const ScheduleConfig& cfg) {
  if (e < cfg.kappa)
    throw ConfigError("window_index: e < kappa (use the initial label)");
  // ceil((e - kappa + 1) / tau) in integer arithmetic.
  return (e - cfg.kappa + 1 + cfg.tau - 1) / cfg.tau;
}

LabelState LabelState::make(std::string image_id, int domain, int M) {
  LabelState st;
  st.image_id = std::move(image_id);
  st.v0 = init_virtual_label(domain, M);
  st.current_target = st.v0;
  st.accumulator.assign(st.v0.size(), 0.0);
  st.obs_count = 0;
  return st;
}

void observe(LabelState& state, const VirtualLabel& v_star) {
  if (v_star.size() != state.accumulator.size())
    throw DimensionError("observe: label length mismatch");
  for (std::size_t i = 0; i < v_star.size(); ++i)
    state.accumulator[i] += v_star[i];
  ++state.obs_count;
}

void finalize_window(LabelState& state, double alpha) {
  const double denom = static_cast<double>(std::max(state.obs_count, 1));
  std::vector<double> z(state.v0.size());
  for (std::size_t i = 0; i < z.size(); ++i) {
    const double mean = state.accumulator[i] / denom;
    z[i] = (1.0 - alpha) * state.v0[i] + alpha * mean;
  }
  state.current_target = softmax(z);
  std::fill(state.accumulator.begin(), state.accumulator.end(), 0.0);
  state.obs_count = 0;
}

const VirtualLabel& label_for_epoch(const LabelState& state, int e,
                                    const ScheduleConfig& cfg) {
  return e < cfg.kappa ? state.v0 : state.current_target;
}

}  // namespace mdk
