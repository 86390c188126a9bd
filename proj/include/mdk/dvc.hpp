#pragma once

#include <string>
#include <vector>

#include "mdk/errors.hpp"

namespace mdk {

// Length-V confidence vector over core and virtual classes, laid out as
// [core 0..M-1, pairs (0,1), (0,2), ..., (M-2,M-1)] with V = M + M(M-1)/2.
using VirtualLabel = std::vector<double>;

inline int virtual_class_count(int M) { return M + M * (M - 1) / 2; }

// Flat index of the virtual class for the unordered pair {s, t}; symmetric and
// lexicographic over (min, max). Core classes use their own index directly.
int pair_index(int s, int t, int M);

// One-hot on core class m.
VirtualLabel init_virtual_label(int m, int M);

// For every s != t, adds the misassigned core confidence v[s] onto the pair
// entry {s, t}. Core entries and pairs not involving t are left untouched.
VirtualLabel correct_prediction(const VirtualLabel& v_hat, int t, int M);

struct ScheduleConfig {
  int kappa = 80;        // start-fusion epoch
  int tau = 5;           // window size in epochs
  int iota = 240;        // total epochs
  double rho_max = 0.5;  // max reliability of predicted labels

  void validate() const;
};

// 0 until epoch kappa, then a linear ramp reaching rho_max at epoch iota.
double alpha_schedule(int e, const ScheduleConfig& cfg);

// k = ceil((e - kappa + 1) / tau); window k spans epochs
// [(k-1)*tau + kappa, k*tau + kappa). Requires e >= kappa.
int window_index(int e, const ScheduleConfig& cfg);

// Per-image bookkeeping for windowed label generation.
struct LabelState {
  std::string image_id;
  VirtualLabel v0;
  VirtualLabel current_target;
  std::vector<double> accumulator;
  int obs_count = 0;

  static LabelState make(std::string image_id, int domain, int M);
};

// accumulator += v_star; one observation.
void observe(LabelState& state, const VirtualLabel& v_star);

// mean = accumulator / max(obs_count, 1); z = (1-alpha)*v0 + alpha*mean;
// current_target = softmax(z); accumulator and obs_count reset.
void finalize_window(LabelState& state, double alpha);

// v0 before the start-fusion epoch, the last finalized target afterwards.
const VirtualLabel& label_for_epoch(const LabelState& state, int e,
                                    const ScheduleConfig& cfg);

}  // namespace mdk
