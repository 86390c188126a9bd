#include "mdk/gradcheck.hpp"

#include <cmath>

#include "mdk/errors.hpp"

namespace mdk {

GradCheckReport grad_check(const std::vector<ParamSlot*>& params,
                           const std::function<double(bool)>& f, double h,
                           double tol, double guard) {
  if (!(h >= 1e-7 && h <= 1e-4))
    throw ConfigError("grad_check: h outside [1e-7, 1e-4]");

  const double f0 = f(true);
  if (!std::isfinite(f0))
    throw TrainAbort("grad_check: non-finite value at probe point");

  // Snapshot analytic grads before the perturbation sweep overwrites them.
  std::vector<std::vector<double>> analytic;
  analytic.reserve(params.size());
  for (const ParamSlot* p : params) analytic.push_back(p->grad.data);

  GradCheckReport report;
  report.tol = tol;
  for (std::size_t pi = 0; pi < params.size(); ++pi) {
    ParamSlot* slot = params[pi];
    for (std::size_t i = 0; i < slot->value.data.size(); ++i) {
      const double saved = slot->value.data[i];
      slot->value.data[i] = saved + h;
      const double fp = f(false);
      slot->value.data[i] = saved - h;
      const double fm = f(false);
      slot->value.data[i] = saved;
      if (!std::isfinite(fp) || !std::isfinite(fm))
        throw TrainAbort("grad_check: non-finite value near probe point");

      const double numeric = (fp - fm) / (2.0 * h);
      const double a = analytic[pi][i];
      const double denom = std::max({std::fabs(a), std::fabs(numeric), guard});
      const double rel = std::fabs(a - numeric) / denom;
      ++report.entries_checked;
      if (rel > report.max_rel_err) {
        report.max_rel_err = rel;
        report.worst_param = slot->name;
        report.worst_index = static_cast<int>(i);
        report.worst_analytic = a;
        report.worst_numeric = numeric;
      }
    }
  }
  report.passed = report.max_rel_err <= tol;
  return report;
}

}  // namespace mdk
