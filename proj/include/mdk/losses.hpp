#pragma once

#include <optional>
#include <vector>

#include "mdk/dvc.hpp"
#include "mdk/tensor.hpp"

namespace mdk {

enum class Variant { kBase, kGcl, kVcl };

const char* variant_name(Variant v);
Variant variant_from_name(const std::string& name);

struct LossBreakdown {
  double l_den = 0.0;
  double l_cls = 0.0;
  double total = 0.0;
  double lambda = 0.0;
};

// (1 / 2N) * sum_i ||pred_i - gt_i||^2 over all pixels; gradient (pred - gt)/N.
double density_loss(const Tensor4& pred, const Tensor4& gt, Tensor4* grad_pred);

// Mean negative log softmax probability of the true class;
// gradient (softmax - onehot) / N.
double gt_class_loss(const Matrix& logits, const std::vector<int>& labels,
                     Matrix* grad_logits);

// Soft cross-entropy with the 1/(N*V) normalization:
// -(1 / (N*V)) * sum_i sum_c targets[i][c] * log softmax(logits_i)[c].
double virtual_class_loss(const Matrix& logits,
                          const std::vector<VirtualLabel>& targets,
                          Matrix* grad_logits);

// base: density only; gcl/vcl: l_den + lambda * l_cls.
LossBreakdown combined_loss(Variant variant, double l_den,
                            std::optional<double> l_cls, double lambda);

}  // namespace mdk
