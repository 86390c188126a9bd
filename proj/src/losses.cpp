#include "mdk/losses.hpp"

#include <cmath>

#include "mdk/ops.hpp"

namespace mdk {

namespace {

// Avoids -inf when a softmax probability underflows.
constexpr double kLogFloor = 1e-30;

double safe_log(double p) { return std::log(std::max(p, kLogFloor)); }

}  // namespace

const char* variant_name(Variant v) {
  switch (v) {
    case Variant::kBase: return "base";
    case Variant::kGcl: return "gcl";
    case Variant::kVcl: return "vcl";
  }
  return "?";
}

Variant variant_from_name(const std::string& name) {
  if (name == "base") return Variant::kBase;
  if (name == "gcl") return Variant::kGcl;
  if (name == "vcl") return Variant::kVcl;
  throw ConfigError("unknown variant '" + name + "' (expected base|gcl|vcl)");
}

double density_loss(const Tensor4& pred, const Tensor4& gt, Tensor4* grad_pred) {
  if (!pred.same_shape(gt))
    throw DimensionError("density_loss: shape mismatch");
  if (pred.B < 1) throw DimensionError("density_loss: empty batch");
  const double n = static_cast<double>(pred.B);
  double acc = 0.0;
  for (std::size_t i = 0; i < pred.data.size(); ++i) {
    const double d = pred.data[i] - gt.data[i];
    acc += d * d;
  }
  if (grad_pred) {
    *grad_pred = Tensor4(pred.B, pred.C, pred.H, pred.W);
    for (std::size_t i = 0; i < pred.data.size(); ++i)
      grad_pred->data[i] = (pred.data[i] - gt.data[i]) / n;
  }
  return acc / (2.0 * n);
}

double gt_class_loss(const Matrix& logits, const std::vector<int>& labels,
                     Matrix* grad_logits) {
  if (static_cast<int>(labels.size()) != logits.rows)
    throw DimensionError("gt_class_loss: label count != batch size");
  const double n = static_cast<double>(logits.rows);
  if (grad_logits) *grad_logits = Matrix(logits.rows, logits.cols);

  double acc = 0.0;
  std::vector<double> row(logits.cols);
  for (int i = 0; i < logits.rows; ++i) {
    const int y = labels[i];
    if (y < 0 || y >= logits.cols)
      throw ConfigError("gt_class_loss: label out of range");
    for (int c = 0; c < logits.cols; ++c) row[c] = logits.at(i, c);
    const std::vector<double> p = softmax(row);
    acc -= safe_log(p[y]);
    if (grad_logits)
      for (int c = 0; c < logits.cols; ++c)
        grad_logits->at(i, c) = (p[c] - (c == y ? 1.0 : 0.0)) / n;
  }
  return acc / n;
}

double virtual_class_loss(const Matrix& logits,
                          const std::vector<VirtualLabel>& targets,
                          Matrix* grad_logits) {
  if (static_cast<int>(targets.size()) != logits.rows)
    throw DimensionError("virtual_class_loss: target count != batch size");
  const int V = logits.cols;
  const double n = static_cast<double>(logits.rows);
  if (grad_logits) *grad_logits = Matrix(logits.rows, logits.cols);

  double acc = 0.0;
  std::vector<double> row(V);
  for (int i = 0; i < logits.rows; ++i) {
    if (static_cast<int>(targets[i].size()) != V)
      throw DimensionError("virtual_class_loss: target length != V");
    for (int c = 0; c < V; ++c) row[c] = logits.at(i, c);
    const std::vector<double> p = softmax(row);
    double tsum = 0.0;
    for (int c = 0; c < V; ++c) {
      acc -= targets[i][c] * safe_log(p[c]);
      tsum += targets[i][c];
    }
    if (grad_logits)
      for (int c = 0; c < V; ++c)
        grad_logits->at(i, c) = (p[c] * tsum - targets[i][c]) / (n * V);
  }
  return acc / (n * V);
}

LossBreakdown combined_loss(Variant variant, double l_den,
                            std::optional<double> l_cls, double lambda) {
  LossBreakdown out;
  out.l_den = l_den;
  out.lambda = lambda;
  if (variant == Variant::kBase) {
    if (l_cls.has_value())
      throw ConfigError("combined_loss: base takes no classification term");
    out.l_cls = 0.0;
    out.total = l_den;
    return out;
  }
  if (!l_cls.has_value())
    throw ConfigError("combined_loss: gcl/vcl require a classification term");
  out.l_cls = *l_cls;
  out.total = l_den + lambda * out.l_cls;
  return out;
}

}  // namespace mdk
