#include "mdk/ops.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace mdk {

namespace {

void require(bool cond, const std::string& msg) {
  if (!cond) throw DimensionError(msg);
}

}  // namespace

Tensor4 site_linear_fwd(const Tensor4& x, const Matrix& W, const Matrix& bias) {
  require(W.cols == x.C, "site_linear_fwd: W.cols != x.C");
  require(bias.rows == 1 && bias.cols == W.rows,
          "site_linear_fwd: bias length != W.rows");
  const int S = x.spatial();
  Tensor4 out(x.B, W.rows, x.H, x.W);
  for (int b = 0; b < x.B; ++b) {
    for (int o = 0; o < W.rows; ++o) {
      double* op = out.plane(b, o);
      const double bo = bias.at(0, o);
      for (int s = 0; s < S; ++s) op[s] = bo;
      for (int i = 0; i < x.C; ++i) {
        const double w = W.at(o, i);
        const double* xp = x.plane(b, i);
        for (int s = 0; s < S; ++s) op[s] += w * xp[s];
      }
    }
  }
  return out;
}

SiteLinearGrads site_linear_bwd(const Tensor4& x, const Matrix& W,
                                const Tensor4& grad_out) {
  require(W.cols == x.C, "site_linear_bwd: W.cols != x.C");
  require(grad_out.B == x.B && grad_out.C == W.rows && grad_out.H == x.H &&
              grad_out.W == x.W,
          "site_linear_bwd: grad_out shape mismatch");
  const int S = x.spatial();
  SiteLinearGrads g{Tensor4(x.B, x.C, x.H, x.W), Matrix(W.rows, W.cols),
                    Matrix(1, W.rows)};
  for (int b = 0; b < x.B; ++b) {
    for (int o = 0; o < W.rows; ++o) {
      const double* gp = grad_out.plane(b, o);
      double acc_b = 0.0;
      for (int s = 0; s < S; ++s) acc_b += gp[s];
      g.bias.at(0, o) += acc_b;
      for (int i = 0; i < x.C; ++i) {
        const double* xp = x.plane(b, i);
        double* gxp = g.x.plane(b, i);
        const double w = W.at(o, i);
        double acc_w = 0.0;
        for (int s = 0; s < S; ++s) {
          acc_w += gp[s] * xp[s];
          gxp[s] += w * gp[s];
        }
        g.W.at(o, i) += acc_w;
      }
    }
  }
  return g;
}

Tensor4 relu_fwd(const Tensor4& x) {
  Tensor4 out = x;
  for (double& v : out.data) v = v > 0.0 ? v : 0.0;
  return out;
}

Tensor4 relu_bwd(const Tensor4& x, const Tensor4& grad_out) {
  require(x.same_shape(grad_out), "relu_bwd: shape mismatch");
  Tensor4 g = grad_out;
  for (std::size_t i = 0; i < g.data.size(); ++i)
    if (x.data[i] <= 0.0) g.data[i] = 0.0;
  return g;
}

Matrix relu_fwd(const Matrix& x) {
  Matrix out = x;
  for (double& v : out.data) v = v > 0.0 ? v : 0.0;
  return out;
}

Matrix relu_bwd(const Matrix& x, const Matrix& grad_out) {
  require(x.same_shape(grad_out), "relu_bwd: shape mismatch");
  Matrix g = grad_out;
  for (std::size_t i = 0; i < g.data.size(); ++i)
    if (x.data[i] <= 0.0) g.data[i] = 0.0;
  return g;
}

Matrix global_avg_pool_fwd(const Tensor4& x) {
  require(x.spatial() >= 1, "global_avg_pool_fwd: empty spatial extent");
  const int S = x.spatial();
  Matrix out(x.B, x.C);
  for (int b = 0; b < x.B; ++b) {
    for (int c = 0; c < x.C; ++c) {
      const double* xp = x.plane(b, c);
      double acc = 0.0;
      for (int s = 0; s < S; ++s) acc += xp[s];
      out.at(b, c) = acc / S;
    }
  }
  return out;
}

Tensor4 global_avg_pool_bwd(const Tensor4& x, const Matrix& grad_out) {
  require(grad_out.rows == x.B && grad_out.cols == x.C,
          "global_avg_pool_bwd: grad_out shape mismatch");
  const int S = x.spatial();
  Tensor4 g(x.B, x.C, x.H, x.W);
  for (int b = 0; b < x.B; ++b) {
    for (int c = 0; c < x.C; ++c) {
      const double v = grad_out.at(b, c) / S;
      double* gp = g.plane(b, c);
      for (int s = 0; s < S; ++s) gp[s] = v;
    }
  }
  return g;
}

Matrix fc_fwd(const Matrix& h, const Matrix& W, const Matrix& bias) {
  require(W.cols == h.cols, "fc_fwd: W.cols != h.cols");
  require(bias.rows == 1 && bias.cols == W.rows, "fc_fwd: bias length != W.rows");
  Matrix out(h.rows, W.rows);
  for (int r = 0; r < h.rows; ++r) {
    const double* hp = h.row(r);
    double* op = out.row(r);
    for (int o = 0; o < W.rows; ++o) {
      const double* wp = W.row(o);
      double acc = bias.at(0, o);
      for (int i = 0; i < h.cols; ++i) acc += wp[i] * hp[i];
      op[o] = acc;
    }
  }
  return out;
}

FcGrads fc_bwd(const Matrix& h, const Matrix& W, const Matrix& grad_out) {
  require(W.cols == h.cols, "fc_bwd: W.cols != h.cols");
  require(grad_out.rows == h.rows && grad_out.cols == W.rows,
          "fc_bwd: grad_out shape mismatch");
  FcGrads g{Matrix(h.rows, h.cols), Matrix(W.rows, W.cols), Matrix(1, W.rows)};
  for (int r = 0; r < h.rows; ++r) {
    const double* hp = h.row(r);
    const double* gp = grad_out.row(r);
    double* ghp = g.h.row(r);
    for (int o = 0; o < W.rows; ++o) {
      const double go = gp[o];
      g.bias.at(0, o) += go;
      const double* wp = W.row(o);
      double* gwp = g.W.row(o);
      for (int i = 0; i < h.cols; ++i) {
        gwp[i] += go * hp[i];
        ghp[i] += wp[i] * go;
      }
    }
  }
  return g;
}

std::vector<double> softmax(const std::vector<double>& z) {
  std::vector<double> out(z.size());
  if (z.empty()) return out;
  const double zmax = *std::max_element(z.begin(), z.end());
  double sum = 0.0;
  for (std::size_t i = 0; i < z.size(); ++i) {
    out[i] = std::exp(z[i] - zmax);
    sum += out[i];
  }
  for (double& v : out) v /= sum;
  return out;
}

std::vector<double> sigmoid(const std::vector<double>& z) {
  std::vector<double> out(z.size());
  for (std::size_t i = 0; i < z.size(); ++i) out[i] = 1.0 / (1.0 + std::exp(-z[i]));
  return out;
}

}  // namespace mdk
