#include "mdk/isbn.hpp"

#include <cmath>
#include <string>

namespace mdk {

namespace {

void require(bool cond, const std::string& msg) {
  if (!cond) throw DimensionError(msg);
}

}  // namespace

BatchStats batch_stats(const Tensor4& x, double eps) {
  const long long n = static_cast<long long>(x.B) * x.spatial();
  if (n < 2) throw DimensionError("batch_stats: B*H*W < 2 (degenerate batch)");
  const int S = x.spatial();
  BatchStats st;
  st.mu.assign(x.C, 0.0);
  st.sigma.assign(x.C, 0.0);
  for (int c = 0; c < x.C; ++c) {
    double acc = 0.0;
    for (int b = 0; b < x.B; ++b) {
      const double* xp = x.plane(b, c);
      for (int s = 0; s < S; ++s) acc += xp[s];
    }
    const double mu = acc / static_cast<double>(n);
    double var_acc = 0.0;
    for (int b = 0; b < x.B; ++b) {
      const double* xp = x.plane(b, c);
      for (int s = 0; s < S; ++s) {
        const double d = xp[s] - mu;
        var_acc += d * d;
      }
    }
    st.mu[c] = mu;
    st.sigma[c] = std::sqrt(var_acc / static_cast<double>(n) + eps);
  }
  return st;
}

Tensor4 isbn_fwd(const Tensor4& x, const BatchStats& stats,
                 const AffinePair& affine, Mode mode) {
  require(affine.gamma.rows == x.B && affine.gamma.cols == x.C,
          "isbn_fwd: gamma shape mismatch");
  require(affine.beta.rows == x.B && affine.beta.cols == x.C,
          "isbn_fwd: beta shape mismatch");
  const std::vector<double>* m = &stats.mu;
  const std::vector<double>* s = &stats.sigma;
  if (mode == Mode::kEval) {
    if (!stats.running_init)
      throw TrainAbort("isbn_fwd: eval mode with uninitialized running stats");
    m = &stats.running_mu;
    s = &stats.running_sigma;
  }
  require(static_cast<int>(m->size()) == x.C, "isbn_fwd: stats channel mismatch");

  const int S = x.spatial();
  Tensor4 out(x.B, x.C, x.H, x.W);
  for (int b = 0; b < x.B; ++b) {
    for (int c = 0; c < x.C; ++c) {
      const double g = affine.gamma.at(b, c);
      const double be = affine.beta.at(b, c);
      const double mu = (*m)[c];
      const double inv = 1.0 / (*s)[c];
      const double* xp = x.plane(b, c);
      double* op = out.plane(b, c);
      for (int i = 0; i < S; ++i) op[i] = g * ((xp[i] - mu) * inv) + be;
    }
  }
  return out;
}

IsbnGrads isbn_bwd(const Tensor4& x, const BatchStats& stats,
                   const AffinePair& affine, const Tensor4& grad_out) {
  require(x.same_shape(grad_out), "isbn_bwd: grad_out shape mismatch");
  require(affine.gamma.rows == x.B && affine.gamma.cols == x.C,
          "isbn_bwd: gamma shape mismatch");
  const int S = x.spatial();
  const double n = static_cast<double>(x.B) * S;

  IsbnGrads g{Tensor4(x.B, x.C, x.H, x.W), Matrix(x.B, x.C), Matrix(x.B, x.C)};

  // Per channel: dL/dx_i = (gxh_i - mean(gxh) - xh_i * mean(gxh * xh)) / sigma
  // with gxh = grad_out * gamma and xh the normalized input; the mean terms
  // carry the dependence of mu and sigma on x.
  for (int c = 0; c < x.C; ++c) {
    const double mu = stats.mu[c];
    const double inv = 1.0 / stats.sigma[c];
    double sum_gxh = 0.0;
    double sum_gxh_xh = 0.0;
    for (int b = 0; b < x.B; ++b) {
      const double gamma = affine.gamma.at(b, c);
      const double* xp = x.plane(b, c);
      const double* gp = grad_out.plane(b, c);
      double ggam = 0.0, gbet = 0.0;
      for (int i = 0; i < S; ++i) {
        const double xh = (xp[i] - mu) * inv;
        const double gxh = gp[i] * gamma;
        sum_gxh += gxh;
        sum_gxh_xh += gxh * xh;
        ggam += gp[i] * xh;
        gbet += gp[i];
      }
      g.gamma.at(b, c) = ggam;
      g.beta.at(b, c) = gbet;
    }
    const double mean_gxh = sum_gxh / n;
    const double mean_gxh_xh = sum_gxh_xh / n;
    for (int b = 0; b < x.B; ++b) {
      const double gamma = affine.gamma.at(b, c);
      const double* xp = x.plane(b, c);
      const double* gp = grad_out.plane(b, c);
      double* gxp = g.x.plane(b, c);
      for (int i = 0; i < S; ++i) {
        const double xh = (xp[i] - mu) * inv;
        const double gxh = gp[i] * gamma;
        gxp[i] = (gxh - mean_gxh - xh * mean_gxh_xh) * inv;
      }
    }
  }
  return g;
}

BatchStats update_running_stats(BatchStats stats, double momentum) {
  if (!(momentum >= 0.0 && momentum <= 1.0))
    throw ConfigError("update_running_stats: momentum outside [0, 1]");
  if (!stats.running_init) {
    stats.running_mu = stats.mu;
    stats.running_sigma = stats.sigma;
    stats.running_init = true;
    return stats;
  }
  for (std::size_t c = 0; c < stats.mu.size(); ++c) {
    stats.running_mu[c] =
        (1.0 - momentum) * stats.running_mu[c] + momentum * stats.mu[c];
    stats.running_sigma[c] =
        (1.0 - momentum) * stats.running_sigma[c] + momentum * stats.sigma[c];
  }
  return stats;
}

AffinePair broadcast_affine(const Matrix& gamma, const Matrix& beta, int B) {
  require(gamma.rows == 1 && beta.rows == 1 && gamma.cols == beta.cols,
          "broadcast_affine: expected 1 x C rows");
  AffinePair ap{Matrix(B, gamma.cols), Matrix(B, gamma.cols)};
  for (int b = 0; b < B; ++b)
    for (int c = 0; c < gamma.cols; ++c) {
      ap.gamma.at(b, c) = gamma.at(0, c);
      ap.beta.at(b, c) = beta.at(0, c);
    }
  return ap;
}

Tensor4 std_bn_fwd(const Tensor4& x, const BatchStats& stats,
                   const Matrix& gamma, const Matrix& beta, Mode mode) {
  return isbn_fwd(x, stats, broadcast_affine(gamma, beta, x.B), mode);
}

StdBnGrads std_bn_bwd(const Tensor4& x, const BatchStats& stats,
                      const Matrix& gamma, const Matrix& beta,
                      const Tensor4& grad_out) {
  IsbnGrads ig =
      isbn_bwd(x, stats, broadcast_affine(gamma, beta, x.B), grad_out);
  StdBnGrads g{std::move(ig.x), Matrix(1, x.C), Matrix(1, x.C)};
  for (int b = 0; b < x.B; ++b)
    for (int c = 0; c < x.C; ++c) {
      g.gamma.at(0, c) += ig.gamma.at(b, c);
      g.beta.at(0, c) += ig.beta.at(b, c);
    }
  return g;
}

}  // namespace mdk
