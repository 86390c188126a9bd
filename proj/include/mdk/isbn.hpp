#pragma once

#include <vector>

#include "mdk/tensor.hpp"

namespace mdk {

enum class Mode { kTrain, kEval };

// Per-channel batch statistics plus EMA copies used at evaluation time.
// sigma is sqrt(var + eps), so it is bounded below by sqrt(eps).
struct BatchStats {
  std::vector<double> mu;
  std::vector<double> sigma;
  std::vector<double> running_mu;
  std::vector<double> running_sigma;
  bool running_init = false;
};

// Instance-specific affine parameters, one (gamma, beta) row per batch entry.
struct AffinePair {
  Matrix gamma;  // B x C
  Matrix beta;   // B x C
};

inline constexpr double kBnEps = 1e-5;
inline constexpr double kBnMomentum = 0.1;

// Population mean and std per channel over (B, H, W). Requires B*H*W >= 2.
BatchStats batch_stats(const Tensor4& x, double eps);

// out[b,c,h,w] = gamma[b,c] * (x - m_c) / s_c + beta[b,c], with (m, s) the
// batch statistics in train mode and the running statistics in eval mode.
Tensor4 isbn_fwd(const Tensor4& x, const BatchStats& stats,
                 const AffinePair& affine, Mode mode);

struct IsbnGrads {
  Tensor4 x;
  Matrix gamma;  // B x C
  Matrix beta;   // B x C
};

// Train-mode backward, treating mu and sigma as functions of x.
IsbnGrads isbn_bwd(const Tensor4& x, const BatchStats& stats,
                   const AffinePair& affine, const Tensor4& grad_out);

// running <- (1 - momentum) * running + momentum * batch. First call copies.
BatchStats update_running_stats(BatchStats stats, double momentum);

// Shared-affine batch normalization (the conventional layer): gamma and beta
// are 1 x C and broadcast over the batch. Built on the instance-specific core.
Tensor4 std_bn_fwd(const Tensor4& x, const BatchStats& stats,
                   const Matrix& gamma, const Matrix& beta, Mode mode);

struct StdBnGrads {
  Tensor4 x;
  Matrix gamma;  // 1 x C
  Matrix beta;   // 1 x C
};
StdBnGrads std_bn_bwd(const Tensor4& x, const BatchStats& stats,
                      const Matrix& gamma, const Matrix& beta,
                      const Tensor4& grad_out);

// Broadcast 1 x C affine rows to B x C.
AffinePair broadcast_affine(const Matrix& gamma, const Matrix& beta, int B);

}  // namespace mdk
