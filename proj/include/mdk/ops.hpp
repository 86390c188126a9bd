#pragma once

#include <vector>

#include "mdk/tensor.hpp"

namespace mdk {

// Layer primitives with hand-derived backward passes. Backward functions
// return the gradients of sum(grad_out * forward(...)) w.r.t. each input.

// Per-site channel mixing: out[b,o,h,w] = sum_i W[o,i] * x[b,i,h,w] + bias[o].
// W is C_out x C_in, bias is 1 x C_out.
Tensor4 site_linear_fwd(const Tensor4& x, const Matrix& W, const Matrix& bias);

struct SiteLinearGrads {
  Tensor4 x;
  Matrix W;
  Matrix bias;
};
SiteLinearGrads site_linear_bwd(const Tensor4& x, const Matrix& W,
                                const Tensor4& grad_out);

// ReLU; subgradient at 0 is 0.
Tensor4 relu_fwd(const Tensor4& x);
Tensor4 relu_bwd(const Tensor4& x, const Tensor4& grad_out);
Matrix relu_fwd(const Matrix& x);
Matrix relu_bwd(const Matrix& x, const Matrix& grad_out);

// Spatial mean per (b, c); backward spreads grad/(H*W) uniformly.
Matrix global_avg_pool_fwd(const Tensor4& x);
Tensor4 global_avg_pool_bwd(const Tensor4& x, const Matrix& grad_out);

// Affine map on row vectors: out[r,o] = sum_i W[o,i] * h[r,i] + bias[o].
Matrix fc_fwd(const Matrix& h, const Matrix& W, const Matrix& bias);

struct FcGrads {
  Matrix h;
  Matrix W;
  Matrix bias;
};
FcGrads fc_bwd(const Matrix& h, const Matrix& W, const Matrix& grad_out);

// Shift-stable softmax; output sums to 1.
std::vector<double> softmax(const std::vector<double>& z);

// Elementwise logistic; entries in (0, 1).
std::vector<double> sigmoid(const std::vector<double>& z);

}  // namespace mdk
