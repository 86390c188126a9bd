#pragma once

#include <cstdint>
#include <functional>

#include "mdk/isbn.hpp"
#include "mdk/losses.hpp"
#include "mdk/parameterizer.hpp"
#include "mdk/tensor.hpp"

namespace mdk {

struct ModelConfig {
  int C = 16;  // backbone channels
  int d = 32;  // parameterizer latent width
  int M = 3;   // number of domains
  Variant variant = Variant::kBase;

  // base and gcl classify over the M core classes, vcl over all V classes.
  int num_classes() const;
};

// backbone: site_linear(1->C) -> BN -> ReLU -> site_linear(C->C)
// predictor: site_linear(C->C) -> ReLU -> site_linear(C->C) -> ReLU
//            -> site_linear(C->1)
struct ModelParams {
  ModelConfig cfg;
  ParamSlot bb1_W, bb1_b;
  ParamSlot bb_bn_gamma, bb_bn_beta;
  ParamSlot bb2_W, bb2_b;
  ParameterizerParams par;
  ParamSlot p1_W, p1_b;
  ParamSlot p2_W, p2_b;
  ParamSlot p3_W, p3_b;

  static ModelParams init(const ModelConfig& cfg, std::uint64_t root_seed);
  void for_each_slot(const std::function<void(ParamSlot&)>& fn);
  void for_each_slot(const std::function<void(const ParamSlot&)>& fn) const;
  void zero_grads();
};

// Mutable normalization state: three sites carry running statistics.
struct ModelState {
  BatchStats bb_bn;   // backbone's conventional BN
  BatchStats enc_bn;  // parameterizer encoder's BN
  BatchStats isbn;    // instance-modulated normalization of backbone features

  // EMA update after a training step.
  void update_running(double momentum);
};

struct ForwardCache {
  Tensor4 input;
  Tensor4 bb1_out;
  Tensor4 bb_bn_out;
  Tensor4 bb_relu_out;
  Tensor4 features;  // backbone output, input to the modulated normalization
  EncodeCache enc;
  AffinePair affine;
  Tensor4 isbn_out;
  Tensor4 p1_out, p1_relu;
  Tensor4 p2_out, p2_relu;
};

struct ForwardResult {
  Tensor4 y_hat;   // (B, 1, H, W) predicted density
  Matrix logits;   // B x num_classes
  Matrix phi;      // B x d
  AffinePair affine;
  ForwardCache cache;  // populated only when requested
};

// Full forward pass. In train mode the three normalization sites use fresh
// batch statistics (mirrored into `state` for the EMA update); in eval mode
// they use the running statistics.
ForwardResult forward(const Tensor4& input, const ModelParams& params,
                      ModelState& state, Mode mode, bool want_cache);

// Accumulates parameter gradients for grad_yhat plus (optionally) grad_logits.
void backward(ModelParams& params, const ForwardResult& result,
              const Tensor4& grad_yhat, const Matrix* grad_logits);

}  // namespace mdk
