#pragma once

#include <cstdint>
#include <functional>

#include "mdk/isbn.hpp"
#include "mdk/tensor.hpp"

namespace mdk {

struct ParameterizerConfig {
  int C = 16;           // backbone channel count; decoder emits 2C
  int d = 32;           // latent width of phi
  int num_classes = 1;  // M for ground-truth guidance, V for virtual guidance
};

struct LatentBatch {
  Matrix phi;  // B x d
};

// Conv-BN-ReLU block, global average pooling, then three FC layers.
struct EncoderParams {
  ParamSlot conv_W, conv_b;     // 1 -> C per-site linear
  ParamSlot bn_gamma, bn_beta;  // shared affine, 1 x C
  ParamSlot fc1_W, fc1_b;       // C -> d
  ParamSlot fc2_W, fc2_b;       // d -> d
  ParamSlot fc3_W, fc3_b;       // d -> d
};

struct ParameterizerParams {
  ParameterizerConfig cfg;
  EncoderParams enc;
  ParamSlot dec_W, dec_b;  // d -> 2C decoder
  ParamSlot cls_W;         // d x K, columns are class centers (no bias)

  static ParameterizerParams init(const ParameterizerConfig& cfg,
                                  std::uint64_t root_seed);
  void for_each_slot(const std::function<void(ParamSlot&)>& fn);
};

// Intermediates retained for the hand-written backward pass.
struct EncodeCache {
  Tensor4 input;
  Tensor4 conv_out;
  BatchStats bn;  // statistics the forward actually used
  Mode mode = Mode::kTrain;
  Tensor4 bn_out;
  Tensor4 relu_out;
  Matrix pooled;
  Matrix fc1_out, fc1_relu;
  Matrix fc2_out, fc2_relu;
  Matrix phi;
};

// phi(x) for a batch of raw input grids (B, 1, H, W). In train mode the block
// computes fresh batch statistics and mirrors them into bn_state for the EMA
// update; in eval mode it reads bn_state's running statistics.
LatentBatch encode(const Tensor4& input, const ParameterizerParams& params,
                   BatchStats& bn_state, Mode mode, EncodeCache* cache);

// Accumulates parameter gradients; returns the gradient w.r.t. the input grid.
Tensor4 encode_bwd(ParameterizerParams& params, const EncodeCache& cache,
                   const Matrix& grad_phi);

// Decoder output is split in half: gamma = 1 + raw[:, :C] (identity-centered),
// beta = raw[:, C:].
AffinePair decode(const LatentBatch& latent, const ParameterizerParams& params);

Matrix decode_bwd(ParameterizerParams& params, const LatentBatch& latent,
                  const Matrix& grad_gamma, const Matrix& grad_beta);

// logits[i, k] = phi_i . w_k  (no bias term).
Matrix classify(const LatentBatch& latent, const Matrix& W);

Matrix classify_bwd(const LatentBatch& latent, ParamSlot& cls_W,
                    const Matrix& grad_logits);

// Elementwise sigmoid of classifier logits; rows are predicted virtual labels
// (not normalized to sum 1).
Matrix predict_virtual(const Matrix& logits);

}  // namespace mdk
