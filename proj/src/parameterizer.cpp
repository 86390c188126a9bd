#include "mdk/parameterizer.hpp"

#include <cmath>

#include "mdk/init.hpp"
#include "mdk/ops.hpp"

namespace mdk {

ParameterizerParams ParameterizerParams::init(const ParameterizerConfig& cfg,
                                              std::uint64_t root_seed) {
  if (cfg.C < 1 || cfg.d < 1 || cfg.num_classes < 1)
    throw ConfigError("ParameterizerConfig: C, d, num_classes must be >= 1");
  ParameterizerParams p;
  p.cfg = cfg;
  p.enc.conv_W = ParamSlot("par.enc.conv.W", cfg.C, 1);
  p.enc.conv_b = ParamSlot("par.enc.conv.b", 1, cfg.C);
  p.enc.bn_gamma = ParamSlot("par.enc.bn.gamma", 1, cfg.C);
  p.enc.bn_beta = ParamSlot("par.enc.bn.beta", 1, cfg.C);
  p.enc.fc1_W = ParamSlot("par.enc.fc1.W", cfg.d, cfg.C);
  p.enc.fc1_b = ParamSlot("par.enc.fc1.b", 1, cfg.d);
  p.enc.fc2_W = ParamSlot("par.enc.fc2.W", cfg.d, cfg.d);
  p.enc.fc2_b = ParamSlot("par.enc.fc2.b", 1, cfg.d);
  p.enc.fc3_W = ParamSlot("par.enc.fc3.W", cfg.d, cfg.d);
  p.enc.fc3_b = ParamSlot("par.enc.fc3.b", 1, cfg.d);
  p.dec_W = ParamSlot("par.dec.W", 2 * cfg.C, cfg.d);
  p.dec_b = ParamSlot("par.dec.b", 1, 2 * cfg.C);
  p.cls_W = ParamSlot("par.cls.W", cfg.d, cfg.num_classes);

  init_xavier(p.enc.conv_W, 1, cfg.C, root_seed);
  init_constant(p.enc.bn_gamma, 1.0);
  init_xavier(p.enc.fc1_W, cfg.C, cfg.d, root_seed);
  init_xavier(p.enc.fc2_W, cfg.d, cfg.d, root_seed);
  init_xavier(p.enc.fc3_W, cfg.d, cfg.d, root_seed);
  init_xavier(p.dec_W, cfg.d, 2 * cfg.C, root_seed);
  init_xavier(p.cls_W, cfg.d, cfg.num_classes, root_seed);
  return p;
}

void ParameterizerParams::for_each_slot(
    const std::function<void(ParamSlot&)>& fn) {
  fn(enc.conv_W);
  fn(enc.conv_b);
  fn(enc.bn_gamma);
  fn(enc.bn_beta);
  fn(enc.fc1_W);
  fn(enc.fc1_b);
  fn(enc.fc2_W);
  fn(enc.fc2_b);
  fn(enc.fc3_W);
  fn(enc.fc3_b);
  fn(dec_W);
  fn(dec_b);
  fn(cls_W);
}

LatentBatch encode(const Tensor4& input, const ParameterizerParams& params,
                   BatchStats& bn_state, Mode mode, EncodeCache* cache) {
  if (input.C != 1) throw DimensionError("encode: expected (B, 1, H, W) input");

  Tensor4 conv_out =
      site_linear_fwd(input, params.enc.conv_W.value, params.enc.conv_b.value);

  BatchStats st;
  if (mode == Mode::kTrain) {
    st = batch_stats(conv_out, kBnEps);
    bn_state.mu = st.mu;
    bn_state.sigma = st.sigma;
  } else {
    st = bn_state;
  }

  Tensor4 bn_out = std_bn_fwd(conv_out, st, params.enc.bn_gamma.value,
                              params.enc.bn_beta.value, mode);
  Tensor4 relu_out = relu_fwd(bn_out);
  Matrix pooled = global_avg_pool_fwd(relu_out);

  Matrix fc1_out = fc_fwd(pooled, params.enc.fc1_W.value, params.enc.fc1_b.value);
  Matrix fc1_relu = relu_fwd(fc1_out);
  Matrix fc2_out = fc_fwd(fc1_relu, params.enc.fc2_W.value, params.enc.fc2_b.value);
  Matrix fc2_relu = relu_fwd(fc2_out);
  Matrix phi = fc_fwd(fc2_relu, params.enc.fc3_W.value, params.enc.fc3_b.value);

  if (cache) {
    cache->input = input;
    cache->conv_out = conv_out;
    cache->bn = st;
    cache->mode = mode;
    cache->bn_out = bn_out;
    cache->relu_out = relu_out;
    cache->pooled = pooled;
    cache->fc1_out = fc1_out;
    cache->fc1_relu = fc1_relu;
    cache->fc2_out = fc2_out;
    cache->fc2_relu = fc2_relu;
    cache->phi = phi;
  }
  return LatentBatch{std::move(phi)};
}

Tensor4 encode_bwd(ParameterizerParams& params, const EncodeCache& cache,
                   const Matrix& grad_phi) {
  if (cache.mode != Mode::kTrain)
    throw TrainAbort("encode_bwd: backward requires a train-mode cache");

  FcGrads g3 = fc_bwd(cache.fc2_relu, params.enc.fc3_W.value, grad_phi);
  acc_grad(params.enc.fc3_W, g3.W);
  acc_grad(params.enc.fc3_b, g3.bias);

  Matrix g_fc2 = relu_bwd(cache.fc2_out, g3.h);
  FcGrads g2 = fc_bwd(cache.fc1_relu, params.enc.fc2_W.value, g_fc2);
  acc_grad(params.enc.fc2_W, g2.W);
  acc_grad(params.enc.fc2_b, g2.bias);

  Matrix g_fc1 = relu_bwd(cache.fc1_out, g2.h);
  FcGrads g1 = fc_bwd(cache.pooled, params.enc.fc1_W.value, g_fc1);
  acc_grad(params.enc.fc1_W, g1.W);
  acc_grad(params.enc.fc1_b, g1.bias);

  Tensor4 g_pool = global_avg_pool_bwd(cache.relu_out, g1.h);
  Tensor4 g_bn_out = relu_bwd(cache.bn_out, g_pool);
  StdBnGrads gbn = std_bn_bwd(cache.conv_out, cache.bn, params.enc.bn_gamma.value,
                              params.enc.bn_beta.value, g_bn_out);
  acc_grad(params.enc.bn_gamma, gbn.gamma);
  acc_grad(params.enc.bn_beta, gbn.beta);

  SiteLinearGrads gc =
      site_linear_bwd(cache.input, params.enc.conv_W.value, gbn.x);
  acc_grad(params.enc.conv_W, gc.W);
  acc_grad(params.enc.conv_b, gc.bias);
  return std::move(gc.x);
}

AffinePair decode(const LatentBatch& latent, const ParameterizerParams& params) {
  const int C = params.cfg.C;
  if (params.dec_W.value.rows != 2 * C)
    throw DimensionError("decode: decoder width != 2C");
  Matrix raw = fc_fwd(latent.phi, params.dec_W.value, params.dec_b.value);
  AffinePair ap{Matrix(raw.rows, C), Matrix(raw.rows, C)};
  for (int b = 0; b < raw.rows; ++b)
    for (int c = 0; c < C; ++c) {
      ap.gamma.at(b, c) = 1.0 + raw.at(b, c);
      ap.beta.at(b, c) = raw.at(b, C + c);
    }
  return ap;
}

Matrix decode_bwd(ParameterizerParams& params, const LatentBatch& latent,
                  const Matrix& grad_gamma, const Matrix& grad_beta) {
  const int C = params.cfg.C;
  const int B = latent.phi.rows;
  if (grad_gamma.rows != B || grad_gamma.cols != C || !grad_gamma.same_shape(grad_beta))
    throw DimensionError("decode_bwd: gradient shape mismatch");
  Matrix grad_raw(B, 2 * C);
  for (int b = 0; b < B; ++b)
    for (int c = 0; c < C; ++c) {
      grad_raw.at(b, c) = grad_gamma.at(b, c);  // d gamma / d raw = 1
      grad_raw.at(b, C + c) = grad_beta.at(b, c);
    }
  FcGrads g = fc_bwd(latent.phi, params.dec_W.value, grad_raw);
  acc_grad(params.dec_W, g.W);
  acc_grad(params.dec_b, g.bias);
  return std::move(g.h);
}

Matrix classify(const LatentBatch& latent, const Matrix& W) {
  if (W.rows != latent.phi.cols)
    throw DimensionError("classify: W.rows != phi width");
  const int B = latent.phi.rows;
  const int K = W.cols;
  Matrix logits(B, K);
  for (int i = 0; i < B; ++i) {
    const double* ph = latent.phi.row(i);
    double* lp = logits.row(i);
    for (int k = 0; k < K; ++k) {
      double acc = 0.0;
      for (int j = 0; j < W.rows; ++j) acc += ph[j] * W.at(j, k);
      lp[k] = acc;
    }
  }
  return logits;
}

Matrix classify_bwd(const LatentBatch& latent, ParamSlot& cls_W,
                    const Matrix& grad_logits) {
  const Matrix& W = cls_W.value;
  if (grad_logits.rows != latent.phi.rows || grad_logits.cols != W.cols)
    throw DimensionError("classify_bwd: grad_logits shape mismatch");
  Matrix grad_phi(latent.phi.rows, latent.phi.cols);
  for (int i = 0; i < latent.phi.rows; ++i) {
    const double* ph = latent.phi.row(i);
    const double* gl = grad_logits.row(i);
    double* gp = grad_phi.row(i);
    for (int k = 0; k < W.cols; ++k) {
      const double g = gl[k];
      for (int j = 0; j < W.rows; ++j) {
        cls_W.grad.at(j, k) += g * ph[j];
        gp[j] += g * W.at(j, k);
      }
    }
  }
  return grad_phi;
}

Matrix predict_virtual(const Matrix& logits) {
  Matrix out(logits.rows, logits.cols);
  for (std::size_t i = 0; i < logits.data.size(); ++i)
    out.data[i] = 1.0 / (1.0 + std::exp(-logits.data[i]));
  return out;
}

}  // namespace mdk
