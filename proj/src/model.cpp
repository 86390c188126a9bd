#include "mdk/model.hpp"

#include "mdk/dvc.hpp"
#include "mdk/init.hpp"
#include "mdk/ops.hpp"

namespace mdk {

int ModelConfig::num_classes() const {
  return variant == Variant::kVcl ? virtual_class_count(M) : M;
}

ModelParams ModelParams::init(const ModelConfig& cfg, std::uint64_t root_seed) {
  if (cfg.C < 1 || cfg.d < 1 || cfg.M < 1)
    throw ConfigError("ModelConfig: C, d, M must be >= 1");
  ModelParams p;
  p.cfg = cfg;
  p.bb1_W = ParamSlot("bb.conv1.W", cfg.C, 1);
  p.bb1_b = ParamSlot("bb.conv1.b", 1, cfg.C);
  p.bb_bn_gamma = ParamSlot("bb.bn.gamma", 1, cfg.C);
  p.bb_bn_beta = ParamSlot("bb.bn.beta", 1, cfg.C);
  p.bb2_W = ParamSlot("bb.conv2.W", cfg.C, cfg.C);
  p.bb2_b = ParamSlot("bb.conv2.b", 1, cfg.C);
  p.par = ParameterizerParams::init(
      ParameterizerConfig{cfg.C, cfg.d, cfg.num_classes()}, root_seed);
  p.p1_W = ParamSlot("pred.l1.W", cfg.C, cfg.C);
  p.p1_b = ParamSlot("pred.l1.b", 1, cfg.C);
  p.p2_W = ParamSlot("pred.l2.W", cfg.C, cfg.C);
  p.p2_b = ParamSlot("pred.l2.b", 1, cfg.C);
  p.p3_W = ParamSlot("pred.l3.W", 1, cfg.C);
  p.p3_b = ParamSlot("pred.l3.b", 1, 1);

  init_xavier(p.bb1_W, 1, cfg.C, root_seed);
  init_constant(p.bb_bn_gamma, 1.0);
  init_xavier(p.bb2_W, cfg.C, cfg.C, root_seed);
  init_xavier(p.p1_W, cfg.C, cfg.C, root_seed);
  init_xavier(p.p2_W, cfg.C, cfg.C, root_seed);
  init_xavier(p.p3_W, cfg.C, 1, root_seed);
  return p;
}

void ModelParams::for_each_slot(const std::function<void(ParamSlot&)>& fn) {
  fn(bb1_W);
  fn(bb1_b);
  fn(bb_bn_gamma);
  fn(bb_bn_beta);
  fn(bb2_W);
  fn(bb2_b);
  par.for_each_slot(fn);
  fn(p1_W);
  fn(p1_b);
  fn(p2_W);
  fn(p2_b);
  fn(p3_W);
  fn(p3_b);
}

void ModelParams::for_each_slot(
    const std::function<void(const ParamSlot&)>& fn) const {
  const_cast<ModelParams*>(this)->for_each_slot(
      [&fn](ParamSlot& s) { fn(s); });
}

void ModelParams::zero_grads() {
  for_each_slot([](ParamSlot& s) { s.zero_grad(); });
}

void ModelState::update_running(double momentum) {
  bb_bn = update_running_stats(std::move(bb_bn), momentum);
  enc_bn = update_running_stats(std::move(enc_bn), momentum);
  isbn = update_running_stats(std::move(isbn), momentum);
}

ForwardResult forward(const Tensor4& input, const ModelParams& params,
                      ModelState& state, Mode mode, bool want_cache) {
  if (input.C != 1) throw DimensionError("forward: expected (B, 1, H, W) input");

  // Backbone.
  Tensor4 bb1_out = site_linear_fwd(input, params.bb1_W.value, params.bb1_b.value);
  BatchStats bb_st;
  if (mode == Mode::kTrain) {
    bb_st = batch_stats(bb1_out, kBnEps);
    state.bb_bn.mu = bb_st.mu;
    state.bb_bn.sigma = bb_st.sigma;
  } else {
    bb_st = state.bb_bn;
  }
  Tensor4 bb_bn_out = std_bn_fwd(bb1_out, bb_st, params.bb_bn_gamma.value,
                                 params.bb_bn_beta.value, mode);
  Tensor4 bb_relu_out = relu_fwd(bb_bn_out);
  Tensor4 features =
      site_linear_fwd(bb_relu_out, params.bb2_W.value, params.bb2_b.value);

  // Parameterizer branch feeds off the raw input grid.
  EncodeCache enc_cache;
  LatentBatch latent = encode(input, params.par, state.enc_bn, mode,
                              want_cache ? &enc_cache : nullptr);
  AffinePair affine = decode(latent, params.par);
  Matrix logits = classify(latent, params.par.cls_W.value);

  // Instance-modulated normalization of backbone features.
  BatchStats isbn_st;
  if (mode == Mode::kTrain) {
    isbn_st = batch_stats(features, kBnEps);
    state.isbn.mu = isbn_st.mu;
    state.isbn.sigma = isbn_st.sigma;
  } else {
    isbn_st = state.isbn;
  }
  Tensor4 isbn_out = isbn_fwd(features, isbn_st, affine, mode);

  // Density predictor.
  Tensor4 p1_out = site_linear_fwd(isbn_out, params.p1_W.value, params.p1_b.value);
  Tensor4 p1_relu = relu_fwd(p1_out);
  Tensor4 p2_out = site_linear_fwd(p1_relu, params.p2_W.value, params.p2_b.value);
  Tensor4 p2_relu = relu_fwd(p2_out);
  Tensor4 y_hat = site_linear_fwd(p2_relu, params.p3_W.value, params.p3_b.value);

  ForwardResult res;
  res.y_hat = std::move(y_hat);
  res.logits = std::move(logits);
  res.phi = latent.phi;
  res.affine = affine;
  if (want_cache) {
    res.cache.input = input;
    res.cache.bb1_out = std::move(bb1_out);
    res.cache.bb_bn_out = std::move(bb_bn_out);
    res.cache.bb_relu_out = std::move(bb_relu_out);
    res.cache.features = std::move(features);
    res.cache.enc = std::move(enc_cache);
    res.cache.affine = std::move(affine);
    res.cache.isbn_out = std::move(isbn_out);
    res.cache.p1_out = std::move(p1_out);
    res.cache.p1_relu = std::move(p1_relu);
    res.cache.p2_out = std::move(p2_out);
    res.cache.p2_relu = std::move(p2_relu);
    // The cached statistics live in the state mirrors (train mode only).
  }
  return res;
}

void backward(ModelParams& params, const ForwardResult& result,
              const Tensor4& grad_yhat, const Matrix* grad_logits) {
  const ForwardCache& cache = result.cache;
  if (cache.input.size() == 0)
    throw TrainAbort("backward: forward was run without want_cache");
  if (cache.enc.mode != Mode::kTrain)
    throw TrainAbort("backward: requires a train-mode forward");

  // Predictor.
  SiteLinearGrads g3 = site_linear_bwd(cache.p2_relu, params.p3_W.value, grad_yhat);
  acc_grad(params.p3_W, g3.W);
  acc_grad(params.p3_b, g3.bias);
  Tensor4 g_p2 = relu_bwd(cache.p2_out, g3.x);
  SiteLinearGrads g2 = site_linear_bwd(cache.p1_relu, params.p2_W.value, g_p2);
  acc_grad(params.p2_W, g2.W);
  acc_grad(params.p2_b, g2.bias);
  Tensor4 g_p1 = relu_bwd(cache.p1_out, g2.x);
  SiteLinearGrads g1 = site_linear_bwd(cache.isbn_out, params.p1_W.value, g_p1);
  acc_grad(params.p1_W, g1.W);
  acc_grad(params.p1_b, g1.bias);

  // Instance-modulated normalization; batch statistics were computed from
  // cache.features, so rebuild them for the exact backward.
  const BatchStats isbn_st = batch_stats(cache.features, kBnEps);
  IsbnGrads g_isbn = isbn_bwd(cache.features, isbn_st, cache.affine, g1.x);

  // Modulation gradients flow into the parameterizer. gamma = 1 + raw keeps
  // d gamma / d raw = 1.
  Matrix grad_phi = decode_bwd(params.par, LatentBatch{result.phi},
                               g_isbn.gamma, g_isbn.beta);
  if (grad_logits) {
    Matrix g_cls = classify_bwd(LatentBatch{result.phi}, params.par.cls_W,
                                *grad_logits);
    for (std::size_t i = 0; i < grad_phi.data.size(); ++i)
      grad_phi.data[i] += g_cls.data[i];
  }
  encode_bwd(params.par, cache.enc, grad_phi);  // input gradient unused

  // Backbone.
  SiteLinearGrads g_bb2 =
      site_linear_bwd(cache.bb_relu_out, params.bb2_W.value, g_isbn.x);
  acc_grad(params.bb2_W, g_bb2.W);
  acc_grad(params.bb2_b, g_bb2.bias);
  Tensor4 g_bb_relu = relu_bwd(cache.bb_bn_out, g_bb2.x);
  const BatchStats bb_st = batch_stats(cache.bb1_out, kBnEps);
  StdBnGrads g_bb_bn = std_bn_bwd(cache.bb1_out, bb_st, params.bb_bn_gamma.value,
                                  params.bb_bn_beta.value, g_bb_relu);
  acc_grad(params.bb_bn_gamma, g_bb_bn.gamma);
  acc_grad(params.bb_bn_beta, g_bb_bn.beta);
  SiteLinearGrads g_bb1 =
      site_linear_bwd(cache.input, params.bb1_W.value, g_bb_bn.x);
  acc_grad(params.bb1_W, g_bb1.W);
  acc_grad(params.bb1_b, g_bb1.bias);
}

}  // namespace mdk
