#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "mdk/gradcheck.hpp"
#include "mdk/ops.hpp"
#include "mdk/rng.hpp"
#include "oracles.hpp"

using namespace mdk;

namespace {

// Scalar probe sum(u * fwd(...)) whose gradients the backward pass returns.
double weighted_sum(const Tensor4& t, const Tensor4& u) {
  double acc = 0.0;
  for (std::size_t i = 0; i < t.data.size(); ++i) acc += t.data[i] * u.data[i];
  return acc;
}
double weighted_sum(const Matrix& m, const Matrix& u) {
  double acc = 0.0;
  for (std::size_t i = 0; i < m.data.size(); ++i) acc += m.data[i] * u.data[i];
  return acc;
}

}  // namespace

TEST_CASE("site_linear forward basics") {
  Tensor4 ones(1, 2, 1, 1);
  ones.data = {1.0, 1.0};
  Matrix W(1, 2);
  W.data = {1.0, 1.0};
  Matrix b(1, 1);
  Tensor4 out = site_linear_fwd(ones, W, b);
  CHECK(out.at(0, 0, 0, 0) == 2.0);

  // Identity weights pass the input through.
  Rng rng(7);
  Tensor4 x(2, 3, 2, 2);
  oracles::fill_uniform(x, rng);
  Matrix id(3, 3);
  for (int i = 0; i < 3; ++i) id.at(i, i) = 1.0;
  Matrix zero_b(1, 3);
  Tensor4 same = site_linear_fwd(x, id, zero_b);
  for (std::size_t i = 0; i < x.data.size(); ++i)
    CHECK(same.data[i] == x.data[i]);
}

TEST_CASE("site_linear matches the naive triple-loop oracle bit for bit") {
  Rng rng(11);
  Tensor4 x(2, 3, 2, 2);
  oracles::fill_uniform(x, rng);
  Matrix W(4, 3), b(1, 4);
  oracles::fill_uniform(W, rng);
  oracles::fill_uniform(b, rng);
  Tensor4 got = site_linear_fwd(x, W, b);
  Tensor4 expected = oracles::site_linear_naive(x, W, b);
  for (std::size_t i = 0; i < got.data.size(); ++i)
    CHECK(got.data[i] == expected.data[i]);
}

TEST_CASE("site_linear shape errors") {
  Tensor4 x(1, 2, 1, 1);
  Matrix W(1, 3), b(1, 1);
  CHECK_THROWS_AS(site_linear_fwd(x, W, b), DimensionError);
}

TEST_CASE("site_linear backward") {
  SUBCASE("zero upstream gives zero gradients") {
    Rng rng(3);
    Tensor4 x(2, 2, 2, 2);
    oracles::fill_uniform(x, rng);
    Matrix W(3, 2);
    oracles::fill_uniform(W, rng);
    Tensor4 zero(2, 3, 2, 2);
    SiteLinearGrads g = site_linear_bwd(x, W, zero);
    for (double v : g.x.data) CHECK(v == 0.0);
    for (double v : g.W.data) CHECK(v == 0.0);
    for (double v : g.bias.data) CHECK(v == 0.0);
  }
  SUBCASE("scalar case reduces to the product rule") {
    Tensor4 x(1, 1, 1, 1);
    x.data = {0.7};
    Matrix W(1, 1);
    W.data = {-1.3};
    Tensor4 up(1, 1, 1, 1);
    up.data = {2.5};
    SiteLinearGrads g = site_linear_bwd(x, W, up);
    CHECK(g.W.at(0, 0) == doctest::Approx(2.5 * 0.7).epsilon(1e-15));
    CHECK(g.x.at(0, 0, 0, 0) == doctest::Approx(2.5 * -1.3).epsilon(1e-15));
    CHECK(g.bias.at(0, 0) == 2.5);
  }
  SUBCASE("finite differences") {
    Rng rng(17);
    Tensor4 x(2, 3, 2, 2);
    oracles::fill_uniform(x, rng);
    ParamSlot W("W", 4, 3), b("b", 1, 4);
    oracles::fill_uniform(W.value, rng);
    oracles::fill_uniform(b.value, rng);
    ParamSlot xs("x", 1, static_cast<int>(x.data.size()));
    xs.value.data = x.data;
    Tensor4 u(2, 4, 2, 2);
    oracles::fill_uniform(u, rng);

    auto f = [&](bool with_grads) {
      Tensor4 xt = x;
      xt.data = xs.value.data;
      if (with_grads) {
        SiteLinearGrads g = site_linear_bwd(xt, W.value, u);
        xs.grad.data = g.x.data;
        W.grad = g.W;
        b.grad = g.bias;
      }
      return weighted_sum(site_linear_fwd(xt, W.value, b.value), u);
    };
    GradCheckReport report = grad_check({&xs, &W, &b}, f, 1e-6, 1e-6);
    CHECK(report.passed);
  }
}

TEST_CASE("relu") {
  Tensor4 x(1, 1, 1, 3);
  x.data = {-1.0, 0.0, 2.0};
  Tensor4 y = relu_fwd(x);
  CHECK(y.data == std::vector<double>{0.0, 0.0, 2.0});

  Tensor4 up(1, 1, 1, 3);
  up.data = {5.0, 5.0, 5.0};
  Tensor4 g = relu_bwd(x, up);
  CHECK(g.data == std::vector<double>{0.0, 0.0, 5.0});  // 0 at the kink
}

TEST_CASE("global average pooling") {
  Tensor4 c(2, 3, 4, 4);
  for (double& v : c.data) v = 2.75;
  Matrix pooled = global_avg_pool_fwd(c);
  for (double v : pooled.data) CHECK(v == doctest::Approx(2.75).epsilon(1e-15));

  Tensor4 q(1, 1, 2, 2);
  q.data = {1.0, 2.0, 3.0, 4.0};
  CHECK(global_avg_pool_fwd(q).at(0, 0) == 2.5);

  Rng rng(23);
  Tensor4 x(2, 2, 3, 3);
  oracles::fill_uniform(x, rng);
  Matrix u(2, 2);
  oracles::fill_uniform(u, rng);
  ParamSlot xs("x", 1, static_cast<int>(x.data.size()));
  xs.value.data = x.data;
  auto f = [&](bool with_grads) {
    Tensor4 xt = x;
    xt.data = xs.value.data;
    if (with_grads) {
      Tensor4 g = global_avg_pool_bwd(xt, u);
      xs.grad.data = g.data;
    }
    return weighted_sum(global_avg_pool_fwd(xt), u);
  };
  GradCheckReport report = grad_check({&xs}, f, 1e-6, 1e-8);
  CHECK(report.passed);
}

TEST_CASE("fully connected layer") {
  Matrix h(2, 3);
  h.data = {1, 2, 3, 4, 5, 6};
  Matrix id(3, 3);
  for (int i = 0; i < 3; ++i) id.at(i, i) = 1.0;
  Matrix zero_b(1, 3);
  Matrix same = fc_fwd(h, id, zero_b);
  CHECK(same.data == h.data);

  Matrix zeroW(3, 3), bias(1, 3);
  bias.data = {0.5, -1.0, 2.0};
  Matrix broadcast = fc_fwd(h, zeroW, bias);
  for (int r = 0; r < 2; ++r)
    for (int c = 0; c < 3; ++c) CHECK(broadcast.at(r, c) == bias.at(0, c));

  Rng rng(29);
  Matrix hr(3, 4);
  oracles::fill_uniform(hr, rng);
  ParamSlot W("W", 2, 4), b("b", 1, 2), hs("h", 3, 4);
  oracles::fill_uniform(W.value, rng);
  oracles::fill_uniform(b.value, rng);
  hs.value = hr;
  Matrix u(3, 2);
  oracles::fill_uniform(u, rng);
  auto f = [&](bool with_grads) {
    if (with_grads) {
      FcGrads g = fc_bwd(hs.value, W.value, u);
      hs.grad = g.h;
      W.grad = g.W;
      b.grad = g.bias;
    }
    return weighted_sum(fc_fwd(hs.value, W.value, b.value), u);
  };
  GradCheckReport report = grad_check({&hs, &W, &b}, f, 1e-6, 1e-6);
  CHECK(report.passed);

  // Same reference oracle as the per-site layer.
  Matrix got = fc_fwd(hr, W.value, b.value);
  Matrix expected = oracles::fc_naive(hr, W.value, b.value);
  for (std::size_t i = 0; i < got.data.size(); ++i)
    CHECK(got.data[i] == doctest::Approx(expected.data[i]).epsilon(1e-14));
}

TEST_CASE("softmax") {
  const std::vector<double> uniform = softmax({0.0, 0.0, 0.0, 0.0});
  for (double v : uniform) CHECK(v == doctest::Approx(0.25).epsilon(1e-15));

  const std::vector<double> direct = oracles::softmax_direct({1.0, 2.0, 3.0});
  const std::vector<double> got = softmax({1.0, 2.0, 3.0});
  for (int i = 0; i < 3; ++i)
    CHECK(std::fabs(got[i] - direct[i]) <= 1e-12);

  // Properties over random vectors: sums to 1, shift invariant, order kept.
  Rng rng(31);
  for (int trial = 0; trial < 200; ++trial) {
    const int n = 2 + static_cast<int>(rng.bounded(6));
    std::vector<double> z(n);
    for (double& v : z) v = rng.uniform(-30.0, 30.0);
    const std::vector<double> p = softmax(z);
    double sum = 0.0;
    for (double v : p) sum += v;
    CHECK(std::fabs(sum - 1.0) <= 1e-12);

    const double shift = rng.uniform(-50.0, 50.0);
    std::vector<double> zs = z;
    for (double& v : zs) v += shift;
    const std::vector<double> ps = softmax(zs);
    for (int i = 0; i < n; ++i) CHECK(std::fabs(p[i] - ps[i]) <= 1e-12);

    for (int i = 0; i + 1 < n; ++i)
      if (z[i] < z[i + 1]) CHECK(p[i] <= p[i + 1]);
  }
}

TEST_CASE("sigmoid") {
  CHECK(sigmoid({0.0})[0] == 0.5);
  CHECK(sigmoid({std::log(3.0)})[0] == doctest::Approx(0.75).epsilon(1e-14));

  Rng rng(37);
  for (int trial = 0; trial < 100; ++trial) {
    const double z = rng.uniform(-20.0, 20.0);
    const double s = sigmoid({z})[0];
    CHECK(s > 0.0);
    CHECK(s < 1.0);
    CHECK(std::fabs(s + sigmoid({-z})[0] - 1.0) <= 1e-12);
  }
}

TEST_CASE("grad_check harness on closed-form cases") {
  SUBCASE("quadratic") {
    ParamSlot theta("theta", 1, 1);
    theta.value.at(0, 0) = 3.0;
    auto f = [&](bool with_grads) {
      const double t = theta.value.at(0, 0);
      if (with_grads) theta.grad.at(0, 0) = 2.0 * t;
      return t * t;
    };
    GradCheckReport report = grad_check({&theta}, f, 1e-5, 1e-9);
    CHECK(report.passed);
    CHECK(std::fabs(report.worst_analytic - 6.0) <= 1e-12);
    CHECK(std::fabs(report.worst_numeric - 6.0) <= 1e-9);
  }
  SUBCASE("constant function") {
    ParamSlot theta("theta", 1, 2);
    auto f = [&](bool with_grads) {
      if (with_grads) theta.zero_grad();
      return 42.0;
    };
    GradCheckReport report = grad_check({&theta}, f, 1e-5, 1e-12);
    CHECK(report.passed);
    CHECK(report.max_rel_err == 0.0);
  }
  SUBCASE("h outside the allowed range is rejected") {
    ParamSlot theta("theta", 1, 1);
    auto f = [&](bool) { return 0.0; };
    CHECK_THROWS_AS(grad_check({&theta}, f, 1e-3, 1e-6), ConfigError);
    CHECK_THROWS_AS(grad_check({&theta}, f, 1e-8, 1e-6), ConfigError);
  }
}

TEST_CASE("randomized forward/backward pairs pass finite differences") {
  // Entries in [-1, 1]; ReLU probes keep |x| > 1e-3 to stay off the kink.
  Rng rng(41);
  for (int trial = 0; trial < 5; ++trial) {
    Tensor4 x(2, 2, 2, 2);
    for (double& v : x.data) {
      v = rng.uniform(-1.0, 1.0);
      if (std::fabs(v) < 1e-3) v = v < 0 ? -1e-3 : 1e-3;
    }
    Tensor4 u(2, 2, 2, 2);
    oracles::fill_uniform(u, rng);
    ParamSlot xs("x", 1, static_cast<int>(x.data.size()));
    xs.value.data = x.data;
    auto f = [&](bool with_grads) {
      Tensor4 xt = x;
      xt.data = xs.value.data;
      if (with_grads) xs.grad.data = relu_bwd(xt, u).data;
      return weighted_sum(relu_fwd(xt), u);
    };
    GradCheckReport report = grad_check({&xs}, f, 1e-6, 1e-5);
    CHECK(report.passed);
  }
}
