#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "mdk/errors.hpp"

namespace mdk {

// Batched feature map (B, C, H, W), row-major doubles.
struct Tensor4 {
  int B = 0, C = 0, H = 0, W = 0;
  std::vector<double> data;

  Tensor4() = default;
  Tensor4(int b, int c, int h, int w)
      : B(b), C(c), H(h), W(w),
        data(static_cast<std::size_t>(b) * c * h * w, 0.0) {
    if (b < 0 || c < 0 || h < 0 || w < 0)
      throw DimensionError("Tensor4: negative extent");
  }

  std::size_t size() const { return data.size(); }
  int spatial() const { return H * W; }

  double& at(int b, int c, int h, int w) {
    return data[((static_cast<std::size_t>(b) * C + c) * H + h) * W + w];
  }
  double at(int b, int c, int h, int w) const {
    return data[((static_cast<std::size_t>(b) * C + c) * H + h) * W + w];
  }

  // Start of the (b, c) spatial plane.
  double* plane(int b, int c) {
    return data.data() + (static_cast<std::size_t>(b) * C + c) * H * W;
  }
  const double* plane(int b, int c) const {
    return data.data() + (static_cast<std::size_t>(b) * C + c) * H * W;
  }

  bool same_shape(const Tensor4& o) const {
    return B == o.B && C == o.C && H == o.H && W == o.W;
  }
};

// Row-major matrix; vectors are stored as 1 x n.
struct Matrix {
  int rows = 0, cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(int r, int c)
      : rows(r), cols(c), data(static_cast<std::size_t>(r) * c, 0.0) {
    if (r < 0 || c < 0) throw DimensionError("Matrix: negative extent");
  }

  std::size_t size() const { return data.size(); }

  double& at(int r, int c) { return data[static_cast<std::size_t>(r) * cols + c]; }
  double at(int r, int c) const { return data[static_cast<std::size_t>(r) * cols + c]; }

  double* row(int r) { return data.data() + static_cast<std::size_t>(r) * cols; }
  const double* row(int r) const { return data.data() + static_cast<std::size_t>(r) * cols; }

  bool same_shape(const Matrix& o) const { return rows == o.rows && cols == o.cols; }
};

// Named parameter with a gradient slot of identical shape.
struct ParamSlot {
  std::string name;
  Matrix value;
  Matrix grad;

  ParamSlot() = default;
  ParamSlot(std::string n, int rows, int cols)
      : name(std::move(n)), value(rows, cols), grad(rows, cols) {}

  void zero_grad() { std::fill(grad.data.begin(), grad.data.end(), 0.0); }
};

bool all_finite(const std::vector<double>& v);
bool all_finite(const Tensor4& t);
bool all_finite(const Matrix& m);

inline void acc_grad(ParamSlot& slot, const Matrix& g) {
  if (!slot.grad.same_shape(g))
    throw DimensionError("acc_grad: shape mismatch for " + slot.name);
  for (std::size_t i = 0; i < g.data.size(); ++i) slot.grad.data[i] += g.data[i];
}

}  // namespace mdk
