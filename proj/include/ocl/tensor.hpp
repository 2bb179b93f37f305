#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "ocl/error.hpp"

namespace ocl {

// Dense row-major double tensor. Invariant: product(shape) == data.size(),
// maintained by the constructors; every kernel below rejects non-finite
// outputs instead of letting NaN/Inf propagate.
struct Tensor {
  std::vector<int> shape;
  std::vector<double> data;

  Tensor() = default;
  Tensor(std::vector<int> shp, std::vector<double> values);

  static Tensor zeros(std::vector<int> shp);
  static Tensor scalar(double v);

  long long numel() const {
    long long n = 1;
    for (int d : shape) n *= d;
    return shape.empty() ? static_cast<long long>(data.size()) : n;
  }
  int ndim() const { return static_cast<int>(shape.size()); }
  int rows() const { return shape.at(0); }
  int cols() const { return shape.at(1); }

  double& at(int r, int c) { return data[static_cast<size_t>(r) * cols() + c]; }
  double at(int r, int c) const { return data[static_cast<size_t>(r) * cols() + c]; }

  bool same_shape(const Tensor& o) const { return shape == o.shape; }
  bool same_bits(const Tensor& o) const;
};

constexpr double kLayerNormEps = 1e-5;

void ensure_finite(const Tensor& t, const char* what);

// ---- kernels -------------------------------------------------------------
// Shared by the autodiff tape (forward values) and the no-grad inference
// path, so both compute identical numbers.

Tensor matmul(const Tensor& a, const Tensor& b);     // (m,k)x(k,n)
Tensor matmul_nt(const Tensor& a, const Tensor& b);  // (m,k)x(n,k)^T
Tensor add(const Tensor& a, const Tensor& b);        // same shape
Tensor add_rowvec(const Tensor& m, const Tensor& v); // (m,n) + (n,) per row
Tensor scale(const Tensor& a, double c);
Tensor tanh_map(const Tensor& a);
Tensor time_shift(const Tensor& a, int offset);      // out[t] = a[t-offset], zero fill
Tensor softmax_rows(const Tensor& a);
Tensor log_softmax_rows(const Tensor& a);
// y = gain * (x - mean) / sqrt(var + eps) + bias, per row. Optionally exports
// the normalized rows and 1/sigma for the backward pass.
Tensor layer_norm_rows(const Tensor& x, const Tensor& gain, const Tensor& bias,
                       Tensor* xhat_out = nullptr, Tensor* inv_sigma_out = nullptr);

}  // namespace ocl
