#include "ocl/tensor.hpp"

#include <algorithm>
#include <cstring>

namespace ocl {

Tensor::Tensor(std::vector<int> shp, std::vector<double> values)
    : shape(std::move(shp)), data(std::move(values)) {
  long long n = 1;
  for (int d : shape) {
    OCL_CHECK(d >= 1, StructureError, "tensor dimension must be >= 1, got " << d);
    n *= d;
  }
  OCL_CHECK(n == static_cast<long long>(data.size()), StructureError,
            "tensor shape/data mismatch: shape holds " << n << " values, data holds "
                                                       << data.size());
}

Tensor Tensor::zeros(std::vector<int> shp) {
  long long n = 1;
  for (int d : shp) n *= d;
  Tensor t;
  t.shape = std::move(shp);
  t.data.assign(static_cast<size_t>(n), 0.0);
  return t;
}

Tensor Tensor::scalar(double v) { return Tensor({1}, {v}); }

bool Tensor::same_bits(const Tensor& o) const {
  if (shape != o.shape) return false;
  return std::memcmp(data.data(), o.data.data(), data.size() * sizeof(double)) == 0;
}

void ensure_finite(const Tensor& t, const char* what) {
  for (double v : t.data) {
    if (!std::isfinite(v)) {
      OCL_THROW(NumericError, "non-finite value in " << what);
    }
  }
}

static void check_2d(const Tensor& t, const char* what) {
  OCL_CHECK(t.ndim() == 2, StructureError, what << ": expected 2-d tensor");
}

Tensor matmul(const Tensor& a, const Tensor& b) {
  check_2d(a, "matmul lhs");
  check_2d(b, "matmul rhs");
  const int m = a.rows(), k = a.cols(), n = b.cols();
  OCL_CHECK(b.rows() == k, StructureError,
            "matmul: inner dims " << k << " vs " << b.rows());
  Tensor out = Tensor::zeros({m, n});
  for (int i = 0; i < m; ++i) {
    const double* arow = &a.data[static_cast<size_t>(i) * k];
    double* orow = &out.data[static_cast<size_t>(i) * n];
    for (int kk = 0; kk < k; ++kk) {
      const double aik = arow[kk];
      const double* brow = &b.data[static_cast<size_t>(kk) * n];
      for (int j = 0; j < n; ++j) orow[j] += aik * brow[j];
    }
  }
  ensure_finite(out, "matmul");
  return out;
}

Tensor matmul_nt(const Tensor& a, const Tensor& b) {
  check_2d(a, "matmul_nt lhs");
  check_2d(b, "matmul_nt rhs");
  const int m = a.rows(), k = a.cols(), n = b.rows();
  OCL_CHECK(b.cols() == k, StructureError,
            "matmul_nt: inner dims " << k << " vs " << b.cols());
  Tensor out = Tensor::zeros({m, n});
  for (int i = 0; i < m; ++i) {
    const double* arow = &a.data[static_cast<size_t>(i) * k];
    for (int j = 0; j < n; ++j) {
      const double* brow = &b.data[static_cast<size_t>(j) * k];
      double acc = 0.0;
      for (int kk = 0; kk < k; ++kk) acc += arow[kk] * brow[kk];
      out.at(i, j) = acc;
    }
  }
  ensure_finite(out, "matmul_nt");
  return out;
}

Tensor add(const Tensor& a, const Tensor& b) {
  OCL_CHECK(a.same_shape(b), StructureError, "add: shape mismatch");
  Tensor out = a;
  for (size_t i = 0; i < out.data.size(); ++i) out.data[i] += b.data[i];
  ensure_finite(out, "add");
  return out;
}

Tensor add_rowvec(const Tensor& m, const Tensor& v) {
  check_2d(m, "add_rowvec lhs");
  OCL_CHECK(v.ndim() == 1 && v.shape[0] == m.cols(), StructureError,
            "add_rowvec: bias length " << v.numel() << " vs cols " << m.cols());
  Tensor out = m;
  const int r = m.rows(), c = m.cols();
  for (int i = 0; i < r; ++i)
    for (int j = 0; j < c; ++j) out.at(i, j) += v.data[j];
  ensure_finite(out, "add_rowvec");
  return out;
}

Tensor scale(const Tensor& a, double c) {
  Tensor out = a;
  for (double& x : out.data) x *= c;
  ensure_finite(out, "scale");
  return out;
}

Tensor tanh_map(const Tensor& a) {
  Tensor out = a;
  for (double& x : out.data) x = std::tanh(x);
  ensure_finite(out, "tanh");
  return out;
}

Tensor time_shift(const Tensor& a, int offset) {
  check_2d(a, "time_shift");
  const int r = a.rows(), c = a.cols();
  Tensor out = Tensor::zeros({r, c});
  for (int t = 0; t < r; ++t) {
    const int src = t - offset;
    if (src < 0 || src >= r) continue;
    std::memcpy(&out.data[static_cast<size_t>(t) * c],
                &a.data[static_cast<size_t>(src) * c], sizeof(double) * c);
  }
  return out;
}

Tensor softmax_rows(const Tensor& a) {
  check_2d(a, "softmax_rows");
  const int r = a.rows(), c = a.cols();
  Tensor out = a;
  for (int i = 0; i < r; ++i) {
    double* row = &out.data[static_cast<size_t>(i) * c];
    double m = row[0];
    for (int j = 1; j < c; ++j) m = std::max(m, row[j]);
    double z = 0.0;
    for (int j = 0; j < c; ++j) {
      row[j] = std::exp(row[j] - m);
      z += row[j];
    }
    for (int j = 0; j < c; ++j) row[j] /= z;
  }
  ensure_finite(out, "softmax_rows");
  return out;
}

Tensor log_softmax_rows(const Tensor& a) {
  check_2d(a, "log_softmax_rows");
  const int r = a.rows(), c = a.cols();
  Tensor out = a;
  for (int i = 0; i < r; ++i) {
    double* row = &out.data[static_cast<size_t>(i) * c];
    double m = row[0];
    for (int j = 1; j < c; ++j) m = std::max(m, row[j]);
    double z = 0.0;
    for (int j = 0; j < c; ++j) z += std::exp(row[j] - m);
    const double lse = m + std::log(z);
    for (int j = 0; j < c; ++j) row[j] -= lse;
  }
  ensure_finite(out, "log_softmax_rows");
  return out;
}

Tensor layer_norm_rows(const Tensor& x, const Tensor& gain, const Tensor& bias,
                       Tensor* xhat_out, Tensor* inv_sigma_out) {
  check_2d(x, "layer_norm_rows");
  const int r = x.rows(), c = x.cols();
  OCL_CHECK(gain.ndim() == 1 && gain.shape[0] == c, StructureError, "layer_norm: gain size");
  OCL_CHECK(bias.ndim() == 1 && bias.shape[0] == c, StructureError, "layer_norm: bias size");
  Tensor out = Tensor::zeros({r, c});
  Tensor xhat = Tensor::zeros({r, c});
  Tensor inv = Tensor::zeros({r});
  for (int i = 0; i < r; ++i) {
    const double* row = &x.data[static_cast<size_t>(i) * c];
    double mean = 0.0;
    for (int j = 0; j < c; ++j) mean += row[j];
    mean /= c;
    double var = 0.0;
    for (int j = 0; j < c; ++j) {
      const double d = row[j] - mean;
      var += d * d;
    }
    var /= c;
    const double is = 1.0 / std::sqrt(var + kLayerNormEps);
    inv.data[i] = is;
    for (int j = 0; j < c; ++j) {
      const double xh = (row[j] - mean) * is;
      xhat.at(i, j) = xh;
      out.at(i, j) = xh * gain.data[j] + bias.data[j];
    }
  }
  ensure_finite(out, "layer_norm_rows");
  if (xhat_out) *xhat_out = std::move(xhat);
  if (inv_sigma_out) *inv_sigma_out = std::move(inv);
  return out;
}

}  // namespace ocl
