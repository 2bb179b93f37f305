#include "ocl/paramset.hpp"

#include <cmath>

namespace ocl {

void ParamSet::add(std::string name, Tensor value, Group group, bool norm_flag) {
  OCL_CHECK(index_.find(name) == index_.end(), StructureError,
            "duplicate parameter name: " << name);
  index_[name] = static_cast<int>(entries_.size());
  entries_.push_back(ParamEntry{std::move(name), std::move(value), group, norm_flag});
}

int ParamSet::index_of(const std::string& name) const {
  auto it = index_.find(name);
  return it == index_.end() ? -1 : it->second;
}

const ParamEntry& ParamSet::at(const std::string& name) const {
  const int i = index_of(name);
  OCL_CHECK(i >= 0, StructureError, "no parameter named " << name);
  return entries_[i];
}

bool ParamSet::compatible_with(const ParamSet& other) const {
  if (entries_.size() != other.entries_.size()) return false;
  for (size_t i = 0; i < entries_.size(); ++i) {
    const ParamEntry& a = entries_[i];
    const ParamEntry& b = other.entries_[i];
    if (a.name != b.name || a.group != b.group || a.norm_flag != b.norm_flag ||
        !a.value.same_shape(b.value)) {
      return false;
    }
  }
  return true;
}

ParamSet ParamSet::zeros_like() const {
  ParamSet out;
  for (const ParamEntry& e : entries_) {
    out.add(e.name, Tensor::zeros(e.value.shape), e.group, e.norm_flag);
  }
  return out;
}

bool ParamSet::same_bits(const ParamSet& other) const {
  if (!compatible_with(other)) return false;
  for (int i = 0; i < size(); ++i) {
    if (!entries_[i].value.same_bits(other.entries_[i].value)) return false;
  }
  return true;
}

long long ParamSet::scalar_count() const {
  long long n = 0;
  for (const ParamEntry& e : entries_) n += e.value.numel();
  return n;
}

std::vector<bool> ParamSet::mask_where(
    const std::function<bool(const ParamEntry&)>& pred) const {
  std::vector<bool> m(entries_.size());
  for (size_t i = 0; i < entries_.size(); ++i) m[i] = pred(entries_[i]);
  return m;
}

static void check_compat(const ParamSet& p, const ParamSet& q, const char* op) {
  OCL_CHECK(p.compatible_with(q), StructureError, op << ": incompatible parameter sets");
}

ParamSet axpy_combine(double a, const ParamSet& p, double b, const ParamSet& q) {
  check_compat(p, q, "axpy_combine");
  if (a == 1.0 && b == 0.0) return p;
  if (a == 0.0 && b == 1.0) return q;
  ParamSet out = p;
  const bool convex = (a + b == 1.0);
  for (int i = 0; i < out.size(); ++i) {
    const std::vector<double>& pv = p[i].value.data;
    const std::vector<double>& qv = q[i].value.data;
    std::vector<double>& ov = out[i].value.data;
    if (convex) {
      for (size_t k = 0; k < ov.size(); ++k) ov[k] = std::lerp(pv[k], qv[k], b);
    } else {
      for (size_t k = 0; k < ov.size(); ++k) ov[k] = a * pv[k] + b * qv[k];
    }
    ensure_finite(out[i].value, out[i].name.c_str());
  }
  return out;
}

ParamSet sgd_step(const ParamSet& p, const Grad& g, double alpha,
                  const std::vector<bool>* mask) {
  check_compat(p, g, "sgd_step");
  OCL_CHECK(alpha > 0.0, ConfigError, "sgd_step: alpha must be > 0, got " << alpha);
  OCL_CHECK(!mask || static_cast<int>(mask->size()) == p.size(), StructureError,
            "sgd_step: mask length mismatch");
  ParamSet out = p;
  for (int i = 0; i < out.size(); ++i) {
    if (mask && !(*mask)[i]) continue;  // bit-exact no-op on masked-out entries
    const std::vector<double>& gv = g[i].value.data;
    std::vector<double>& ov = out[i].value.data;
    for (size_t k = 0; k < ov.size(); ++k) {
      OCL_CHECK(std::isfinite(gv[k]), NumericError,
                "non-finite gradient in entry " << out[i].name);
      ov[k] -= alpha * gv[k];
    }
    ensure_finite(out[i].value, out[i].name.c_str());
  }
  return out;
}

double dot(const Grad& g1, const Grad& g2) {
  check_compat(g1, g2, "dot");
  double acc = 0.0;
  for (int i = 0; i < g1.size(); ++i) {
    const std::vector<double>& a = g1[i].value.data;
    const std::vector<double>& b = g2[i].value.data;
    for (size_t k = 0; k < a.size(); ++k) acc += a[k] * b[k];
  }
  return acc;
}

Grad finite_diff_grad(const std::function<double(const ParamSet&)>& loss_fn,
                      const ParamSet& p, double eps) {
  OCL_CHECK(eps > 0.0, ConfigError, "finite_diff_grad: eps must be > 0");
  Grad g = p.zeros_like();
  ParamSet work = p;
  for (int i = 0; i < work.size(); ++i) {
    std::vector<double>& wv = work[i].value.data;
    std::vector<double>& gv = g[i].value.data;
    for (size_t k = 0; k < wv.size(); ++k) {
      const double orig = wv[k];
      wv[k] = orig + eps;
      const double up = loss_fn(work);
      wv[k] = orig - eps;
      const double down = loss_fn(work);
      wv[k] = orig;
      gv[k] = (up - down) / (2.0 * eps);
    }
  }
  return g;
}

}  // namespace ocl
