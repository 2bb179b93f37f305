#pragma once

#include <functional>
#include <map>
#include <string>
#include <vector>

#include "ocl/tensor.hpp"

namespace ocl {

enum class Group { encoder, decoder };

struct ParamEntry {
  std::string name;
  Tensor value;
  Group group = Group::encoder;
  bool norm_flag = false;  // layer-normalization parameter
};

// Ordered collection of named parameter tensors. Two sets built from the same
// model template are structurally compatible: identical names, shapes, groups
// and norm flags, in the same order.
class ParamSet {
 public:
  void add(std::string name, Tensor value, Group group, bool norm_flag = false);

  int size() const { return static_cast<int>(entries_.size()); }
  bool empty() const { return entries_.empty(); }
  ParamEntry& operator[](int i) { return entries_[i]; }
  const ParamEntry& operator[](int i) const { return entries_[i]; }

  int index_of(const std::string& name) const;  // -1 when absent
  const ParamEntry& at(const std::string& name) const;

  bool compatible_with(const ParamSet& other) const;
  ParamSet zeros_like() const;
  bool same_bits(const ParamSet& other) const;
  long long scalar_count() const;

  // per-entry mask from a predicate, for sgd_step
  std::vector<bool> mask_where(const std::function<bool(const ParamEntry&)>& pred) const;

  std::vector<ParamEntry>::iterator begin() { return entries_.begin(); }
  std::vector<ParamEntry>::iterator end() { return entries_.end(); }
  std::vector<ParamEntry>::const_iterator begin() const { return entries_.begin(); }
  std::vector<ParamEntry>::const_iterator end() const { return entries_.end(); }

 private:
  std::vector<ParamEntry> entries_;
  std::map<std::string, int> index_;
};

// Gradients share the ParamSet structure (one value per parameter scalar).
using Grad = ParamSet;

// result[k] = a * p[k] + b * q[k]. For a convex combination (a + b == 1) the
// result is computed with std::lerp, which guarantees the entrywise bound
// min(p,q) <= result <= max(p,q); the identity cases (a,b) = (1,0) / (0,1)
// return the operand bit-exactly.
ParamSet axpy_combine(double a, const ParamSet& p, double b, const ParamSet& q);

// result[k] = p[k] - alpha * g[k] where mask[k] (or no mask); masked-out
// entries are copied bit-exactly. Throws NumericError naming the first entry
// with a non-finite gradient.
ParamSet sgd_step(const ParamSet& p, const Grad& g, double alpha,
                  const std::vector<bool>* mask = nullptr);

double dot(const Grad& g1, const Grad& g2);

// Central-difference gradient oracle: (L(p + eps e_k) - L(p - eps e_k)) / (2 eps)
// per scalar coordinate.
Grad finite_diff_grad(const std::function<double(const ParamSet&)>& loss_fn,
                      const ParamSet& p, double eps);

}  // namespace ocl
