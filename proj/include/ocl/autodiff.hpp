#pragma once

#include <functional>
#include <vector>

#include "ocl/paramset.hpp"
#include "ocl/tensor.hpp"

namespace ocl {

// Wengert-list reverse-mode tape over a fixed op set. Nodes are appended in
// construction order, so parents always precede children and backward is a
// single reverse sweep. Scalars are tensors of shape {1}.
class Tape {
 public:
  int leaf(Tensor value);
  std::vector<int> leaves(const ParamSet& params);

  const Tensor& val(int id) const { return nodes_[id].value; }
  const Tensor& grad(int id) const { return nodes_[id].grad; }
  double scalar_val(int id) const { return nodes_[id].value.data[0]; }

  // Seeds d(loss)/d(loss) = 1 and sweeps the list in reverse. loss must be a
  // scalar node.
  void backward(int loss_id);

  // Reads leaf gradients back into the structure of `tpl` (ids from leaves()).
  Grad harvest(const ParamSet& tpl, const std::vector<int>& ids) const;

  // ---- ops ----
  int matmul(int a, int b);
  int matmul_nt(int a, int b);
  int add(int a, int b);
  int add_rowvec(int m, int v);
  int scale(int a, double c);
  int tanh_op(int a);
  int time_shift(int a, int offset);
  int softmax_rows(int a);
  int log_softmax_rows(int a);
  int layer_norm(int x, int gain, int bias);

  // Teacher-forced decoder input matrix: row 0 = bos + pos[0], row t>0 =
  // table[prev_ids[t]] + pos[t]. prev_ids entries must be < table rows;
  // a negative id selects the bos row.
  int rows_embed(int table, int bos, int pos, const std::vector<int>& prev_ids);

  // scalar: -(1/T) * sum_t log_probs[t, ids[t]]
  int nll_pick_mean(int log_probs, const std::vector<int>& ids);

  // scalar: c * sum_ij weights[i,j] * a[i,j] (weights are constants)
  int weighted_sum(int a, Tensor weights, double c);

  // CTC negative log-likelihood of `targets` under row-wise log-probabilities
  // (frames x (labels+1), blank = last column), via the log-space forward
  // algorithm over the blank-augmented label sequence. Throws ConfigError on
  // an empty target and NumericError when the target cannot be aligned within
  // the available frames.
  int ctc_nll(int log_probs, const std::vector<int>& targets);

  size_t node_count() const { return nodes_.size(); }

 private:
  struct Node {
    Tensor value;
    Tensor grad;
    std::function<void(Tape&, int)> back;  // nullptr for leaves
  };

  int push(Tensor value, std::function<void(Tape&, int)> back);
  Tensor& grad_mut(int id) { return nodes_[id].grad; }

  std::vector<Node> nodes_;
};

// Minimum frames required to align `targets` under CTC (length plus one blank
// between each adjacent repeated pair).
int ctc_min_frames(const std::vector<int>& targets);

// Standalone CTC loss value on a log-probability matrix (no tape).
double ctc_loss_value(const Tensor& log_probs, const std::vector<int>& targets);

}  // namespace ocl
