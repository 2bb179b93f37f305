#include "ocl/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>

namespace ocl {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

inline double log_add(double a, double b) {
  if (a == kNegInf) return b;
  if (b == kNegInf) return a;
  return std::max(a, b) + std::log1p(std::exp(-std::abs(a - b)));
}

}  // namespace

int Tape::push(Tensor value, std::function<void(Tape&, int)> back) {
  nodes_.push_back(Node{std::move(value), Tensor{}, std::move(back)});
  return static_cast<int>(nodes_.size()) - 1;
}

int Tape::leaf(Tensor value) { return push(std::move(value), nullptr); }

std::vector<int> Tape::leaves(const ParamSet& params) {
  std::vector<int> ids;
  ids.reserve(params.size());
  for (const ParamEntry& e : params) ids.push_back(leaf(e.value));
  return ids;
}

void Tape::backward(int loss_id) {
  OCL_CHECK(nodes_[loss_id].value.numel() == 1, StructureError,
            "backward: loss node must be scalar");
  for (Node& n : nodes_) n.grad = Tensor::zeros(n.value.shape);
  nodes_[loss_id].grad.data[0] = 1.0;
  for (int id = loss_id; id >= 0; --id) {
    if (nodes_[id].back) nodes_[id].back(*this, id);
  }
}

Grad Tape::harvest(const ParamSet& tpl, const std::vector<int>& ids) const {
  OCL_CHECK(static_cast<int>(ids.size()) == tpl.size(), StructureError,
            "harvest: id count mismatch");
  Grad g = tpl.zeros_like();
  for (int i = 0; i < g.size(); ++i) g[i].value = nodes_[ids[i]].grad;
  return g;
}

// ---- elementwise / linear algebra -----------------------------------------

int Tape::matmul(int a, int b) {
  Tensor out = ocl::matmul(val(a), val(b));
  return push(std::move(out), [a, b](Tape& t, int self) {
    const Tensor& g = t.grad(self);
    // dA = g B^T ; dB = A^T g
    Tensor da = ocl::matmul_nt(g, t.val(b));
    Tensor& ga = t.grad_mut(a);
    for (size_t i = 0; i < ga.data.size(); ++i) ga.data[i] += da.data[i];
    const Tensor& av = t.val(a);
    Tensor& gb = t.grad_mut(b);
    const int m = av.rows(), k = av.cols(), n = g.cols();
    for (int kk = 0; kk < k; ++kk)
      for (int i = 0; i < m; ++i) {
        const double aik = av.at(i, kk);
        if (aik == 0.0) continue;
        for (int j = 0; j < n; ++j) gb.at(kk, j) += aik * g.at(i, j);
      }
  });
}

int Tape::matmul_nt(int a, int b) {
  Tensor out = ocl::matmul_nt(val(a), val(b));
  return push(std::move(out), [a, b](Tape& t, int self) {
    const Tensor& g = t.grad(self);  // (m, n); out = A B^T with B (n, k)
    // dA = g B ; dB = g^T A
    Tensor da = ocl::matmul(g, t.val(b));
    Tensor& ga = t.grad_mut(a);
    for (size_t i = 0; i < ga.data.size(); ++i) ga.data[i] += da.data[i];
    const Tensor& av = t.val(a);
    Tensor& gb = t.grad_mut(b);
    const int m = g.rows(), n = g.cols(), k = av.cols();
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < n; ++j) {
        const double gij = g.at(i, j);
        if (gij == 0.0) continue;
        for (int kk = 0; kk < k; ++kk) gb.at(j, kk) += gij * av.at(i, kk);
      }
  });
}

int Tape::add(int a, int b) {
  Tensor out = ocl::add(val(a), val(b));
  return push(std::move(out), [a, b](Tape& t, int self) {
    const Tensor& g = t.grad(self);
    Tensor& ga = t.grad_mut(a);
    Tensor& gb = t.grad_mut(b);
    for (size_t i = 0; i < g.data.size(); ++i) {
      ga.data[i] += g.data[i];
      gb.data[i] += g.data[i];
    }
  });
}

int Tape::add_rowvec(int m, int v) {
  Tensor out = ocl::add_rowvec(val(m), val(v));
  return push(std::move(out), [m, v](Tape& t, int self) {
    const Tensor& g = t.grad(self);
    Tensor& gm = t.grad_mut(m);
    Tensor& gv = t.grad_mut(v);
    const int r = g.rows(), c = g.cols();
    for (int i = 0; i < r; ++i)
      for (int j = 0; j < c; ++j) {
        gm.at(i, j) += g.at(i, j);
        gv.data[j] += g.at(i, j);
      }
  });
}

int Tape::scale(int a, double c) {
  Tensor out = ocl::scale(val(a), c);
  return push(std::move(out), [a, c](Tape& t, int self) {
    const Tensor& g = t.grad(self);
    Tensor& ga = t.grad_mut(a);
    for (size_t i = 0; i < g.data.size(); ++i) ga.data[i] += c * g.data[i];
  });
}

int Tape::tanh_op(int a) {
  Tensor out = tanh_map(val(a));
  return push(std::move(out), [a](Tape& t, int self) {
    const Tensor& g = t.grad(self);
    const Tensor& y = t.val(self);
    Tensor& ga = t.grad_mut(a);
    for (size_t i = 0; i < g.data.size(); ++i)
      ga.data[i] += g.data[i] * (1.0 - y.data[i] * y.data[i]);
  });
}

int Tape::time_shift(int a, int offset) {
  Tensor out = ocl::time_shift(val(a), offset);
  return push(std::move(out), [a, offset](Tape& t, int self) {
    const Tensor& g = t.grad(self);
    Tensor& ga = t.grad_mut(a);
    const int r = g.rows(), c = g.cols();
    for (int tt = 0; tt < r; ++tt) {
      const int src = tt - offset;
      if (src < 0 || src >= r) continue;
      for (int j = 0; j < c; ++j) ga.at(src, j) += g.at(tt, j);
    }
  });
}

int Tape::softmax_rows(int a) {
  Tensor out = ocl::softmax_rows(val(a));
  return push(std::move(out), [a](Tape& t, int self) {
    const Tensor& g = t.grad(self);
    const Tensor& s = t.val(self);
    Tensor& ga = t.grad_mut(a);
    const int r = g.rows(), c = g.cols();
    for (int i = 0; i < r; ++i) {
      double dotgs = 0.0;
      for (int j = 0; j < c; ++j) dotgs += g.at(i, j) * s.at(i, j);
      for (int j = 0; j < c; ++j) ga.at(i, j) += s.at(i, j) * (g.at(i, j) - dotgs);
    }
  });
}

int Tape::log_softmax_rows(int a) {
  Tensor out = ocl::log_softmax_rows(val(a));
  return push(std::move(out), [a](Tape& t, int self) {
    const Tensor& g = t.grad(self);
    const Tensor& y = t.val(self);  // log-probs
    Tensor& ga = t.grad_mut(a);
    const int r = g.rows(), c = g.cols();
    for (int i = 0; i < r; ++i) {
      double gsum = 0.0;
      for (int j = 0; j < c; ++j) gsum += g.at(i, j);
      for (int j = 0; j < c; ++j)
        ga.at(i, j) += g.at(i, j) - std::exp(y.at(i, j)) * gsum;
    }
  });
}

int Tape::layer_norm(int x, int gain, int bias) {
  auto xhat = std::make_shared<Tensor>();
  auto inv = std::make_shared<Tensor>();
  Tensor out = layer_norm_rows(val(x), val(gain), val(bias), xhat.get(), inv.get());
  return push(std::move(out), [x, gain, bias, xhat, inv](Tape& t, int self) {
    const Tensor& g = t.grad(self);
    const Tensor& gv = t.val(gain);
    Tensor& gx = t.grad_mut(x);
    Tensor& gg = t.grad_mut(gain);
    Tensor& gb = t.grad_mut(bias);
    const int r = g.rows(), c = g.cols();
    for (int i = 0; i < r; ++i) {
      // u = dy * gain; dx = (u - mean(u) - xhat * mean(u * xhat)) / sigma
      double mean_u = 0.0, mean_ux = 0.0;
      for (int j = 0; j < c; ++j) {
        const double u = g.at(i, j) * gv.data[j];
        mean_u += u;
        mean_ux += u * xhat->at(i, j);
      }
      mean_u /= c;
      mean_ux /= c;
      const double is = inv->data[i];
      for (int j = 0; j < c; ++j) {
        const double u = g.at(i, j) * gv.data[j];
        gx.at(i, j) += is * (u - mean_u - xhat->at(i, j) * mean_ux);
        gg.data[j] += g.at(i, j) * xhat->at(i, j);
        gb.data[j] += g.at(i, j);
      }
    }
  });
}

// ---- embedding and loss heads ----------------------------------------------

int Tape::rows_embed(int table, int bos, int pos, const std::vector<int>& prev_ids) {
  const Tensor& tab = val(table);
  const Tensor& bosv = val(bos);
  const Tensor& posv = val(pos);
  const int d = tab.cols();
  const int n = static_cast<int>(prev_ids.size());
  OCL_CHECK(bosv.ndim() == 2 && bosv.rows() == 1 && bosv.cols() == d, StructureError,
            "rows_embed: bos shape");
  OCL_CHECK(posv.cols() == d && posv.rows() >= n, StructureError,
            "rows_embed: pos table too short (" << posv.rows() << " rows, need " << n << ")");
  Tensor out = Tensor::zeros({n, d});
  for (int t = 0; t < n; ++t) {
    const int id = prev_ids[t];
    OCL_CHECK(id < tab.rows(), StructureError, "rows_embed: token id " << id << " out of range");
    const double* src = id < 0 ? &bosv.data[0] : &tab.data[static_cast<size_t>(id) * d];
    for (int j = 0; j < d; ++j) out.at(t, j) = src[j] + posv.at(t, j);
  }
  auto ids = std::make_shared<std::vector<int>>(prev_ids);
  return push(std::move(out), [table, bos, pos, ids](Tape& t, int self) {
    const Tensor& g = t.grad(self);
    Tensor& gt = t.grad_mut(table);
    Tensor& gb = t.grad_mut(bos);
    Tensor& gp = t.grad_mut(pos);
    const int n = g.rows(), d = g.cols();
    for (int tt = 0; tt < n; ++tt) {
      const int id = (*ids)[tt];
      double* dst = id < 0 ? &gb.data[0] : &gt.data[static_cast<size_t>(id) * d];
      for (int j = 0; j < d; ++j) {
        dst[j] += g.at(tt, j);
        gp.at(tt, j) += g.at(tt, j);
      }
    }
  });
}

int Tape::nll_pick_mean(int log_probs, const std::vector<int>& ids) {
  const Tensor& lp = val(log_probs);
  const int n = static_cast<int>(ids.size());
  OCL_CHECK(n >= 1 && lp.rows() == n, StructureError,
            "nll_pick_mean: need one id per row, got " << n << " ids for " << lp.rows()
                                                       << " rows");
  double acc = 0.0;
  for (int t = 0; t < n; ++t) {
    OCL_CHECK(ids[t] >= 0 && ids[t] < lp.cols(), StructureError,
              "nll_pick_mean: id out of range");
    acc -= lp.at(t, ids[t]);
  }
  Tensor out = Tensor::scalar(acc / n);
  ensure_finite(out, "nll_pick_mean");
  auto picked = std::make_shared<std::vector<int>>(ids);
  return push(std::move(out), [log_probs, picked](Tape& t, int self) {
    const double g = t.grad(self).data[0];
    Tensor& glp = t.grad_mut(log_probs);
    const int n = static_cast<int>(picked->size());
    for (int tt = 0; tt < n; ++tt) glp.at(tt, (*picked)[tt]) -= g / n;
  });
}

int Tape::weighted_sum(int a, Tensor weights, double c) {
  const Tensor& av = val(a);
  OCL_CHECK(av.same_shape(weights), StructureError, "weighted_sum: shape mismatch");
  double acc = 0.0;
  for (size_t i = 0; i < av.data.size(); ++i) acc += weights.data[i] * av.data[i];
  Tensor out = Tensor::scalar(c * acc);
  ensure_finite(out, "weighted_sum");
  auto w = std::make_shared<Tensor>(std::move(weights));
  return push(std::move(out), [a, w, c](Tape& t, int self) {
    const double g = t.grad(self).data[0];
    Tensor& ga = t.grad_mut(a);
    for (size_t i = 0; i < ga.data.size(); ++i) ga.data[i] += c * g * w->data[i];
  });
}

// ---- CTC -------------------------------------------------------------------

int ctc_min_frames(const std::vector<int>& targets) {
  int repeats = 0;
  for (size_t i = 1; i < targets.size(); ++i)
    if (targets[i] == targets[i - 1]) ++repeats;
  return static_cast<int>(targets.size()) + repeats;
}

namespace {

struct CtcWork {
  int T = 0, S = 0;
  std::vector<int> aug;       // blank-augmented labels, length S = 2*L+1
  std::vector<double> alpha;  // T x S, log space
  std::vector<double> beta;   // T x S, log space; beta excludes the frame-t emission
  double log_p = kNegInf;
};

CtcWork ctc_forward_backward(const Tensor& lp, const std::vector<int>& targets,
                             bool need_beta) {
  OCL_CHECK(lp.ndim() == 2, StructureError, "ctc: log_probs must be 2-d");
  OCL_CHECK(!targets.empty(), ConfigError, "ctc: empty target sequence");
  const int T = lp.rows();
  const int n_sym = lp.cols();
  const int blank = n_sym - 1;
  for (int y : targets)
    OCL_CHECK(y >= 0 && y < blank, StructureError, "ctc: target id " << y << " out of range");
  OCL_CHECK(T >= ctc_min_frames(targets), NumericError,
            "ctc: target of length " << targets.size() << " needs at least "
                                     << ctc_min_frames(targets) << " frames, got " << T);

  CtcWork w;
  w.T = T;
  const int L = static_cast<int>(targets.size());
  w.S = 2 * L + 1;
  w.aug.resize(w.S, blank);
  for (int i = 0; i < L; ++i) w.aug[2 * i + 1] = targets[i];

  auto allows_skip = [&](int s) {
    return s >= 2 && w.aug[s] != blank && w.aug[s] != w.aug[s - 2];
  };

  w.alpha.assign(static_cast<size_t>(T) * w.S, kNegInf);
  auto A = [&](int t, int s) -> double& { return w.alpha[static_cast<size_t>(t) * w.S + s]; };
  A(0, 0) = lp.at(0, w.aug[0]);
  if (w.S > 1) A(0, 1) = lp.at(0, w.aug[1]);
  for (int t = 1; t < T; ++t) {
    for (int s = 0; s < w.S; ++s) {
      double acc = A(t - 1, s);
      if (s >= 1) acc = log_add(acc, A(t - 1, s - 1));
      if (allows_skip(s)) acc = log_add(acc, A(t - 1, s - 2));
      if (acc != kNegInf) A(t, s) = acc + lp.at(t, w.aug[s]);
    }
  }
  w.log_p = A(T - 1, w.S - 1);
  if (w.S > 1) w.log_p = log_add(w.log_p, A(T - 1, w.S - 2));
  OCL_CHECK(w.log_p != kNegInf, NumericError, "ctc: no feasible alignment");

  if (need_beta) {
    w.beta.assign(static_cast<size_t>(T) * w.S, kNegInf);
    auto B = [&](int t, int s) -> double& { return w.beta[static_cast<size_t>(t) * w.S + s]; };
    B(T - 1, w.S - 1) = 0.0;
    if (w.S > 1) B(T - 1, w.S - 2) = 0.0;
    for (int t = T - 2; t >= 0; --t) {
      for (int s = 0; s < w.S; ++s) {
        double acc = kNegInf;
        for (int s2 = s; s2 <= s + 2 && s2 < w.S; ++s2) {
          if (s2 == s + 2 && !allows_skip(s2)) continue;
          const double b = B(t + 1, s2);
          if (b != kNegInf) acc = log_add(acc, b + lp.at(t + 1, w.aug[s2]));
        }
        B(t, s) = acc;
      }
    }
  }
  return w;
}

}  // namespace

double ctc_loss_value(const Tensor& log_probs, const std::vector<int>& targets) {
  return -ctc_forward_backward(log_probs, targets, false).log_p;
}

int Tape::ctc_nll(int log_probs, const std::vector<int>& targets) {
  auto w = std::make_shared<CtcWork>(ctc_forward_backward(val(log_probs), targets, true));
  Tensor out = Tensor::scalar(-w->log_p);
  ensure_finite(out, "ctc_nll");
  return push(std::move(out), [log_probs, w](Tape& t, int self) {
    const double gout = t.grad(self).data[0];
    Tensor& glp = t.grad_mut(log_probs);
    const int n_sym = glp.cols();
    std::vector<double> per_label(n_sym);
    for (int tt = 0; tt < w->T; ++tt) {
      std::fill(per_label.begin(), per_label.end(), kNegInf);
      for (int s = 0; s < w->S; ++s) {
        const double a = w->alpha[static_cast<size_t>(tt) * w->S + s];
        const double b = w->beta[static_cast<size_t>(tt) * w->S + s];
        if (a == kNegInf || b == kNegInf) continue;
        per_label[w->aug[s]] = log_add(per_label[w->aug[s]], a + b);
      }
      for (int c = 0; c < n_sym; ++c) {
        if (per_label[c] == kNegInf) continue;
        // d(-log P)/d(log_probs[t,c]) = -exp(lse_s(alpha+beta) - log P)
        glp.at(tt, c) -= gout * std::exp(per_label[c] - w->log_p);
      }
    }
  });
}

}  // namespace ocl
