#include "ocl/model.hpp"

#include <cmath>
#include <string>

#include "ocl/rng.hpp"

namespace ocl {

void ModelConfig::validate() const {
  OCL_CHECK(d_i >= 1 && d_h >= 1 && n_enc >= 1 && n_dec >= 1, ConfigError,
            "model config: all dimensions must be >= 1");
  OCL_CHECK(vocab >= 2, ConfigError, "model config: vocab must be >= 2");
  OCL_CHECK(ctc_weight >= 0.0 && ctc_weight <= 1.0, ConfigError,
            "model config: ctc weight must lie in [0, 1]");
  OCL_CHECK(max_len >= 1, ConfigError, "model config: max_len must be >= 1");
}

// ---- initialization --------------------------------------------------------

ParamSet init_params(const ModelConfig& cfg, uint64_t seed) {
  cfg.validate();
  Xoshiro256 rng(sub_seed(seed, {fnv1a64("init")}));

  auto uniform_tensor = [&](std::vector<int> shape, int fan_in) {
    Tensor t = Tensor::zeros(std::move(shape));
    const double s = 1.0 / std::sqrt(static_cast<double>(fan_in));
    for (double& v : t.data) v = rng.uniform(-s, s);
    return t;
  };
  auto const_tensor = [](std::vector<int> shape, double v) {
    Tensor t = Tensor::zeros(std::move(shape));
    for (double& x : t.data) x = v;
    return t;
  };

  ParamSet p;
  for (int l = 0; l < cfg.n_enc; ++l) {
    const int d_in = l == 0 ? cfg.d_i : cfg.d_h;
    const std::string base = "enc" + std::to_string(l);
    p.add(base + ".t_prev.w", uniform_tensor({d_in, cfg.d_h}, d_in), Group::encoder);
    p.add(base + ".t_self.w", uniform_tensor({d_in, cfg.d_h}, d_in), Group::encoder);
    p.add(base + ".t_next.w", uniform_tensor({d_in, cfg.d_h}, d_in), Group::encoder);
    p.add(base + ".b", Tensor::zeros({cfg.d_h}), Group::encoder);
    p.add(base + ".ln.g", const_tensor({cfg.d_h}, 1.0), Group::encoder, true);
    p.add(base + ".ln.b", Tensor::zeros({cfg.d_h}), Group::encoder, true);
  }
  p.add("ctc.w", uniform_tensor({cfg.d_h, cfg.vocab + 1}, cfg.d_h), Group::encoder);
  p.add("ctc.b", Tensor::zeros({cfg.vocab + 1}), Group::encoder);
  p.add("attn.k.w", uniform_tensor({cfg.d_h, cfg.d_h}, cfg.d_h), Group::encoder);
  p.add("attn.v.w", uniform_tensor({cfg.d_h, cfg.d_h}, cfg.d_h), Group::encoder);

  p.add("embed.tok", uniform_tensor({cfg.vocab, cfg.d_h}, cfg.d_h), Group::decoder);
  p.add("embed.bos", uniform_tensor({1, cfg.d_h}, cfg.d_h), Group::decoder);
  p.add("embed.pos", uniform_tensor({cfg.max_len, cfg.d_h}, cfg.d_h), Group::decoder);
  p.add("attn.q.w", uniform_tensor({cfg.d_h, cfg.d_h}, cfg.d_h), Group::decoder);
  for (int l = 0; l < cfg.n_dec; ++l) {
    const std::string base = "dec" + std::to_string(l);
    p.add(base + ".ff.w", uniform_tensor({cfg.d_h, cfg.d_h}, cfg.d_h), Group::decoder);
    p.add(base + ".ff.b", Tensor::zeros({cfg.d_h}), Group::decoder);
    p.add(base + ".ln.g", const_tensor({cfg.d_h}, 1.0), Group::decoder, true);
    p.add(base + ".ln.b", Tensor::zeros({cfg.d_h}), Group::decoder, true);
  }
  p.add("out.w", uniform_tensor({cfg.d_h, cfg.vocab}, cfg.d_h), Group::decoder);
  p.add("out.b", Tensor::zeros({cfg.vocab}), Group::decoder);
  return p;
}

// ---- shared shape checks ----------------------------------------------------

namespace {

constexpr double kPosAmp = 0.5;
constexpr double kPosBase = 40.0;

// Fixed sinusoidal position signal added to the input frames so attention
// keys carry where a frame sits, not just what it contains.
Tensor with_positions(const Tensor& frames) {
  Tensor x = frames;
  const int L = x.rows(), d = x.cols();
  for (int t = 0; t < L; ++t) {
    for (int j = 0; j < d; j += 2) {
      const double freq = std::pow(kPosBase, -static_cast<double>(j) / d);
      x.at(t, j) += kPosAmp * std::sin(t * freq);
      if (j + 1 < d) x.at(t, j + 1) += kPosAmp * std::cos(t * freq);
    }
  }
  return x;
}

void check_utterance(const ModelConfig& cfg, const Tensor& frames,
                     const std::vector<int>& targets) {
  OCL_CHECK(frames.ndim() == 2 && frames.cols() == cfg.d_i, StructureError,
            "frames must be L_F x " << cfg.d_i);
  OCL_CHECK(!targets.empty(), ConfigError, "empty target sequence");
  OCL_CHECK(static_cast<int>(targets.size()) <= cfg.max_len, StructureError,
            "target length " << targets.size() << " exceeds max_len " << cfg.max_len);
  for (int y : targets)
    OCL_CHECK(y >= 0 && y < cfg.vocab, StructureError, "target id " << y << " out of range");
}

std::vector<int> shifted_prev_ids(const std::vector<int>& targets) {
  std::vector<int> prev(targets.size());
  prev[0] = -1;  // begin-of-sequence row
  for (size_t t = 1; t < targets.size(); ++t) prev[t] = targets[t - 1];
  return prev;
}

// ---- taped forward ----------------------------------------------------------

struct TapeParams {
  const ParamSet* params;
  std::vector<int> ids;
  int operator()(const std::string& name) const {
    const int i = params->index_of(name);
    OCL_CHECK(i >= 0, StructureError, "missing parameter " << name);
    return ids[i];
  }
};

struct TapedOutputs {
  int ctc_log_probs;
  int dec_log_probs;
};

int build_encoder(Tape& t, const TapeParams& P, const ModelConfig& cfg, int x) {
  for (int l = 0; l < cfg.n_enc; ++l) {
    const std::string base = "enc" + std::to_string(l);
    int h = t.add(t.matmul(t.time_shift(x, 1), P(base + ".t_prev.w")),
                  t.matmul(x, P(base + ".t_self.w")));
    h = t.add(h, t.matmul(t.time_shift(x, -1), P(base + ".t_next.w")));
    h = t.add_rowvec(h, P(base + ".b"));
    x = t.layer_norm(t.tanh_op(h), P(base + ".ln.g"), P(base + ".ln.b"));
  }
  return x;
}

TapedOutputs build_forward(Tape& t, const TapeParams& P, const ModelConfig& cfg,
                           const Tensor& frames, const std::vector<int>& targets) {
  check_utterance(cfg, frames, targets);
  const int enc = build_encoder(t, P, cfg, t.leaf(with_positions(frames)));
  const int ctc_lp =
      t.log_softmax_rows(t.add_rowvec(t.matmul(enc, P("ctc.w")), P("ctc.b")));

  const int e = t.rows_embed(P("embed.tok"), P("embed.bos"), P("embed.pos"),
                             shifted_prev_ids(targets));
  const int q = t.matmul(e, P("attn.q.w"));
  const int k = t.matmul(enc, P("attn.k.w"));
  const int v = t.matmul(enc, P("attn.v.w"));
  const int att = t.softmax_rows(t.scale(t.matmul_nt(q, k), 1.0 / std::sqrt(cfg.d_h)));
  int z = t.add(e, t.matmul(att, v));
  for (int l = 0; l < cfg.n_dec; ++l) {
    const std::string base = "dec" + std::to_string(l);
    z = t.layer_norm(t.tanh_op(t.add_rowvec(t.matmul(z, P(base + ".ff.w")), P(base + ".ff.b"))),
                     P(base + ".ln.g"), P(base + ".ln.b"));
  }
  const int dec_lp = t.log_softmax_rows(t.add_rowvec(t.matmul(z, P("out.w")), P("out.b")));
  return {ctc_lp, dec_lp};
}

int build_ce(Tape& t, const TapeParams& P, const ModelConfig& cfg, const Tensor& frames,
             const std::vector<int>& targets, double c) {
  const TapedOutputs o = build_forward(t, P, cfg, frames, targets);
  const int dec_nll = t.nll_pick_mean(o.dec_log_probs, targets);
  const int ctc_norm =
      t.scale(t.ctc_nll(o.ctc_log_probs, targets), 1.0 / static_cast<double>(targets.size()));
  return t.add(t.scale(dec_nll, 1.0 - c), t.scale(ctc_norm, c));
}

int build_kd(Tape& t, const TapeParams& P, const ModelConfig& cfg,
             const ModelOutputs& teacher, const Tensor& frames,
             const std::vector<int>& targets, double c) {
  const TapedOutputs o = build_forward(t, P, cfg, frames, targets);
  Tensor ctc_probs = teacher.ctc_log_probs;
  for (double& x : ctc_probs.data) x = std::exp(x);
  Tensor dec_probs = teacher.dec_log_probs;
  for (double& x : dec_probs.data) x = std::exp(x);
  const int kd_ctc = t.weighted_sum(o.ctc_log_probs, std::move(ctc_probs),
                                    -1.0 / static_cast<double>(frames.rows()));
  const int kd_dec = t.weighted_sum(o.dec_log_probs, std::move(dec_probs),
                                    -1.0 / static_cast<double>(targets.size()));
  return t.add(t.scale(kd_dec, 1.0 - c), t.scale(kd_ctc, c));
}

int build_total(Tape& t, const TapeParams& P, const ParamSet& teacher, const ModelConfig& cfg,
                const Tensor& frames, const std::vector<int>& targets, double c,
                double lambda) {
  OCL_CHECK(lambda >= 0.0 && lambda <= 1.0, ConfigError,
            "total loss: lambda must lie in [0, 1]");
  if (lambda == 0.0) return build_ce(t, P, cfg, frames, targets, c);
  const ModelOutputs teacher_out = forward(teacher, cfg, frames, targets);
  if (lambda == 1.0) return build_kd(t, P, cfg, teacher_out, frames, targets, c);
  const int ce = build_ce(t, P, cfg, frames, targets, c);
  const int kd = build_kd(t, P, cfg, teacher_out, frames, targets, c);
  return t.add(t.scale(ce, 1.0 - lambda), t.scale(kd, lambda));
}

LossGrad run_backward(Tape& t, const ParamSet& params, const std::vector<int>& ids,
                      int loss) {
  t.backward(loss);
  return LossGrad{t.scalar_val(loss), t.harvest(params, ids)};
}

TapeParams make_tape_params(Tape& t, const ParamSet& params) {
  return TapeParams{&params, t.leaves(params)};
}

}  // namespace

// ---- no-grad forward ---------------------------------------------------------

namespace {

Tensor encode_nograd(const ParamSet& p, const ModelConfig& cfg, const Tensor& frames) {
  Tensor x = with_positions(frames);
  for (int l = 0; l < cfg.n_enc; ++l) {
    const std::string base = "enc" + std::to_string(l);
    Tensor h = add(matmul(time_shift(x, 1), p.at(base + ".t_prev.w").value),
                   matmul(x, p.at(base + ".t_self.w").value));
    h = add(h, matmul(time_shift(x, -1), p.at(base + ".t_next.w").value));
    h = add_rowvec(h, p.at(base + ".b").value);
    x = layer_norm_rows(tanh_map(h), p.at(base + ".ln.g").value, p.at(base + ".ln.b").value);
  }
  return x;
}

Tensor embed_rows_nograd(const ParamSet& p, const std::vector<int>& prev_ids,
                         int pos_offset = 0) {
  const Tensor& tab = p.at("embed.tok").value;
  const Tensor& bos = p.at("embed.bos").value;
  const Tensor& pos = p.at("embed.pos").value;
  const int d = tab.cols();
  const int n = static_cast<int>(prev_ids.size());
  OCL_CHECK(pos.rows() >= pos_offset + n, StructureError, "position table too short");
  Tensor e = Tensor::zeros({n, d});
  for (int t = 0; t < n; ++t) {
    const double* src = prev_ids[t] < 0
                            ? &bos.data[0]
                            : &tab.data[static_cast<size_t>(prev_ids[t]) * d];
    for (int j = 0; j < d; ++j) e.at(t, j) = src[j] + pos.at(pos_offset + t, j);
  }
  return e;
}

Tensor decoder_stack_nograd(const ParamSet& p, const ModelConfig& cfg, const Tensor& e,
                            const Tensor& k, const Tensor& v) {
  const Tensor q = matmul(e, p.at("attn.q.w").value);
  const Tensor att = softmax_rows(scale(matmul_nt(q, k), 1.0 / std::sqrt(cfg.d_h)));
  Tensor z = add(e, matmul(att, v));
  for (int l = 0; l < cfg.n_dec; ++l) {
    const std::string base = "dec" + std::to_string(l);
    z = layer_norm_rows(
        tanh_map(add_rowvec(matmul(z, p.at(base + ".ff.w").value), p.at(base + ".ff.b").value)),
        p.at(base + ".ln.g").value, p.at(base + ".ln.b").value);
  }
  return log_softmax_rows(add_rowvec(matmul(z, p.at("out.w").value), p.at("out.b").value));
}

}  // namespace

ModelOutputs forward(const ParamSet& params, const ModelConfig& cfg, const Tensor& frames,
                     const std::vector<int>& targets) {
  check_utterance(cfg, frames, targets);
  const Tensor enc = encode_nograd(params, cfg, frames);
  ModelOutputs out;
  out.ctc_log_probs = log_softmax_rows(
      add_rowvec(matmul(enc, params.at("ctc.w").value), params.at("ctc.b").value));
  const Tensor e = embed_rows_nograd(params, shifted_prev_ids(targets));
  const Tensor k = matmul(enc, params.at("attn.k.w").value);
  const Tensor v = matmul(enc, params.at("attn.v.w").value);
  out.dec_log_probs = decoder_stack_nograd(params, cfg, e, k, v);
  return out;
}

// ---- losses -------------------------------------------------------------------

LossGrad ce_loss(const ParamSet& params, const ModelConfig& cfg, const Tensor& frames,
                 const std::vector<int>& targets, double c) {
  Tape t;
  TapeParams P = make_tape_params(t, params);
  return run_backward(t, params, P.ids, build_ce(t, P, cfg, frames, targets, c));
}

double ce_loss_value(const ParamSet& params, const ModelConfig& cfg, const Tensor& frames,
                     const std::vector<int>& targets, double c) {
  Tape t;
  TapeParams P = make_tape_params(t, params);
  return t.scalar_val(build_ce(t, P, cfg, frames, targets, c));
}

LossGrad kd_loss(const ParamSet& student, const ModelConfig& cfg,
                 const ModelOutputs& teacher_outputs, const Tensor& frames,
                 const std::vector<int>& targets, double c) {
  Tape t;
  TapeParams P = make_tape_params(t, student);
  return run_backward(t, student, P.ids,
                      build_kd(t, P, cfg, teacher_outputs, frames, targets, c));
}

double kd_loss_value(const ParamSet& student, const ModelConfig& cfg,
                     const ModelOutputs& teacher_outputs, const Tensor& frames,
                     const std::vector<int>& targets, double c) {
  Tape t;
  TapeParams P = make_tape_params(t, student);
  return t.scalar_val(build_kd(t, P, cfg, teacher_outputs, frames, targets, c));
}

LossGrad total_loss(const ParamSet& student, const ParamSet& teacher, const ModelConfig& cfg,
                    const Tensor& frames, const std::vector<int>& targets, double c,
                    double lambda) {
  Tape t;
  TapeParams P = make_tape_params(t, student);
  return run_backward(t, student, P.ids,
                      build_total(t, P, teacher, cfg, frames, targets, c, lambda));
}

double total_loss_value(const ParamSet& student, const ParamSet& teacher,
                        const ModelConfig& cfg, const Tensor& frames,
                        const std::vector<int>& targets, double c, double lambda) {
  Tape t;
  TapeParams P = make_tape_params(t, student);
  return t.scalar_val(build_total(t, P, teacher, cfg, frames, targets, c, lambda));
}

LossGrad ce_batch_loss(const ParamSet& params, const ModelConfig& cfg,
                       const std::vector<BatchItem>& items, double c) {
  OCL_CHECK(!items.empty(), ConfigError, "ce_batch_loss: empty batch");
  Tape t;
  TapeParams P = make_tape_params(t, params);
  int acc = -1;
  for (const BatchItem& it : items) {
    const int l = build_ce(t, P, cfg, *it.frames, *it.targets, c);
    acc = acc < 0 ? l : t.add(acc, l);
  }
  return run_backward(t, params, P.ids, acc);
}

LossGrad total_batch_loss(const ParamSet& student, const ParamSet& teacher,
                          const ModelConfig& cfg, const std::vector<BatchItem>& items,
                          double c, double lambda) {
  OCL_CHECK(!items.empty(), ConfigError, "total_batch_loss: empty batch");
  Tape t;
  TapeParams P = make_tape_params(t, student);
  int acc = -1;
  for (const BatchItem& it : items) {
    const int l = build_total(t, P, teacher, cfg, *it.frames, *it.targets, c, lambda);
    acc = acc < 0 ? l : t.add(acc, l);
  }
  return run_backward(t, student, P.ids, acc);
}

// ---- decoding -------------------------------------------------------------------

std::vector<int> greedy_decode(const ParamSet& params, const ModelConfig& cfg,
                               const Tensor& frames) {
  OCL_CHECK(frames.ndim() == 2 && frames.cols() == cfg.d_i, StructureError,
            "frames must be L_F x " << cfg.d_i);
  const Tensor enc = encode_nograd(params, cfg, frames);
  const Tensor k = matmul(enc, params.at("attn.k.w").value);
  const Tensor v = matmul(enc, params.at("attn.v.w").value);

  std::vector<int> out;
  int prev = -1;
  for (int t = 0; t < cfg.max_len; ++t) {
    const Tensor e = embed_rows_nograd(params, {prev}, t);
    const Tensor lp = decoder_stack_nograd(params, cfg, e, k, v);
    int best = 0;
    for (int j = 1; j < cfg.vocab; ++j)
      if (lp.at(0, j) > lp.at(0, best)) best = j;
    if (best == cfg.eos_id()) break;
    out.push_back(best);
    prev = best;
  }
  return out;
}

}  // namespace ocl
