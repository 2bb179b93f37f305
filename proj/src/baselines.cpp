#include "ocl/baselines.hpp"

#include <algorithm>
#include <cmath>

namespace ocl {

void reservoir_offer(Memory& mem, const Utterance& utt, Xoshiro256& rng) {
  OCL_CHECK(mem.capacity >= 1, ConfigError, "memory capacity must be >= 1");
  if (static_cast<int>(mem.slots.size()) < mem.capacity) {
    mem.slots.push_back(utt);
  } else {
    // keep with probability capacity / (n_seen + 1), replacing a uniform slot
    const long long j = rng.uniform_int(0, static_cast<int>(mem.n_seen));
    if (j < mem.capacity) mem.slots[static_cast<size_t>(j)] = utt;
  }
  ++mem.n_seen;
}

Grad ogem_project(const Grad& g, const Grad& g_ref) {
  const double g_dot_ref = dot(g, g_ref);
  if (g_dot_ref >= 0.0) return g;
  const double ref_sq = dot(g_ref, g_ref);
  if (ref_sq == 0.0) return g;  // degenerate reference: skip the projection
  return axpy_combine(1.0, g, -g_dot_ref / ref_sq, g_ref);
}

double ewc_penalty(const ParamSet& theta, const ParamSet& anchor, const Grad& fisher,
                   double lambda_ewc) {
  OCL_CHECK(theta.compatible_with(anchor) && theta.compatible_with(fisher), StructureError,
            "ewc_penalty: incompatible parameter sets");
  double acc = 0.0;
  for (int i = 0; i < theta.size(); ++i) {
    const std::vector<double>& tv = theta[i].value.data;
    const std::vector<double>& av = anchor[i].value.data;
    const std::vector<double>& fv = fisher[i].value.data;
    for (size_t k = 0; k < tv.size(); ++k) {
      const double d = tv[k] - av[k];
      acc += fv[k] * d * d;
    }
  }
  return 0.5 * lambda_ewc * acc;
}

Grad empirical_fisher(const ParamSet& params, const ModelConfig& cfg,
                      const std::vector<Utterance>& sample, double c) {
  OCL_CHECK(!sample.empty(), ConfigError, "empirical_fisher: empty sample");
  Grad fisher = params.zeros_like();
  for (const Utterance& u : sample) {
    const LossGrad lg = ce_loss(params, cfg, u.frames, u.targets, c);
    for (int i = 0; i < fisher.size(); ++i) {
      const std::vector<double>& gv = lg.grad[i].value.data;
      std::vector<double>& fv = fisher[i].value.data;
      for (size_t k = 0; k < fv.size(); ++k) fv[k] += gv[k] * gv[k];
    }
  }
  const double inv_n = 1.0 / static_cast<double>(sample.size());
  for (int i = 0; i < fisher.size(); ++i)
    for (double& v : fisher[i].value.data) v *= inv_n;
  return fisher;
}

namespace {

std::vector<BatchItem> memory_sample(const Memory& mem, int count, Xoshiro256& rng,
                                     std::vector<int>& scratch) {
  // uniform draw without replacement (partial Fisher-Yates over slot indices)
  const int n = static_cast<int>(mem.slots.size());
  scratch.resize(n);
  for (int i = 0; i < n; ++i) scratch[i] = i;
  std::vector<BatchItem> items;
  items.reserve(count);
  for (int i = 0; i < count; ++i) {
    const int j = rng.uniform_int(i, n - 1);
    std::swap(scratch[i], scratch[j]);
    const Utterance& u = mem.slots[scratch[i]];
    items.push_back(BatchItem{&u.frames, &u.targets});
  }
  return items;
}

void offer_batch(Memory& mem, const LearnerBatch& batch, Xoshiro256& rng) {
  for (const BatchItem& it : batch.items) {
    Utterance u;
    u.frames = *it.frames;
    u.targets = *it.targets;
    reservoir_offer(mem, u, rng);
  }
}

}  // namespace

// ---- FT ----------------------------------------------------------------------

FtLearner::FtLearner(ParamSet theta0, double alpha, double c, ModelConfig cfg)
    : theta_(std::move(theta0)), alpha_(alpha), c_(c), cfg_(cfg) {
  OCL_CHECK(alpha_ > 0.0, ConfigError, "ft: alpha must be > 0");
}

void FtLearner::step(const LearnerBatch& batch) {
  OCL_CHECK(!batch.items.empty(), ConfigError, "ft: empty batch");
  const LossGrad lg = ce_batch_loss(theta_, cfg_, batch.items, c_);
  theta_ = sgd_step(theta_, lg.grad, alpha_);
}

// ---- ER ----------------------------------------------------------------------

ErLearner::ErLearner(ParamSet theta0, double alpha, double c, ModelConfig cfg,
                     int memory_capacity, double weight_er, uint64_t rng_seed)
    : theta_(std::move(theta0)),
      alpha_(alpha),
      c_(c),
      cfg_(cfg),
      weight_er_(weight_er),
      rng_(rng_seed) {
  OCL_CHECK(alpha_ > 0.0, ConfigError, "er: alpha must be > 0");
  OCL_CHECK(weight_er_ >= 0.0, ConfigError, "er: weight must be >= 0");
  mem_.capacity = memory_capacity;
}

void ErLearner::step(const LearnerBatch& batch) {
  OCL_CHECK(!batch.items.empty(), ConfigError, "er: empty batch");
  if (mem_.slots.empty()) {
    const LossGrad lg = ce_batch_loss(theta_, cfg_, batch.items, c_);
    theta_ = sgd_step(theta_, lg.grad, alpha_);
  } else {
    std::vector<int> scratch;
    const int take = std::min(static_cast<int>(mem_.slots.size()),
                              static_cast<int>(batch.items.size()));
    const std::vector<BatchItem> mem_items = memory_sample(mem_, take, rng_, scratch);
    // L = L_new + weight_er * L_mem, one SGD step on the combined gradient
    const LossGrad lg_new = ce_batch_loss(theta_, cfg_, batch.items, c_);
    const LossGrad lg_mem = ce_batch_loss(theta_, cfg_, mem_items, c_);
    const Grad combined = axpy_combine(1.0, lg_new.grad, weight_er_, lg_mem.grad);
    theta_ = sgd_step(theta_, combined, alpha_);
  }
  offer_batch(mem_, batch, rng_);
}

// ---- O-GEM -------------------------------------------------------------------

OgemLearner::OgemLearner(ParamSet theta0, double alpha, double c, ModelConfig cfg,
                         int memory_capacity, int ref_batch_size, uint64_t rng_seed)
    : theta_(std::move(theta0)),
      alpha_(alpha),
      c_(c),
      cfg_(cfg),
      ref_batch_size_(ref_batch_size),
      rng_(rng_seed) {
  OCL_CHECK(alpha_ > 0.0, ConfigError, "ogem: alpha must be > 0");
  OCL_CHECK(ref_batch_size_ >= 1, ConfigError, "ogem: ref batch size must be >= 1");
  mem_.capacity = memory_capacity;
}

void OgemLearner::step(const LearnerBatch& batch) {
  OCL_CHECK(!batch.items.empty(), ConfigError, "ogem: empty batch");
  const LossGrad lg = ce_batch_loss(theta_, cfg_, batch.items, c_);
  Grad g = lg.grad;
  if (!mem_.slots.empty()) {
    std::vector<int> scratch;
    const int take = std::min(static_cast<int>(mem_.slots.size()), ref_batch_size_);
    const std::vector<BatchItem> ref_items = memory_sample(mem_, take, rng_, scratch);
    const LossGrad ref = ce_batch_loss(theta_, cfg_, ref_items, c_);
    g = ogem_project(g, ref.grad);
  }
  theta_ = sgd_step(theta_, g, alpha_);
  offer_batch(mem_, batch, rng_);
}

// ---- UOE ---------------------------------------------------------------------

UoeLearner::UoeLearner(ParamSet theta0, double alpha, double c, ModelConfig cfg)
    : FtLearner(std::move(theta0), alpha, c, cfg),
      trainable_(theta_.mask_where([](const ParamEntry& e) {
        return e.group == Group::encoder && !e.norm_flag;
      })) {}

void UoeLearner::step(const LearnerBatch& batch) {
  OCL_CHECK(!batch.items.empty(), ConfigError, "uoe: empty batch");
  const LossGrad lg = ce_batch_loss(theta_, cfg_, batch.items, c_);
  theta_ = sgd_step(theta_, lg.grad, alpha_, &trainable_);
}

// ---- EWC ---------------------------------------------------------------------

EwcLearner::EwcLearner(ParamSet theta0, Grad fisher, double lambda_ewc, double gamma,
                       int refresh_every, double alpha, double c, ModelConfig cfg)
    : theta_(theta0),
      anchor_(std::move(theta0)),
      fisher_(std::move(fisher)),
      lambda_ewc_(lambda_ewc),
      gamma_(gamma),
      refresh_every_(refresh_every),
      alpha_(alpha),
      c_(c),
      cfg_(cfg) {
  OCL_CHECK(theta_.compatible_with(fisher_), StructureError, "ewc: fisher mismatch");
  OCL_CHECK(lambda_ewc_ >= 0.0, ConfigError, "ewc: lambda must be >= 0");
  OCL_CHECK(gamma_ >= 0.0 && gamma_ <= 1.0, ConfigError, "ewc: gamma must lie in [0, 1]");
  OCL_CHECK(refresh_every_ >= 1, ConfigError, "ewc: refresh interval must be >= 1");
  for (int i = 0; i < fisher_.size(); ++i)
    for (double v : fisher_[i].value.data)
      OCL_CHECK(v >= 0.0, NumericError, "ewc: negative fisher weight in " << fisher_[i].name);
}

void EwcLearner::step(const LearnerBatch& batch) {
  OCL_CHECK(!batch.items.empty(), ConfigError, "ewc: empty batch");
  const LossGrad lg = ce_batch_loss(theta_, cfg_, batch.items, c_);
  // the penalty is quadratic, so its gradient is added analytically
  Grad g = lg.grad;
  for (int i = 0; i < g.size(); ++i) {
    const std::vector<double>& tv = theta_[i].value.data;
    const std::vector<double>& av = anchor_[i].value.data;
    const std::vector<double>& fv = fisher_[i].value.data;
    std::vector<double>& gv = g[i].value.data;
    for (size_t k = 0; k < gv.size(); ++k)
      gv[k] += lambda_ewc_ * fv[k] * (tv[k] - av[k]);
  }
  theta_ = sgd_step(theta_, g, alpha_);
  ++steps_;
  if (steps_ % refresh_every_ == 0) {
    std::vector<Utterance> sample;
    sample.reserve(batch.items.size());
    for (const BatchItem& it : batch.items) {
      Utterance u;
      u.frames = *it.frames;
      u.targets = *it.targets;
      sample.push_back(std::move(u));
    }
    const Grad batch_fisher = empirical_fisher(theta_, cfg_, sample, c_);
    fisher_ = axpy_combine(gamma_, fisher_, 1.0 - gamma_, batch_fisher);
    anchor_ = theta_;
  }
}

}  // namespace ocl
