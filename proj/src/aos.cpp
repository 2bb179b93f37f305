#include "ocl/aos.hpp"

#include <cmath>

namespace ocl {

void AosConfig::validate() const {
  OCL_CHECK(tau >= 1.0, ConfigError, "aos: tau must be >= 1, got " << tau);
  OCL_CHECK(tau2 >= 1.0, ConfigError, "aos: tau2 must be >= 1, got " << tau2);
  OCL_CHECK(lambda >= 0.0 && lambda <= 1.0, ConfigError,
            "aos: lambda must lie in [0, 1], got " << lambda);
  OCL_CHECK(alpha > 0.0, ConfigError, "aos: alpha must be > 0, got " << alpha);
  OCL_CHECK(ctc_weight >= 0.0 && ctc_weight <= 1.0, ConfigError,
            "aos: ctc weight must lie in [0, 1]");
}

AosConfig aos_default_config() { return AosConfig{1.0, 1.0, 0.1, 0.01, 0.3}; }

AosConfig aos_optimized_config() { return AosConfig{2.0, 1.0, 0.1, 0.01, 0.3}; }

static double eta(long long count, long long seen, double plasticity, const char* what) {
  OCL_CHECK(count > 0, ConfigError, what << ": batch count must be > 0");
  OCL_CHECK(seen >= 0, ConfigError, what << ": seen count must be >= 0");
  OCL_CHECK(plasticity >= 1.0, ConfigError, what << ": plasticity must be >= 1");
  const double scaled = plasticity * static_cast<double>(count);
  return scaled / (static_cast<double>(seen) + scaled);
}

double eta_enc(long long F, long long F_seen, double tau) {
  return eta(F, F_seen, tau, "eta_enc");
}

double eta_dec(long long W, long long W_seen, double tau2) {
  return eta(W, W_seen, tau2, "eta_dec");
}

AosState aos_init(ParamSet theta0, long long F0, long long W0) {
  OCL_CHECK(F0 >= 0 && W0 >= 0, ConfigError, "aos: initial counters must be >= 0");
  AosState s;
  s.adapted = theta0;
  s.final_model = std::move(theta0);
  s.F_seen = F0;
  s.W_seen = W0;
  s.step = 0;
  return s;
}

AosState aos_step(const AosState& state, const LearnerBatch& batch, const AosConfig& cfg,
                  const ModelConfig& model_cfg) {
  cfg.validate();
  OCL_CHECK(!batch.items.empty(), ConfigError, "aos_step: empty batch");
  OCL_CHECK(state.final_model.compatible_with(state.adapted), StructureError,
            "aos_step: final/adapted mismatch");

  const LossGrad loss = total_batch_loss(state.adapted, state.final_model, model_cfg,
                                         batch.items, cfg.ctc_weight, cfg.lambda);
  ParamSet adapted_next = sgd_step(state.adapted, loss.grad, cfg.alpha);

  // eta is computed from the counters before this batch is accounted for
  const double eta_e = eta_enc(batch.frames_total, state.F_seen, cfg.tau);
  const double eta_d = eta_dec(batch.tokens_total, state.W_seen, cfg.tau2);

  AosState next;
  next.final_model = state.final_model;
  for (int i = 0; i < next.final_model.size(); ++i) {
    const double e = next.final_model[i].group == Group::decoder ? eta_d : eta_e;
    const std::vector<double>& av = adapted_next[i].value.data;
    std::vector<double>& fv = next.final_model[i].value.data;
    for (size_t k = 0; k < fv.size(); ++k) fv[k] = std::lerp(fv[k], av[k], e);
    ensure_finite(next.final_model[i].value, next.final_model[i].name.c_str());
  }
  next.adapted = std::move(adapted_next);
  next.F_seen = state.F_seen + batch.frames_total;
  next.W_seen = state.W_seen + batch.tokens_total;
  next.step = state.step + 1;
  return next;
}

AosLearner::AosLearner(ParamSet theta0, long long F0, long long W0, AosConfig cfg,
                       ModelConfig model_cfg)
    : state_(aos_init(std::move(theta0), F0, W0)), cfg_(cfg), model_cfg_(model_cfg) {
  cfg_.validate();
  model_cfg_.validate();
}

void AosLearner::step(const LearnerBatch& batch) {
  state_ = aos_step(state_, batch, cfg_, model_cfg_);
}

}  // namespace ocl
