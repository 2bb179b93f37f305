#pragma once

#include "ocl/learner.hpp"
#include "ocl/model.hpp"

namespace ocl {

// Online weight averaging with knowledge-distillation regularization. The
// adapted model tracks the stream with SGD; the final model is a running
// weighted average of adapted snapshots and is the only model used at
// inference time.
struct AosConfig {
  double tau = 1.0;    // encoder plasticity, >= 1
  double tau2 = 1.0;   // decoder plasticity, >= 1
  double lambda = 0.1; // KD weight in [0, 1]
  double alpha = 0.01; // SGD learning rate
  double ctc_weight = 0.3;  // c, shared with the model loss

  void validate() const;
};

AosConfig aos_default_config();    // (tau, lambda, tau2) = (1, 0.1, 1)
AosConfig aos_optimized_config();  // (2, 0.1, 1)

// eta = tau * F / (F_seen + tau * F), in (0, 1]; strictly decreasing in
// F_seen, strictly increasing in F and tau.
double eta_enc(long long F, long long F_seen, double tau);
double eta_dec(long long W, long long W_seen, double tau2);

struct AosState {
  ParamSet final_model;  // theta_i
  ParamSet adapted;      // theta~_i
  long long F_seen = 0;
  long long W_seen = 0;
  long long step = 0;
};

// Makes the step-0 state: adapted == final == theta0, counters from the
// initial task.
AosState aos_init(ParamSet theta0, long long F0, long long W0);

// One online step: train the adapted model on the batch (teacher = current
// final model), then fold it into the final model with eta_enc for encoder
// entries and eta_dec for decoder entries, then advance the counters. Pure:
// on error the input state is untouched.
AosState aos_step(const AosState& state, const LearnerBatch& batch, const AosConfig& cfg,
                  const ModelConfig& model_cfg);

class AosLearner : public Learner {
 public:
  AosLearner(ParamSet theta0, long long F0, long long W0, AosConfig cfg,
             ModelConfig model_cfg);

  void step(const LearnerBatch& batch) override;
  const ParamSet& inference_params() const override { return state_.final_model; }
  std::string name() const override { return "aos"; }

  const AosState& state() const { return state_; }

 private:
  AosState state_;
  AosConfig cfg_;
  ModelConfig model_cfg_;
};

}  // namespace ocl
