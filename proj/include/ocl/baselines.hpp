#pragma once

#include <cstdint>

#include "ocl/learner.hpp"
#include "ocl/model.hpp"
#include "ocl/rng.hpp"

namespace ocl {

// Fixed-size utterance memory filled by reservoir sampling: every offered item
// ends up stored with probability capacity / n_seen.
struct Memory {
  int capacity = 0;
  std::vector<Utterance> slots;
  long long n_seen = 0;
};

void reservoir_offer(Memory& mem, const Utterance& utt, Xoshiro256& rng);

// Single-constraint GEM projection: when dot(g, g_ref) < 0, remove the
// conflicting component, g' = g - (dot(g,g_ref)/dot(g_ref,g_ref)) g_ref.
// Returns g unchanged (bit-exact) when the constraint is already satisfied or
// g_ref has zero norm.
Grad ogem_project(const Grad& g, const Grad& g_ref);

// 0.5 * lambda_ewc * sum_k fisher_k * (theta_k - anchor_k)^2
double ewc_penalty(const ParamSet& theta, const ParamSet& anchor, const Grad& fisher,
                   double lambda_ewc);

// Diagonal empirical Fisher: mean of squared per-utterance ce-loss gradients.
Grad empirical_fisher(const ParamSet& params, const ModelConfig& cfg,
                      const std::vector<Utterance>& sample, double c);

// ---- learners ---------------------------------------------------------------

// plain SGD on the composite loss; the worst-case baseline
class FtLearner : public Learner {
 public:
  FtLearner(ParamSet theta0, double alpha, double c, ModelConfig cfg);
  void step(const LearnerBatch& batch) override;
  const ParamSet& inference_params() const override { return theta_; }
  std::string name() const override { return "ft"; }

 protected:
  ParamSet theta_;
  double alpha_;
  double c_;
  ModelConfig cfg_;
};

// joint training on the new batch and a uniformly drawn memory batch
class ErLearner : public Learner {
 public:
  ErLearner(ParamSet theta0, double alpha, double c, ModelConfig cfg, int memory_capacity,
            double weight_er, uint64_t rng_seed);
  void step(const LearnerBatch& batch) override;
  const ParamSet& inference_params() const override { return theta_; }
  std::string name() const override { return "er"; }
  const Memory& memory() const { return mem_; }

 private:
  ParamSet theta_;
  double alpha_;
  double c_;
  ModelConfig cfg_;
  Memory mem_;
  double weight_er_;
  Xoshiro256 rng_;
};

// gradient projected against a memory-batch reference gradient before SGD
class OgemLearner : public Learner {
 public:
  OgemLearner(ParamSet theta0, double alpha, double c, ModelConfig cfg,
              int memory_capacity, int ref_batch_size, uint64_t rng_seed);
  void step(const LearnerBatch& batch) override;
  const ParamSet& inference_params() const override { return theta_; }
  std::string name() const override { return "ogem"; }
  const Memory& memory() const { return mem_; }

 private:
  ParamSet theta_;
  double alpha_;
  double c_;
  ModelConfig cfg_;
  Memory mem_;
  int ref_batch_size_;
  Xoshiro256 rng_;
};

// updates encoder-group entries only, excluding layer-norm parameters
class UoeLearner : public FtLearner {
 public:
  UoeLearner(ParamSet theta0, double alpha, double c, ModelConfig cfg);
  void step(const LearnerBatch& batch) override;
  std::string name() const override { return "uoe"; }

 private:
  std::vector<bool> trainable_;
};

// quadratic importance-weighted penalty toward a running anchor, online
// variant with decayed Fisher accumulation
class EwcLearner : public Learner {
 public:
  EwcLearner(ParamSet theta0, Grad fisher, double lambda_ewc, double gamma,
             int refresh_every, double alpha, double c, ModelConfig cfg);
  void step(const LearnerBatch& batch) override;
  const ParamSet& inference_params() const override { return theta_; }
  std::string name() const override { return "ewc"; }

  const ParamSet& anchor() const { return anchor_; }
  const Grad& fisher() const { return fisher_; }

 private:
  ParamSet theta_;
  ParamSet anchor_;
  Grad fisher_;
  double lambda_ewc_;
  double gamma_;
  int refresh_every_;
  double alpha_;
  double c_;
  ModelConfig cfg_;
  long long steps_ = 0;
};

}  // namespace ocl
