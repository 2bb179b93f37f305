#pragma once

#include <cstdint>
#include <vector>

#include "ocl/autodiff.hpp"
#include "ocl/paramset.hpp"
#include "ocl/tensor.hpp"

namespace ocl {

// Toy encoder-decoder sequence model: n_enc blocks of width-3 temporal mixing
// convolution + tanh + layer-norm feeding a CTC head over vocab+blank, and a
// teacher-forced autoregressive decoder (token/position embeddings, one
// scaled-dot attention over encoder states, n_dec feedforward blocks) feeding
// a softmax head over vocab.
struct ModelConfig {
  int d_i = 8;      // input feature dimension
  int d_h = 40;     // hidden dimension
  int n_enc = 2;    // encoder blocks
  int n_dec = 1;    // decoder feedforward blocks
  int vocab = 12;   // C: decoder classes; CTC adds a blank on top
  double ctc_weight = 0.3;  // c in the composite loss
  int max_len = 10;         // decode length cap; also the position table size

  int blank_id() const { return vocab; }
  // The synthetic language reserves the last vocabulary id as end-of-sequence.
  int eos_id() const { return vocab - 1; }
  void validate() const;
};

struct Utterance {
  Tensor frames;             // L_F x d_i
  std::vector<int> targets;  // token ids in [0, vocab), eos-terminated by the generator
  int speaker_id = -1;
  int task_id = -1;
};

struct ModelOutputs {
  Tensor ctc_log_probs;  // L_F x (vocab+1), blank = last column
  Tensor dec_log_probs;  // L_W x vocab, teacher-forced
};

ParamSet init_params(const ModelConfig& cfg, uint64_t seed);

// No-grad forward (teacher forcing); shares its kernels with the taped path.
ModelOutputs forward(const ParamSet& params, const ModelConfig& cfg,
                     const Tensor& frames, const std::vector<int>& targets);

struct LossGrad {
  double value = 0.0;
  Grad grad;
};

struct BatchItem {
  const Tensor* frames;
  const std::vector<int>* targets;
};

// (1-c) * mean-token decoder NLL + c * CTC NLL / L_W
LossGrad ce_loss(const ParamSet& params, const ModelConfig& cfg, const Tensor& frames,
                 const std::vector<int>& targets, double c);
double ce_loss_value(const ParamSet& params, const ModelConfig& cfg, const Tensor& frames,
                     const std::vector<int>& targets, double c);

// Distillation from fixed teacher outputs: (1-c) * dec term + c * ctc term,
// each term -1/L * sum teacher_prob * student_log_prob over its output grid.
LossGrad kd_loss(const ParamSet& student, const ModelConfig& cfg,
                 const ModelOutputs& teacher_outputs, const Tensor& frames,
                 const std::vector<int>& targets, double c);
double kd_loss_value(const ParamSet& student, const ModelConfig& cfg,
                     const ModelOutputs& teacher_outputs, const Tensor& frames,
                     const std::vector<int>& targets, double c);

// (1-lambda) * ce + lambda * kd, teacher outputs recomputed without gradient
// tracking; lambda == 0 skips the teacher entirely and equals ce bit-exactly.
LossGrad total_loss(const ParamSet& student, const ParamSet& teacher, const ModelConfig& cfg,
                    const Tensor& frames, const std::vector<int>& targets, double c,
                    double lambda);
double total_loss_value(const ParamSet& student, const ParamSet& teacher,
                        const ModelConfig& cfg, const Tensor& frames,
                        const std::vector<int>& targets, double c, double lambda);

// Batch losses are sums over items (gradient of the sum).
LossGrad ce_batch_loss(const ParamSet& params, const ModelConfig& cfg,
                       const std::vector<BatchItem>& items, double c);
LossGrad total_batch_loss(const ParamSet& student, const ParamSet& teacher,
                          const ModelConfig& cfg, const std::vector<BatchItem>& items,
                          double c, double lambda);

// Autoregressive greedy decode from the decoder head; stops at eos (which is
// stripped from the result) or after max_len tokens. Ties break on the lowest
// token id.
std::vector<int> greedy_decode(const ParamSet& params, const ModelConfig& cfg,
                               const Tensor& frames);

}  // namespace ocl
