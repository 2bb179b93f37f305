#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "ocl/model.hpp"
#include "ocl/tensor.hpp"

namespace ocl {

// Generative description of the task stream: an initial task plus a sequence
// of stream tasks ("accents"), each with a pool of speakers. Everything is a
// pure function of the spec, bit-identical across runs.
struct StreamSpec {
  int n_tasks = 6;  // including the initial task 0
  std::vector<int> utterances_per_task;
  std::vector<int> speakers_per_task;
  int batch_cap = 8;  // B
  std::array<int, 2> frame_len_range{13, 24};
  std::array<int, 2> target_len_range{2, 6};  // includes the eos token
  double noise_std = 0.05;
  uint64_t seed = 1;
  std::vector<int> task_order;  // permutation of the stream tasks 1..n_tasks-1
  std::vector<int> accent_ids;  // accent identity per task; defaults to 0..n_tasks-1
  int eval_utts_per_task = 64;
  int d_i = 8;
  int vocab = 12;

  void validate() const;
  static StreamSpec preset(const std::string& name, uint64_t seed);
};

// Task identity is an orthogonal input mixing ("accent"); speaker identity is
// an additive offset in input space.
struct TaskGenerator {
  int task_index = 0;
  int accent_id = 0;
  Tensor mixing;                        // d_i x d_i orthogonal
  std::vector<Tensor> speaker_offsets;  // one d_i vector per local speaker
};

TaskGenerator make_task_generator(const StreamSpec& spec, int task_index);

// Full (evaluation-facing) batch: single speaker, hence single task.
struct Batch {
  std::vector<Utterance> utts;
  long long frames_total = 0;  // F
  long long tokens_total = 0;  // W
  int speaker_id = -1;
  int task_id = -1;
};

// Learner-facing view: content only, no task or speaker identity.
struct LearnerBatch {
  std::vector<BatchItem> items;
  long long frames_total = 0;
  long long tokens_total = 0;
};

LearnerBatch learner_view(const Batch& b);

struct InitialData {
  std::vector<Utterance> train, val, test;
  long long F0 = 0;  // total frames of the training split
  long long W0 = 0;  // total target tokens of the training split
};

InitialData generate_initial_dataset(const StreamSpec& spec);
std::vector<Batch> generate_stream(const StreamSpec& spec);

// Held-out per-task sets, disjoint from train/stream draws by construction
// (distinct RNG sub-streams). eval_sets()[0] equals the initial test split.
std::map<int, std::vector<Utterance>> eval_sets(const StreamSpec& spec);
std::map<int, std::vector<Utterance>> validation_sets(const StreamSpec& spec);

}  // namespace ocl
