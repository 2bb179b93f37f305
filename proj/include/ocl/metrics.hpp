#pragma once

#include <map>
#include <optional>
#include <vector>

#include "ocl/model.hpp"

namespace ocl {

// Unit-cost Levenshtein distance (substitution/insertion/deletion).
long long edit_distance(const std::vector<int>& a, const std::vector<int>& b);

// edit_distance(hyp, ref) / |ref|; ref must be non-empty. May exceed 1 for a
// hypothesis much longer than the reference; aggregation caps per-utterance
// rates at 1.
double token_error_rate(const std::vector<int>& hyp, const std::vector<int>& ref);

struct EvalReport {
  int step = 0;
  std::vector<int> seen_tasks;
  std::map<int, double> per_task_error;
  double awer = 0.0;  // mean of per_task_error over seen_tasks
  std::optional<double> forgetting_t0;  // error(T0) - initial error(T0)
  std::optional<double> bwt;            // negative mean forgetting over completed tasks
};

double mean_over(const std::map<int, double>& per_task, const std::vector<int>& seen);

// Greedy-decodes every utterance of every provided eval set (eos stripped from
// the references) and reports per-task mean error plus the average over the
// seen tasks. Pure: never mutates the parameters.
EvalReport evaluate(const ParamSet& params, const ModelConfig& cfg,
                    const std::map<int, std::vector<Utterance>>& sets,
                    std::vector<int> seen_tasks, int step);

// (w * err_initial + err_new) / (w + 1): the test-experiment selection metric.
double weighted_awer(double err_initial, double err_new, double w);

}  // namespace ocl
