#include "ocl/metrics.hpp"

#include <algorithm>

namespace ocl {

long long edit_distance(const std::vector<int>& a, const std::vector<int>& b) {
  const size_t n = a.size(), m = b.size();
  std::vector<long long> prev(m + 1), cur(m + 1);
  for (size_t j = 0; j <= m; ++j) prev[j] = static_cast<long long>(j);
  for (size_t i = 1; i <= n; ++i) {
    cur[0] = static_cast<long long>(i);
    for (size_t j = 1; j <= m; ++j) {
      const long long sub = prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
      cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, sub});
    }
    std::swap(prev, cur);
  }
  return prev[m];
}

double token_error_rate(const std::vector<int>& hyp, const std::vector<int>& ref) {
  OCL_CHECK(!ref.empty(), ConfigError, "token_error_rate: empty reference");
  return static_cast<double>(edit_distance(hyp, ref)) / static_cast<double>(ref.size());
}

double mean_over(const std::map<int, double>& per_task, const std::vector<int>& seen) {
  OCL_CHECK(!seen.empty(), ConfigError, "mean_over: no seen tasks");
  double acc = 0.0;
  for (int t : seen) {
    const auto it = per_task.find(t);
    OCL_CHECK(it != per_task.end(), ConfigError, "mean_over: task " << t << " not evaluated");
    acc += it->second;
  }
  return acc / static_cast<double>(seen.size());
}

namespace {

std::vector<int> strip_eos(const std::vector<int>& seq, int eos) {
  std::vector<int> out;
  out.reserve(seq.size());
  for (int t : seq) {
    if (t == eos) break;
    out.push_back(t);
  }
  return out;
}

}  // namespace

EvalReport evaluate(const ParamSet& params, const ModelConfig& cfg,
                    const std::map<int, std::vector<Utterance>>& sets,
                    std::vector<int> seen_tasks, int step) {
  EvalReport rep;
  rep.step = step;
  rep.seen_tasks = std::move(seen_tasks);
  for (const auto& [task, set] : sets) {
    OCL_CHECK(!set.empty(), ConfigError, "evaluate: empty eval set for task " << task);
    double acc = 0.0;
    int scored = 0;
    for (const Utterance& u : set) {
      const std::vector<int> ref = strip_eos(u.targets, cfg.eos_id());
      if (ref.empty()) continue;  // eos-only target carries no scoreable content
      const std::vector<int> hyp = greedy_decode(params, cfg, u.frames);
      acc += std::min(1.0, token_error_rate(hyp, ref));
      ++scored;
    }
    OCL_CHECK(scored > 0, ConfigError, "evaluate: no scoreable utterances in task " << task);
    rep.per_task_error[task] = acc / static_cast<double>(scored);
  }
  rep.awer = mean_over(rep.per_task_error, rep.seen_tasks);
  return rep;
}

double weighted_awer(double err_initial, double err_new, double w) {
  OCL_CHECK(w > 0.0, ConfigError, "weighted_awer: weight must be > 0");
  return (w * err_initial + err_new) / (w + 1.0);
}

}  // namespace ocl
