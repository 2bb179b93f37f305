#pragma once

#include <map>
#include <memory>
#include <set>
#include <string>
#include <vector>

#include "json.hpp"
#include "ocl/aos.hpp"
#include "ocl/learner.hpp"
#include "ocl/metrics.hpp"
#include "ocl/stream.hpp"

namespace ocl {

struct RunConfig {
  std::string method = "aos";  // aos | ft | er | ogem | uoe | ewc
  std::string stream_preset = "seq1";
  uint64_t seed = 1;
  int eval_every = 100;

  ModelConfig model;     // model.ctc_weight is the shared c
  AosConfig aos;         // aos.alpha is the shared learning rate
  int memory = 200;      // er / ogem reservoir capacity
  double weight_er = 1.0;
  int ogem_ref_batch = 8;
  double lambda_ewc = 10.0;  // winner of the ewc sweep on the test experiment
  double ewc_gamma = 0.95;
  int ewc_every = 50;

  int pretrain_epochs = 40;
  double pretrain_lr = 0.025;

  std::string out_dir;   // empty: no files written
  std::string data_dir;  // empty: $AOS_DATA_DIR or ./aos_data

  void validate() const;
  std::string run_name() const;
};

// Rejects flags that do not apply to the chosen method (e.g. --tau with ft).
void validate_method_params(const std::string& method,
                            const std::set<std::string>& set_flags);

std::string resolve_data_dir(const RunConfig& cfg);

struct StreamData {
  StreamSpec spec;
  InitialData initial;
  std::vector<Batch> stream;
  std::map<int, std::vector<Utterance>> eval;
};

StreamData build_stream_data(const StreamSpec& spec);

struct PretrainResult {
  ParamSet theta0;
  long long F0 = 0;
  long long W0 = 0;
  double val_ter = 0.0;
};

// Multi-epoch SGD on the initial task's training split. Deterministic in
// (spec, cfg, epochs, lr, seed); aborts with NumericError on divergence.
PretrainResult pretrain(const StreamSpec& spec, const ModelConfig& cfg, int epochs,
                        double lr, uint64_t seed);

// Disk-cached variant keyed on everything the initial model depends on.
PretrainResult pretrain_cached(const RunConfig& cfg, const StreamSpec& spec);

std::unique_ptr<Learner> make_learner(const RunConfig& cfg, const StreamData& data,
                                      const PretrainResult& pre);

struct RunRecord {
  std::string method;
  std::string stream_preset;
  uint64_t seed = 0;
  nlohmann::json config;
  std::vector<int> column_tasks;  // task 0 followed by the stream order
  EvalReport initial;
  std::vector<EvalReport> reports;
  std::map<int, double> completion_errors;  // per stream task, at its boundary
  std::string status = "ok";
  double wall_sec = 0.0;
  std::string checkpoint;

  const EvalReport& final_report() const;
};

nlohmann::json report_to_json(const EvalReport& r);
EvalReport report_from_json(const nlohmann::json& j);
nlohmann::json record_to_json(const RunRecord& r);
RunRecord record_from_json(const nlohmann::json& j);
RunRecord load_record(const std::string& path);

// Core loop: one pass over the stream, stepping the learner on the
// label-free batch view and evaluating on the cadence plus at every task
// boundary. A NumericError from the learner truncates the record and marks it
// failed instead of propagating.
RunRecord run_stream(const RunConfig& cfg, const StreamData& data, Learner& learner);

// Full pipeline: data, cached pretrain, learner, stream pass, persistence
// (record.json, metrics.jsonl, summary.csv, checkpoint) under
// out_dir/run_name when out_dir is set.
RunRecord run(const RunConfig& cfg);

void persist_record(const RunConfig& cfg, RunRecord& record, const Learner* learner);

struct SweepEntry {
  std::map<std::string, double> point;
  double wawer = 0.0;
  double err_initial = 0.0;
  double err_new = 0.0;
};

struct SweepResult {
  std::vector<SweepEntry> leaderboard;  // ascending weighted AWER
  const SweepEntry& best() const;
};

// Grid search on the two-task test experiment, ranked by weighted AWER
// between the initial-task and new-task validation errors (weight w:1).
SweepResult sweep(const RunConfig& base, const std::map<std::string, std::vector<double>>& grid,
                  double w = 2.0);

std::string render_report_text(const std::vector<RunRecord>& records);
std::string render_report_csv(const std::vector<RunRecord>& records);
std::string render_leaderboard_text(const SweepResult& s);
std::string render_leaderboard_csv(const SweepResult& s);

std::string format_double(double v);  // %.17g: exact CSV round-trips

}  // namespace ocl
