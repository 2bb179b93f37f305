#include "ocl/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "ocl/baselines.hpp"
#include "ocl/rng.hpp"
#include "ocl/serialize.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace ocl {

namespace {

constexpr int kPretrainBatch = 8;
constexpr int kFisherSample = 64;

const std::set<std::string> kCommonFlags = {"method",     "alpha",      "ctc-weight",
                                            "seed",       "stream",     "out",
                                            "eval-every", "epochs",     "pretrain-lr",
                                            "data-dir",   "weight"};

const std::map<std::string, std::set<std::string>> kMethodFlags = {
    {"aos", {"tau", "tau2", "lambda"}},
    {"ft", {}},
    {"er", {"memory", "weight-er"}},
    {"ogem", {"memory", "ogem-ref"}},
    {"uoe", {}},
    {"ewc", {"lambda-ewc", "gamma", "ewc-every"}},
};

std::string trim_number(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%g", v);
  return buf;
}

}  // namespace

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void RunConfig::validate() const {
  OCL_CHECK(kMethodFlags.count(method), ConfigError, "unknown method: " << method);
  OCL_CHECK(eval_every >= 1, ConfigError, "eval_every must be >= 1");
  OCL_CHECK(memory >= 1, ConfigError, "memory capacity must be >= 1");
  OCL_CHECK(weight_er >= 0.0, ConfigError, "weight_er must be >= 0");
  OCL_CHECK(ogem_ref_batch >= 1, ConfigError, "ogem ref batch must be >= 1");
  OCL_CHECK(lambda_ewc >= 0.0, ConfigError, "lambda_ewc must be >= 0");
  OCL_CHECK(ewc_gamma >= 0.0 && ewc_gamma <= 1.0, ConfigError, "ewc gamma must lie in [0,1]");
  OCL_CHECK(ewc_every >= 1, ConfigError, "ewc refresh interval must be >= 1");
  OCL_CHECK(pretrain_epochs >= 1, ConfigError, "pretrain epochs must be >= 1");
  OCL_CHECK(pretrain_lr > 0.0, ConfigError, "pretrain lr must be > 0");
  model.validate();
  aos.validate();
}

std::string RunConfig::run_name() const {
  std::string tag = method;
  if (method == "aos") {
    tag += "-t" + trim_number(aos.tau) + "-l" + trim_number(aos.lambda) + "-u" +
           trim_number(aos.tau2);
  } else if (method == "er" || method == "ogem") {
    tag += "-m" + std::to_string(memory);
  } else if (method == "ewc") {
    tag += "-l" + trim_number(lambda_ewc);
  }
  return tag + "_" + stream_preset + "_s" + std::to_string(seed);
}

void validate_method_params(const std::string& method,
                            const std::set<std::string>& set_flags) {
  const auto it = kMethodFlags.find(method);
  OCL_CHECK(it != kMethodFlags.end(), ConfigError, "unknown method: " << method);
  for (std::string f : set_flags) {
    // sweep grid axes validate like the parameter they sweep
    if (f.size() > 5 && f.compare(f.size() - 5, 5, "-grid") == 0) {
      f = f.substr(0, f.size() - 5);
    }
    if (kCommonFlags.count(f) || it->second.count(f)) continue;
    OCL_THROW(ConfigError, "flag --" << f << " does not apply to method " << method);
  }
}

std::string resolve_data_dir(const RunConfig& cfg) {
  if (!cfg.data_dir.empty()) return cfg.data_dir;
  if (const char* env = std::getenv("AOS_DATA_DIR"); env && *env) return env;
  return "aos_data";
}

StreamData build_stream_data(const StreamSpec& spec) {
  StreamData d;
  d.spec = spec;
  d.initial = generate_initial_dataset(spec);
  d.stream = generate_stream(spec);
  d.eval = eval_sets(spec);
  return d;
}

// ---- pretraining ------------------------------------------------------------

PretrainResult pretrain(const StreamSpec& spec, const ModelConfig& cfg, int epochs,
                        double lr, uint64_t seed) {
  OCL_CHECK(epochs >= 1, ConfigError, "pretrain: epochs must be >= 1");
  OCL_CHECK(lr > 0.0, ConfigError, "pretrain: lr must be > 0");
  OCL_CHECK(spec.d_i == cfg.d_i && spec.vocab == cfg.vocab, ConfigError,
            "pretrain: stream spec and model config disagree on d_i/vocab");
  const InitialData data = generate_initial_dataset(spec);

  PretrainResult out;
  out.theta0 = init_params(cfg, seed);
  out.F0 = data.F0;
  out.W0 = data.W0;

  Xoshiro256 rng(sub_seed(seed, {fnv1a64("pretrain")}));
  std::vector<int> order(data.train.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);

  for (int epoch = 0; epoch < epochs; ++epoch) {
    // step decay: full rate for 60% of the epochs, then 1/2, then 1/4
    const double frac = static_cast<double>(epoch) / epochs;
    const double epoch_lr = lr * (frac >= 0.85 ? 0.25 : frac >= 0.6 ? 0.5 : 1.0);
    rng.shuffle(order);
    for (size_t at = 0; at < order.size(); at += kPretrainBatch) {
      std::vector<BatchItem> items;
      const size_t end = std::min(order.size(), at + kPretrainBatch);
      for (size_t i = at; i < end; ++i) {
        const Utterance& u = data.train[order[i]];
        items.push_back(BatchItem{&u.frames, &u.targets});
      }
      LossGrad lg;
      try {
        lg = ce_batch_loss(out.theta0, cfg, items, cfg.ctc_weight);
      } catch (const NumericError& e) {
        OCL_THROW(NumericError, "pretrain diverged at epoch " << epoch << ", batch "
                                << at / kPretrainBatch << ": " << e.what());
      }
      out.theta0 = sgd_step(out.theta0, lg.grad, epoch_lr);
    }
  }

  const std::map<int, std::vector<Utterance>> val{{0, data.val}};
  out.val_ter = evaluate(out.theta0, cfg, val, {0}, 0).per_task_error.at(0);
  return out;
}

namespace {

uint64_t theta0_cache_key(const RunConfig& cfg, const StreamSpec& spec) {
  std::ostringstream s;
  s << "v1|" << cfg.model.d_i << '|' << cfg.model.d_h << '|' << cfg.model.n_enc << '|'
    << cfg.model.n_dec << '|' << cfg.model.vocab << '|' << cfg.model.max_len << '|'
    << format_double(cfg.model.ctc_weight) << '|' << spec.seed << '|'
    << format_double(spec.noise_std) << '|' << spec.frame_len_range[0] << '|'
    << spec.frame_len_range[1] << '|' << spec.target_len_range[0] << '|'
    << spec.target_len_range[1] << '|' << spec.utterances_per_task[0] << '|'
    << spec.speakers_per_task[0] << '|'
    << (spec.accent_ids.empty() ? 0 : spec.accent_ids[0]) << '|'
    << spec.eval_utts_per_task << '|' << cfg.pretrain_epochs << '|'
    << format_double(cfg.pretrain_lr);
  return fnv1a64(s.str().c_str());
}

std::string hex64(uint64_t v) {
  char buf[24];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

}  // namespace

PretrainResult pretrain_cached(const RunConfig& cfg, const StreamSpec& spec) {
  const std::string dir = resolve_data_dir(cfg);
  fs::create_directories(dir);
  const std::string base = dir + "/theta0_" + hex64(theta0_cache_key(cfg, spec));

  if (fs::exists(base + ".manifest") && fs::exists(base + ".meta.json")) {
    PretrainResult out;
    BinReader reader(base);
    out.theta0 = load_paramset(reader, "theta0");
    std::ifstream meta(base + ".meta.json");
    json j;
    meta >> j;
    out.F0 = j.at("F0").get<long long>();
    out.W0 = j.at("W0").get<long long>();
    out.val_ter = j.at("val_ter").get<double>();
    return out;
  }

  PretrainResult out = pretrain(spec, cfg.model, cfg.pretrain_epochs, cfg.pretrain_lr,
                                cfg.seed);
  BinWriter w;
  save_paramset(w, "theta0", out.theta0);
  w.write(base);
  json meta{{"F0", out.F0}, {"W0", out.W0}, {"val_ter", out.val_ter}};
  std::ofstream(base + ".meta.json") << meta.dump(2) << '\n';
  return out;
}

// ---- learner factory ----------------------------------------------------------

std::unique_ptr<Learner> make_learner(const RunConfig& cfg, const StreamData& data,
                                      const PretrainResult& pre) {
  cfg.validate();
  const double alpha = cfg.aos.alpha;
  const double c = cfg.model.ctc_weight;
  const uint64_t learner_seed = sub_seed(cfg.seed, {fnv1a64("learner")});

  if (cfg.method == "aos") {
    AosConfig ac = cfg.aos;
    ac.ctc_weight = c;
    return std::make_unique<AosLearner>(pre.theta0, pre.F0, pre.W0, ac, cfg.model);
  }
  if (cfg.method == "ft") {
    return std::make_unique<FtLearner>(pre.theta0, alpha, c, cfg.model);
  }
  if (cfg.method == "er") {
    return std::make_unique<ErLearner>(pre.theta0, alpha, c, cfg.model, cfg.memory,
                                       cfg.weight_er, learner_seed);
  }
  if (cfg.method == "ogem") {
    return std::make_unique<OgemLearner>(pre.theta0, alpha, c, cfg.model, cfg.memory,
                                         cfg.ogem_ref_batch, learner_seed);
  }
  if (cfg.method == "uoe") {
    return std::make_unique<UoeLearner>(pre.theta0, alpha, c, cfg.model);
  }
  if (cfg.method == "ewc") {
    Xoshiro256 rng(sub_seed(cfg.seed, {fnv1a64("fisher")}));
    const int n = static_cast<int>(data.initial.train.size());
    const int take = std::min(kFisherSample, n);
    std::vector<int> idx(n);
    for (int i = 0; i < n; ++i) idx[i] = i;
    std::vector<Utterance> sample;
    sample.reserve(take);
    for (int i = 0; i < take; ++i) {
      const int j = rng.uniform_int(i, n - 1);
      std::swap(idx[i], idx[j]);
      sample.push_back(data.initial.train[idx[i]]);
    }
    Grad fisher = empirical_fisher(pre.theta0, cfg.model, sample, c);
    return std::make_unique<EwcLearner>(pre.theta0, std::move(fisher), cfg.lambda_ewc,
                                        cfg.ewc_gamma, cfg.ewc_every, alpha, c, cfg.model);
  }
  OCL_THROW(ConfigError, "unknown method: " << cfg.method);
}

// ---- json ----------------------------------------------------------------------

json report_to_json(const EvalReport& r) {
  json per_task = json::object();
  for (const auto& [t, e] : r.per_task_error) per_task[std::to_string(t)] = e;
  json j{{"step", r.step}, {"seen", r.seen_tasks}, {"per_task", per_task}, {"awer", r.awer}};
  if (r.forgetting_t0) j["forgetting_t0"] = *r.forgetting_t0;
  if (r.bwt) j["bwt"] = *r.bwt;
  return j;
}

EvalReport report_from_json(const json& j) {
  EvalReport r;
  r.step = j.at("step").get<int>();
  r.seen_tasks = j.at("seen").get<std::vector<int>>();
  for (const auto& [k, v] : j.at("per_task").items())
    r.per_task_error[std::stoi(k)] = v.get<double>();
  r.awer = j.at("awer").get<double>();
  if (j.contains("forgetting_t0")) r.forgetting_t0 = j.at("forgetting_t0").get<double>();
  if (j.contains("bwt")) r.bwt = j.at("bwt").get<double>();
  return r;
}

namespace {

json config_to_json(const RunConfig& cfg) {
  return json{
      {"method", cfg.method},
      {"stream", cfg.stream_preset},
      {"seed", cfg.seed},
      {"eval_every", cfg.eval_every},
      {"model",
       {{"d_i", cfg.model.d_i},
        {"d_h", cfg.model.d_h},
        {"n_enc", cfg.model.n_enc},
        {"n_dec", cfg.model.n_dec},
        {"vocab", cfg.model.vocab},
        {"ctc_weight", cfg.model.ctc_weight},
        {"max_len", cfg.model.max_len}}},
      {"aos",
       {{"tau", cfg.aos.tau},
        {"tau2", cfg.aos.tau2},
        {"lambda", cfg.aos.lambda},
        {"alpha", cfg.aos.alpha}}},
      {"memory", cfg.memory},
      {"weight_er", cfg.weight_er},
      {"ogem_ref_batch", cfg.ogem_ref_batch},
      {"lambda_ewc", cfg.lambda_ewc},
      {"ewc_gamma", cfg.ewc_gamma},
      {"ewc_every", cfg.ewc_every},
      {"pretrain_epochs", cfg.pretrain_epochs},
      {"pretrain_lr", cfg.pretrain_lr},
  };
}

}  // namespace

json record_to_json(const RunRecord& r) {
  json reports = json::array();
  for (const EvalReport& rep : r.reports) reports.push_back(report_to_json(rep));
  json completion = json::object();
  for (const auto& [t, e] : r.completion_errors) completion[std::to_string(t)] = e;
  return json{{"method", r.method},
              {"stream", r.stream_preset},
              {"seed", r.seed},
              {"config", r.config},
              {"column_tasks", r.column_tasks},
              {"initial", report_to_json(r.initial)},
              {"reports", reports},
              {"completion_errors", completion},
              {"status", r.status},
              {"wall_sec", r.wall_sec},
              {"checkpoint", r.checkpoint}};
}

RunRecord record_from_json(const json& j) {
  RunRecord r;
  r.method = j.at("method").get<std::string>();
  r.stream_preset = j.at("stream").get<std::string>();
  r.seed = j.at("seed").get<uint64_t>();
  r.config = j.at("config");
  r.column_tasks = j.at("column_tasks").get<std::vector<int>>();
  r.initial = report_from_json(j.at("initial"));
  for (const auto& rep : j.at("reports")) r.reports.push_back(report_from_json(rep));
  for (const auto& [k, v] : j.at("completion_errors").items())
    r.completion_errors[std::stoi(k)] = v.get<double>();
  r.status = j.at("status").get<std::string>();
  r.wall_sec = j.at("wall_sec").get<double>();
  r.checkpoint = j.at("checkpoint").get<std::string>();
  return r;
}

RunRecord load_record(const std::string& path) {
  std::ifstream in(path);
  OCL_CHECK(in.good(), IoError, "cannot open record " << path);
  json j;
  in >> j;
  return record_from_json(j);
}

const EvalReport& RunRecord::final_report() const {
  return reports.empty() ? initial : reports.back();
}

// ---- run loop -------------------------------------------------------------------

RunRecord run_stream(const RunConfig& cfg, const StreamData& data, Learner& learner) {
  cfg.validate();
  OCL_CHECK(data.spec.d_i == cfg.model.d_i && data.spec.vocab == cfg.model.vocab,
            ConfigError, "run: stream spec and model config disagree on d_i/vocab");

  RunRecord rec;
  rec.method = cfg.method;
  rec.stream_preset = cfg.stream_preset;
  rec.seed = cfg.seed;
  rec.config = config_to_json(cfg);
  rec.column_tasks.push_back(0);
  for (int t : data.spec.task_order) rec.column_tasks.push_back(t);

  std::vector<int> all_tasks;
  for (int t = 0; t < data.spec.n_tasks; ++t) all_tasks.push_back(t);

  const auto t_start = std::chrono::steady_clock::now();
  rec.initial = evaluate(learner.inference_params(), cfg.model, data.eval, all_tasks, 0);

  std::vector<int> seen{0};
  auto do_eval = [&](int step) -> EvalReport& {
    if (!rec.reports.empty() && rec.reports.back().step == step) return rec.reports.back();
    EvalReport r = evaluate(learner.inference_params(), cfg.model, data.eval, seen, step);
    r.forgetting_t0 = r.per_task_error.at(0) - rec.initial.per_task_error.at(0);
    // backward transfer over tasks whose completion error is already on record
    if (!rec.completion_errors.empty()) {
      double acc = 0.0;
      for (const auto& [t, e] : rec.completion_errors) acc += r.per_task_error.at(t) - e;
      r.bwt = -acc / static_cast<double>(rec.completion_errors.size());
    }
    rec.reports.push_back(std::move(r));
    return rec.reports.back();
  };

  int step = 0;
  int prev_task = -1;
  try {
    for (const Batch& b : data.stream) {
      if (prev_task != -1 && b.task_id != prev_task) {
        EvalReport& r = do_eval(step);
        rec.completion_errors[prev_task] = r.per_task_error.at(prev_task);
      }
      if (std::find(seen.begin(), seen.end(), b.task_id) == seen.end()) {
        seen.push_back(b.task_id);
        std::sort(seen.begin(), seen.end());
      }
      learner.step(learner_view(b));
      ++step;
      prev_task = b.task_id;
      if (step % cfg.eval_every == 0) do_eval(step);
    }
    EvalReport& fin = do_eval(step);
    if (prev_task != -1 && !rec.completion_errors.count(prev_task)) {
      rec.completion_errors[prev_task] = fin.per_task_error.at(prev_task);
    }
  } catch (const NumericError& e) {
    rec.status = std::string("failed@step ") + std::to_string(step) + ": " + e.what();
  }
  rec.wall_sec =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
  return rec;
}

void persist_record(const RunConfig& cfg, RunRecord& record, const Learner* learner) {
  OCL_CHECK(!cfg.out_dir.empty(), ConfigError, "persist: no output directory configured");
  const fs::path dir = fs::path(cfg.out_dir) / cfg.run_name();
  fs::create_directories(dir);

  if (learner) {
    Checkpoint ck;
    ck.final_model = learner->inference_params();
    if (const auto* aos = dynamic_cast<const AosLearner*>(learner)) {
      ck.has_adapted = true;
      ck.adapted = aos->state().adapted;
      ck.F_seen = aos->state().F_seen;
      ck.W_seen = aos->state().W_seen;
      ck.step = aos->state().step;
    } else {
      ck.step = record.reports.empty() ? 0 : record.reports.back().step;
    }
    const std::string base = (dir / "checkpoint").string();
    save_checkpoint(base, ck);
    record.checkpoint = base;
  }

  {
    std::ofstream out(dir / "metrics.jsonl");
    OCL_CHECK(out.good(), IoError, "cannot write metrics.jsonl under " << dir);
    out << report_to_json(record.initial).dump() << '\n';
    for (const EvalReport& r : record.reports) out << report_to_json(r).dump() << '\n';
  }
  {
    std::ofstream out(dir / "summary.csv");
    OCL_CHECK(out.good(), IoError, "cannot write summary.csv under " << dir);
    out << "model,memory,tau,lambda,tau2,alpha,seed,stream,status";
    for (int t : record.column_tasks) out << ",err_t" << t;
    out << ",awer\n";
    const EvalReport& fin = record.final_report();
    out << record.method << ',' << cfg.memory << ',' << format_double(cfg.aos.tau) << ','
        << format_double(cfg.aos.lambda) << ',' << format_double(cfg.aos.tau2) << ','
        << format_double(cfg.aos.alpha) << ',' << record.seed << ','
        << record.stream_preset << ',' << record.status;
    for (int t : record.column_tasks) out << ',' << format_double(fin.per_task_error.at(t));
    out << ',' << format_double(fin.awer) << '\n';
  }
  {
    std::ofstream out(dir / "record.json");
    OCL_CHECK(out.good(), IoError, "cannot write record.json under " << dir);
    out << record_to_json(record).dump(2) << '\n';
  }
}

RunRecord run(const RunConfig& cfg) {
  cfg.validate();
  const StreamSpec spec = StreamSpec::preset(cfg.stream_preset, cfg.seed);
  const StreamData data = build_stream_data(spec);
  const PretrainResult pre = pretrain_cached(cfg, spec);
  std::unique_ptr<Learner> learner = make_learner(cfg, data, pre);
  RunRecord rec = run_stream(cfg, data, *learner);
  if (!cfg.out_dir.empty()) persist_record(cfg, rec, learner.get());
  return rec;
}

// ---- sweep ---------------------------------------------------------------------

const SweepEntry& SweepResult::best() const {
  OCL_CHECK(!leaderboard.empty(), ConfigError, "sweep: empty leaderboard");
  return leaderboard.front();
}

namespace {

void apply_point(RunConfig& cfg, const std::map<std::string, double>& point) {
  for (const auto& [key, v] : point) {
    if (key == "tau") {
      cfg.aos.tau = v;
    } else if (key == "tau2") {
      cfg.aos.tau2 = v;
    } else if (key == "lambda") {
      cfg.aos.lambda = v;
    } else if (key == "alpha") {
      cfg.aos.alpha = v;
    } else if (key == "memory") {
      cfg.memory = static_cast<int>(v);
    } else if (key == "weight-er") {
      cfg.weight_er = v;
    } else if (key == "lambda-ewc") {
      cfg.lambda_ewc = v;
    } else if (key == "gamma") {
      cfg.ewc_gamma = v;
    } else if (key == "ogem-ref") {
      cfg.ogem_ref_batch = static_cast<int>(v);
    } else {
      OCL_THROW(ConfigError, "sweep: unknown grid key " << key);
    }
  }
}

std::string point_label(const std::map<std::string, double>& point) {
  std::string s;
  for (const auto& [k, v] : point) {
    if (!s.empty()) s += ' ';
    s += k + "=" + trim_number(v);
  }
  return s.empty() ? "(base)" : s;
}

}  // namespace

SweepResult sweep(const RunConfig& base, const std::map<std::string, std::vector<double>>& grid,
                  double w) {
  OCL_CHECK(!grid.empty(), ConfigError, "sweep: empty grid");
  for (const auto& [k, vals] : grid)
    OCL_CHECK(!vals.empty(), ConfigError, "sweep: empty grid axis " << k);
  {
    std::set<std::string> keys;
    for (const auto& [k, vals] : grid) keys.insert(k);
    validate_method_params(base.method, keys);
  }

  const StreamSpec spec = StreamSpec::preset(base.stream_preset, base.seed);
  OCL_CHECK(spec.n_tasks == 2, ConfigError,
            "sweep: needs the two-task test experiment, got " << spec.n_tasks << " tasks");
  StreamData data = build_stream_data(spec);
  data.eval = validation_sets(spec);  // selection happens on validation, not test
  const PretrainResult pre = pretrain_cached(base, spec);
  const int new_task = spec.task_order[0];

  // cartesian product in key order
  std::vector<std::map<std::string, double>> points{{}};
  for (const auto& [key, vals] : grid) {
    std::vector<std::map<std::string, double>> next;
    for (const auto& p : points)
      for (double v : vals) {
        auto q = p;
        q[key] = v;
        next.push_back(std::move(q));
      }
    points = std::move(next);
  }

  SweepResult result;
  for (const auto& point : points) {
    RunConfig cfg = base;
    apply_point(cfg, point);
    std::unique_ptr<Learner> learner = make_learner(cfg, data, pre);
    const RunRecord rec = run_stream(cfg, data, *learner);
    OCL_CHECK(rec.status == "ok", NumericError,
              "sweep point " << point_label(point) << " failed: " << rec.status);
    SweepEntry e;
    e.point = point;
    e.err_initial = rec.final_report().per_task_error.at(0);
    e.err_new = rec.final_report().per_task_error.at(new_task);
    e.wawer = weighted_awer(e.err_initial, e.err_new, w);
    result.leaderboard.push_back(std::move(e));
  }
  std::stable_sort(result.leaderboard.begin(), result.leaderboard.end(),
                   [](const SweepEntry& a, const SweepEntry& b) {
                     if (a.wawer != b.wawer) return a.wawer < b.wawer;
                     return point_label(a.point) < point_label(b.point);
                   });
  return result;
}

// ---- rendering -----------------------------------------------------------------

namespace {

std::string pct(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.1f", 100.0 * v);
  return buf;
}

void check_same_stream(const std::vector<RunRecord>& records) {
  OCL_CHECK(!records.empty(), ConfigError, "report: no records");
  for (const RunRecord& r : records) {
    OCL_CHECK(r.stream_preset == records[0].stream_preset && r.seed == records[0].seed &&
                  r.column_tasks == records[0].column_tasks,
              ConfigError, "report: records come from mismatched streams");
  }
}

std::string method_label(const RunRecord& r) {
  std::string label = r.method;
  if (r.method == "er" || r.method == "ogem") {
    label += " M=" + r.config.at("memory").dump();
  } else if (r.method == "aos") {
    const auto& a = r.config.at("aos");
    label += " (" + trim_number(a.at("tau").get<double>()) + ", " +
             trim_number(a.at("lambda").get<double>()) + ", " +
             trim_number(a.at("tau2").get<double>()) + ")";
  }
  return label;
}

}  // namespace

std::string render_report_text(const std::vector<RunRecord>& records) {
  check_same_stream(records);
  const std::vector<int>& cols = records[0].column_tasks;

  size_t best = 0;
  for (size_t i = 1; i < records.size(); ++i)
    if (records[i].final_report().awer < records[best].final_report().awer) best = i;

  std::ostringstream out;
  out << "stream " << records[0].stream_preset << ", seed " << records[0].seed
      << " (errors in %)\n";
  char head[64];
  std::snprintf(head, sizeof(head), "%-22s", "model");
  out << head;
  for (int t : cols) {
    std::snprintf(head, sizeof(head), "%8s", ("T" + std::to_string(t)).c_str());
    out << head;
  }
  out << "    AWER\n";

  auto row = [&](const std::string& label, const EvalReport& rep, bool is_best) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%-22s", label.c_str());
    out << buf;
    for (int t : cols) {
      std::snprintf(buf, sizeof(buf), "%8s", pct(rep.per_task_error.at(t)).c_str());
      out << buf;
    }
    std::snprintf(buf, sizeof(buf), "%7s%s", pct(rep.awer).c_str(), is_best ? "*" : "");
    out << buf << '\n';
  };

  row("theta0", records[0].initial, false);
  for (size_t i = 0; i < records.size(); ++i) {
    row(method_label(records[i]), records[i].final_report(), i == best);
  }
  return out.str();
}

std::string render_report_csv(const std::vector<RunRecord>& records) {
  check_same_stream(records);
  const std::vector<int>& cols = records[0].column_tasks;
  std::ostringstream out;
  out << "model,memory,tau,lambda,tau2,seed,stream,status";
  for (int t : cols) out << ",err_t" << t;
  out << ",awer\n";

  auto row = [&](const std::string& model, const RunRecord& r, const EvalReport& rep) {
    const auto& a = r.config.at("aos");
    out << model << ',' << r.config.at("memory").get<int>() << ','
        << format_double(a.at("tau").get<double>()) << ','
        << format_double(a.at("lambda").get<double>()) << ','
        << format_double(a.at("tau2").get<double>()) << ',' << r.seed << ','
        << r.stream_preset << ',' << r.status;
    for (int t : cols) out << ',' << format_double(rep.per_task_error.at(t));
    out << ',' << format_double(rep.awer) << '\n';
  };

  row("theta0", records[0], records[0].initial);
  for (const RunRecord& r : records) row(r.method, r, r.final_report());
  return out.str();
}

std::string render_leaderboard_text(const SweepResult& s) {
  std::ostringstream out;
  out << "weighted AWER leaderboard (initial:new = 2:1 unless overridden)\n";
  for (size_t i = 0; i < s.leaderboard.size(); ++i) {
    const SweepEntry& e = s.leaderboard[i];
    char buf[160];
    std::snprintf(buf, sizeof(buf), "%2zu. %-32s  wawer %6s  initial %6s  new %6s\n", i + 1,
                  point_label(e.point).c_str(), pct(e.wawer).c_str(),
                  pct(e.err_initial).c_str(), pct(e.err_new).c_str());
    out << buf;
  }
  return out.str();
}

std::string render_leaderboard_csv(const SweepResult& s) {
  std::set<std::string> keys;
  for (const SweepEntry& e : s.leaderboard)
    for (const auto& [k, v] : e.point) keys.insert(k);
  std::ostringstream out;
  out << "rank";
  for (const std::string& k : keys) out << ',' << k;
  out << ",wawer,err_initial,err_new\n";
  for (size_t i = 0; i < s.leaderboard.size(); ++i) {
    const SweepEntry& e = s.leaderboard[i];
    out << i + 1;
    for (const std::string& k : keys) {
      out << ',';
      const auto it = e.point.find(k);
      if (it != e.point.end()) out << format_double(it->second);
    }
    out << ',' << format_double(e.wawer) << ',' << format_double(e.err_initial) << ','
        << format_double(e.err_new) << '\n';
  }
  return out.str();
}

}  // namespace ocl
