// aoslab: desk-scale online continual-learning lab.
//
// Subcommands: pretrain, run, sweep, report, export-data.
// Exit codes: 0 success, 2 configuration error, 3 numeric failure.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "ocl/harness.hpp"
#include "ocl/serialize.hpp"

namespace fs = std::filesystem;

namespace {

struct CliOptions {
  ocl::RunConfig cfg;
  std::string out_dir = "runs";
  std::vector<std::string> record_paths;
  std::vector<double> tau_grid, tau2_grid, lambda_grid, lambda_ewc_grid, weight_er_grid;
  double sweep_weight = 2.0;
};

void add_common_flags(CLI::App* cmd, CliOptions& o) {
  cmd->add_option("--seed", o.cfg.seed, "run seed");
  cmd->add_option("--stream", o.cfg.stream_preset, "stream preset: seq1 | seq2 | test");
  cmd->add_option("--out", o.out_dir, "output directory");
  cmd->add_option("--data-dir", o.cfg.data_dir,
                  "dataset/model cache directory (overrides AOS_DATA_DIR)");
  cmd->add_option("--epochs", o.cfg.pretrain_epochs, "initial-task training epochs");
  cmd->add_option("--pretrain-lr", o.cfg.pretrain_lr, "initial-task learning rate");
}

void add_method_flags(CLI::App* cmd, CliOptions& o) {
  cmd->add_option("--method", o.cfg.method, "aos | ft | er | ogem | uoe | ewc");
  cmd->add_option("--tau", o.cfg.aos.tau, "encoder plasticity (>= 1)");
  cmd->add_option("--tau2", o.cfg.aos.tau2, "decoder plasticity (>= 1)");
  cmd->add_option("--lambda", o.cfg.aos.lambda, "distillation weight in [0, 1]");
  cmd->add_option("--alpha", o.cfg.aos.alpha, "SGD learning rate");
  cmd->add_option("--ctc-weight", o.cfg.model.ctc_weight, "CTC loss weight c in [0, 1]");
  cmd->add_option("--memory", o.cfg.memory, "reservoir capacity (er, ogem)");
  cmd->add_option("--weight-er", o.cfg.weight_er, "replay loss weight (er)");
  cmd->add_option("--ogem-ref", o.cfg.ogem_ref_batch, "reference batch size (ogem)");
  cmd->add_option("--lambda-ewc", o.cfg.lambda_ewc, "penalty weight (ewc)");
  cmd->add_option("--gamma", o.cfg.ewc_gamma, "online fisher decay (ewc)");
  cmd->add_option("--ewc-every", o.cfg.ewc_every, "fisher refresh interval (ewc)");
  cmd->add_option("--eval-every", o.cfg.eval_every, "evaluation cadence in batches");
}

std::set<std::string> explicit_flags(const CLI::App* cmd) {
  std::set<std::string> flags;
  for (const CLI::Option* opt : cmd->get_options()) {
    if (opt->count() == 0) continue;
    std::string name = opt->get_name();
    if (name.rfind("--", 0) == 0) name = name.substr(2);
    flags.insert(name);
  }
  return flags;
}

int do_pretrain(const CliOptions& o) {
  const ocl::StreamSpec spec = ocl::StreamSpec::preset(o.cfg.stream_preset, o.cfg.seed);
  const ocl::PretrainResult pre = ocl::pretrain_cached(o.cfg, spec);
  std::printf("theta0 ready: F0=%lld W0=%lld, initial-task validation TER %.2f%%\n",
              pre.F0, pre.W0, 100.0 * pre.val_ter);
  std::printf("cache dir: %s\n", ocl::resolve_data_dir(o.cfg).c_str());
  return 0;
}

int do_run(CliOptions& o) {
  o.cfg.out_dir = o.out_dir;
  const ocl::RunRecord rec = ocl::run(o.cfg);
  const fs::path dir = fs::path(o.out_dir) / o.cfg.run_name();
  std::printf("%s\n", ocl::render_report_text({rec}).c_str());
  std::printf("run dir: %s (status: %s)\n", dir.string().c_str(), rec.status.c_str());
  return rec.status == "ok" ? 0 : 3;
}

int do_sweep(const CliOptions& o) {
  std::map<std::string, std::vector<double>> grid;
  if (!o.tau_grid.empty()) grid["tau"] = o.tau_grid;
  if (!o.tau2_grid.empty()) grid["tau2"] = o.tau2_grid;
  if (!o.lambda_grid.empty()) grid["lambda"] = o.lambda_grid;
  if (!o.lambda_ewc_grid.empty()) grid["lambda-ewc"] = o.lambda_ewc_grid;
  if (!o.weight_er_grid.empty()) grid["weight-er"] = o.weight_er_grid;
  const ocl::SweepResult res = ocl::sweep(o.cfg, grid, o.sweep_weight);
  std::printf("%s", ocl::render_leaderboard_text(res).c_str());
  fs::create_directories(o.out_dir);
  const fs::path csv = fs::path(o.out_dir) / "leaderboard.csv";
  std::ofstream(csv) << ocl::render_leaderboard_csv(res);
  std::printf("leaderboard: %s\n", csv.string().c_str());
  return 0;
}

int do_report(const CliOptions& o) {
  std::vector<ocl::RunRecord> records;
  for (const std::string& p : o.record_paths) records.push_back(ocl::load_record(p));
  std::printf("%s", ocl::render_report_text(records).c_str());
  fs::create_directories(o.out_dir);
  const fs::path csv = fs::path(o.out_dir) / "report.csv";
  std::ofstream(csv) << ocl::render_report_csv(records);
  std::printf("csv: %s\n", csv.string().c_str());
  return 0;
}

int do_export(const CliOptions& o) {
  const ocl::StreamSpec spec = ocl::StreamSpec::preset(o.cfg.stream_preset, o.cfg.seed);
  ocl::DatasetArchive d;
  d.initial = ocl::generate_initial_dataset(spec);
  d.stream = ocl::generate_stream(spec);
  d.eval = ocl::eval_sets(spec);
  fs::create_directories(o.out_dir);
  const std::string base =
      (fs::path(o.out_dir) / ("dataset_" + o.cfg.stream_preset + "_s" +
                              std::to_string(o.cfg.seed)))
          .string();
  ocl::export_dataset(base, d);
  std::printf("dataset archived at %s.bin / %s.manifest\n", base.c_str(), base.c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"desk-scale online continual-learning lab"};
  app.require_subcommand(1);
  CliOptions o;

  CLI::App* cmd_pretrain = app.add_subcommand("pretrain", "train the initial model");
  add_common_flags(cmd_pretrain, o);

  CLI::App* cmd_run = app.add_subcommand("run", "run a learner over the batch stream");
  add_common_flags(cmd_run, o);
  add_method_flags(cmd_run, o);

  CLI::App* cmd_sweep =
      app.add_subcommand("sweep", "grid search on the two-task test experiment");
  add_common_flags(cmd_sweep, o);
  add_method_flags(cmd_sweep, o);
  cmd_sweep->add_option("--tau-grid", o.tau_grid, "tau values")->delimiter(',');
  cmd_sweep->add_option("--tau2-grid", o.tau2_grid, "tau2 values")->delimiter(',');
  cmd_sweep->add_option("--lambda-grid", o.lambda_grid, "lambda values")->delimiter(',');
  cmd_sweep->add_option("--lambda-ewc-grid", o.lambda_ewc_grid, "lambda_ewc values")
      ->delimiter(',');
  cmd_sweep->add_option("--weight-er-grid", o.weight_er_grid, "weight_er values")
      ->delimiter(',');
  cmd_sweep->add_option("--weight", o.sweep_weight, "initial-task weight in the ranking");

  CLI::App* cmd_report = app.add_subcommand("report", "combine run records into a table");
  cmd_report->add_option("records", o.record_paths, "record.json paths")->required();
  cmd_report->add_option("--out", o.out_dir, "output directory");

  CLI::App* cmd_export = app.add_subcommand("export-data", "archive a generated dataset");
  add_common_flags(cmd_export, o);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (cmd_run->parsed() || cmd_sweep->parsed()) {
      ocl::validate_method_params(o.cfg.method, explicit_flags(cmd_run->parsed()
                                                                   ? cmd_run
                                                                   : cmd_sweep));
    }
    if (cmd_pretrain->parsed()) return do_pretrain(o);
    if (cmd_run->parsed()) return do_run(o);
    if (cmd_sweep->parsed()) return do_sweep(o);
    if (cmd_report->parsed()) return do_report(o);
    if (cmd_export->parsed()) return do_export(o);
  } catch (const ocl::ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const ocl::NumericError& e) {
    std::fprintf(stderr, "numeric failure: %s\n", e.what());
    return 3;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
