#include <CLI11.hpp>
#include <cstdint>
#include <exception>
#include <iostream>
#include <string>

#include "coltrack/errors.hpp"
#include "commands.hpp"
#include "pipeline_config.hpp"

namespace {

using coltrack::cli::PipelineConfig;

int exit_code(coltrack::ErrorCategory category) {
  switch (category) {
    case coltrack::ErrorCategory::InvalidInput: return 2;
    case coltrack::ErrorCategory::DegenerateRegistration: return 3;
    case coltrack::ErrorCategory::TrainingDiverged: return 4;
    case coltrack::ErrorCategory::Configuration: return 5;
    case coltrack::ErrorCategory::Io: return 6;
    case coltrack::ErrorCategory::EmptyDataset: return 7;
  }
  return 1;
}

struct Options {
  std::string config_path;
  std::string out_dir;
  std::string estimator;
  std::uint64_t seed = 0;
  bool seed_set = false;
  int epochs = 0;
  bool epochs_set = false;
  int threads = -1;
  double noise_mm = -1.0;
  bool noise_set = false;
  int frame_count = 0;
  int train_runs = -1;
  int eval_runs = -1;
};

void add_common(CLI::App* cmd, Options& opts) {
  cmd->add_option("--config", opts.config_path, "Pipeline config JSON file");
  cmd->add_option("--out", opts.out_dir, "Output directory (overrides config)");
  cmd->add_option("--seed", opts.seed, "Master seed (overrides config)")
      ->each([&opts](const std::string&) { opts.seed_set = true; });
}

PipelineConfig resolve(const Options& opts) {
  PipelineConfig config = opts.config_path.empty()
                              ? coltrack::cli::default_config()
                              : coltrack::cli::load_config(opts.config_path);
  if (!opts.out_dir.empty()) config.out_dir = opts.out_dir;
  if (opts.seed_set) config.seed = opts.seed;
  if (!opts.estimator.empty()) config.estimator = opts.estimator;
  if (opts.epochs_set) config.train.epochs = opts.epochs;
  if (opts.threads >= 0) config.train.threads = opts.threads;
  if (opts.noise_set) config.noise_mm = opts.noise_mm;
  if (opts.frame_count > 0) config.frame_count = opts.frame_count;
  if (opts.train_runs >= 0) config.train_runs = opts.train_runs;
  if (opts.eval_runs >= 0) config.eval_runs = opts.eval_runs;
  return config;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Deformation-aware colonoscope tracking pipeline"};
  app.require_subcommand(1);

  Options opts;

  CLI::App* simulate = app.add_subcommand(
      "simulate", "Generate the synthetic colon, markers and sequences");
  add_common(simulate, opts);
  simulate->add_option("--noise-mm", opts.noise_mm, "Sensor noise sigma, mm")
      ->each([&opts](const std::string&) { opts.noise_set = true; });
  simulate->add_option("--frames", opts.frame_count, "Frames per sequence");
  simulate->add_option("--train-runs", opts.train_runs,
                       "Number of training sequences");
  simulate->add_option("--eval-runs", opts.eval_runs,
                       "Number of evaluation sequences");

  CLI::App* train = app.add_subcommand(
      "train", "Train the shape estimation network on the training sequences");
  add_common(train, opts);
  train->add_option("--epochs", opts.epochs, "Training epochs")
      ->each([&opts](const std::string&) { opts.epochs_set = true; });
  train->add_option("--threads", opts.threads,
                    "Worker threads (0 = hardware concurrency)");

  CLI::App* track = app.add_subcommand(
      "track", "Run the tracker over the evaluation sequences");
  add_common(track, opts);
  track->add_option("--estimator", opts.estimator,
                    "Shape estimator: sen, rigid or oracle");

  CLI::App* eval = app.add_subcommand(
      "eval", "Compute marker tracking errors and the aggregate report");
  add_common(eval, opts);
  eval->add_option("--estimator", opts.estimator,
                   "Estimator whose estimates to evaluate");

  CLI::App* report = app.add_subcommand(
      "report", "Render an existing report as CSV and a table");
  add_common(report, opts);
  report->add_option("--estimator", opts.estimator,
                     "Estimator whose report to render");

  CLI11_PARSE(app, argc, argv);

  try {
    const PipelineConfig config = resolve(opts);
    if (simulate->parsed()) coltrack::cli::cmd_simulate(config);
    if (train->parsed()) coltrack::cli::cmd_train(config);
    if (track->parsed()) coltrack::cli::cmd_track(config);
    if (eval->parsed()) coltrack::cli::cmd_eval(config);
    if (report->parsed()) coltrack::cli::cmd_report(config);
  } catch (const coltrack::Error& e) {
    std::cerr << "error:" << coltrack::to_string(e.category()) << ": "
              << e.what() << "\n";
    return exit_code(e.category());
  } catch (const std::exception& e) {
    std::cerr << "error:internal: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
