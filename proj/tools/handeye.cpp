#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "handeye/io.hpp"
#include "handeye/pipeline.hpp"

namespace {

enum ExitCode { kOk = 0, kUsage = 1, kDataError = 2, kDiverged = 3 };

}  // namespace

int main(int argc, char** argv) {
  handeye::RunConfig config;
  std::vector<double> integration = config.integration_ms;
  std::string horizons;

  CLI::App app{"Synthetic hand-eye prediction pipeline"};
  app.fallthrough();
  app.require_subcommand(1);
  app.add_option("--seed", config.seed, "Master seed for every randomized stage")
      ->capture_default_str();
  app.add_option("--out", config.out_dir, "Workspace directory")->capture_default_str();
  app.add_option("--subjects", config.subjects, "Simulated subjects")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  app.add_option("--trials-per-subject", config.trials_per_subject, "Trials per subject")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  app.add_option("--integration-ms", integration, "Integration durations (ms)")
      ->delimiter(',')
      ->capture_default_str();
  app.add_option("--horizons", horizons, "Comma-separated horizons in frames (1..37)");
  app.add_flag("--desk-mode", config.desk_mode,
               "Train horizons 1,19,37 for at most 200 epochs");
  app.add_option("--epochs-cap", config.epochs_cap, "Upper bound on training epochs")
      ->check(CLI::NonNegativeNumber);
  app.add_option("--ridge-lambda", config.ridge_lambda, "Ridge penalty of the linear baseline")
      ->check(CLI::NonNegativeNumber)
      ->capture_default_str();
  app.add_flag("--noiseless", config.noiseless, "Simulate a noise-free agent");
  app.add_option("--workers", config.workers, "Training threads (0: hardware concurrency)")
      ->check(CLI::NonNegativeNumber);

  auto* simulate = app.add_subcommand("simulate", "Simulate trials per subject");
  auto* featurize = app.add_subcommand("featurize", "Extract features, split and normalize");
  auto* train = app.add_subcommand("train", "Train LSTM ensembles and baselines");
  auto* evaluate = app.add_subcommand("evaluate", "Write test-set error curves");
  auto* ablate = app.add_subcommand("ablate", "Write feature ablation matrices");
  auto* report = app.add_subcommand("report", "Curves, ablations and behavioral summary");
  auto* pipeline = app.add_subcommand("pipeline", "simulate, featurize, train and report");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  try {
    config.integration_ms = integration;
    if (!horizons.empty()) config.horizons = handeye::parse_int_list(horizons);
    if (*simulate) handeye::cmd_simulate(config);
    if (*featurize) handeye::cmd_featurize(config);
    if (*train) handeye::cmd_train(config);
    if (*evaluate) handeye::cmd_evaluate(config);
    if (*ablate) handeye::cmd_ablate(config);
    if (*report) handeye::cmd_report(config);
    if (*pipeline) handeye::run_pipeline(config);
  } catch (const handeye::TrainingDiverged& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kDiverged;
  } catch (const handeye::InvalidArgument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const handeye::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kDataError;
  }
  return kOk;
}
