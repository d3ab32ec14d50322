#pragma once

#include <string>
#include <vector>

#include "handeye/analysis.hpp"
#include "handeye/ballistics.hpp"
#include "handeye/behavior.hpp"
#include "handeye/ensemble.hpp"

namespace handeye {

// Everything a subcommand needs. Every randomized stage derives its stream
// from `seed`, and each stage's manifest records the values it used.
struct RunConfig {
  std::string out_dir = "handeye_run";
  std::uint64_t seed = 2024;
  int subjects = 10;
  int trials_per_subject = 135;
  std::vector<double> integration_ms = {27.0, 53.0, 200.0, 600.0};
  std::vector<int> horizons;  // empty: all 37, or 1,19,37 in desk mode
  std::vector<double> ablation_ms = {13.0, 267.0, 467.0};
  bool desk_mode = false;
  int epochs_cap = 0;  // 0: no extra cap
  double ridge_lambda = 1e-6;
  bool noiseless = false;
  int workers = 0;
  Hyperparameters hyper;
  TrajectoryConfig trajectory;
  AgentParams agent;

  // Horizons, epochs and learning rate after desk-mode and cap adjustments.
  std::vector<int> effective_horizons() const;
  Hyperparameters effective_hyper() const;
  AgentParams population_agent() const;
};

// Desk mode trains three horizons for at most 200 epochs, with smaller
// batches and a higher learning rate so the short budget still converges.
inline constexpr int kDeskEpochCap = 200;
inline constexpr int kDeskBatchSize = 8;
inline constexpr double kDeskLearningRate = 3e-3;

// --- datasets --------------------------------------------------------------

// subjects x trials_per_subject trials; trial ids are 0-based and contiguous
// per subject, subject ids start at 1.
std::vector<Trial> simulate_population(const RunConfig& config);

void write_trials_csv(const std::string& path, std::span<const Trial> trials);
std::vector<Trial> read_trials_csv(const std::string& path, const TrajectoryConfig& config);

std::vector<FeaturizedTrial> featurize_all(std::span<const Trial> trials, double ball_radius);

// Per-frame rows: bookkeeping, 16 inputs, 8 motor targets.
void write_features_csv(const std::string& path, std::span<const FeaturizedTrial> trials);
std::vector<FeaturizedTrial> read_features_csv(const std::string& path);

// --- workspace layout --------------------------------------------------------

struct Workspace {
  std::string root;

  std::string trials_dir() const;
  std::string features_dir() const;
  std::string features_csv() const;
  std::string normalizer_txt() const;
  std::string models_dir() const;
  std::string lstm_dir(double integration_ms) const;
  std::string linear_dir(double integration_ms) const;
  std::string mean_dir() const;
  std::string report_dir() const;
};

std::string integration_tag(double integration_ms);

// --- subcommands ---------------------------------------------------------------

void cmd_simulate(const RunConfig& config);
void cmd_featurize(const RunConfig& config);
void cmd_train(const RunConfig& config);
void cmd_evaluate(const RunConfig& config);
void cmd_ablate(const RunConfig& config);
void cmd_report(const RunConfig& config);
// simulate -> featurize -> train -> report
void run_pipeline(const RunConfig& config);

// Loads the featurized dataset and normalizer written by cmd_featurize.
struct LoadedDataset {
  std::vector<FeaturizedTrial> trials;
  Normalizer normalizer;
  std::vector<FeaturizedTrial> test() const;
};
LoadedDataset load_dataset(const Workspace& ws);

}  // namespace handeye
