#pragma once

#include <map>
#include <span>
#include <string>
#include <vector>

#include "handeye/features.hpp"
#include "handeye/lstm.hpp"
#include "handeye/predictor.hpp"

namespace handeye {

struct Hyperparameters {
  int batch_size = 128;
  int max_epochs = 2000;
  int patience = 100;
  double learning_rate = 1e-4;
  double clip_norm = 0.0;  // 0 disables clipping
  int hidden_units = kHiddenUnits;

  void validate() const;
};

// All horizons of a full model: 1..37 frames (13.33 ms .. 493.33 ms).
std::vector<int> all_horizons();

struct ModelSpec {
  double integration_ms = 27.0;
  std::vector<int> horizons = all_horizons();
  Hyperparameters hyper;
  std::uint64_t seed = 1;

  int window_length() const { return handeye::window_length(integration_ms); }
  // Horizons must be strictly increasing within 1..37.
  void validate() const;
};

struct TrainingHistory {
  std::vector<double> train_loss;  // one entry per completed epoch
  std::vector<double> val_loss;
  double initial_val_loss = 0.0;   // before the first update
  int best_epoch = 0;              // 1-based; 0 when no epoch ran
  int stop_epoch = 0;

  double best_val_loss() const;
};

struct Subnetwork {
  int horizon_frames = 0;
  LstmParams params;
  TrainingHistory history;
};

// Trial-level random split at 68/12/20. Validation and test counts round to
// nearest with ties going to train; train takes the remainder.
struct SplitCounts {
  int train = 0;
  int validation = 0;
  int test = 0;
};
SplitCounts split_counts(int trials);

// Assigns a partition to every trial, deterministically per seed. Throws
// InvalidArgument for fewer than 10 trials.
void split_dataset(std::span<FeaturizedTrial> trials, std::uint64_t seed);

// Stacks windows into a time-major batch plus an O x B target matrix.
SequenceBatch make_sequence_batch(std::span<const WindowSample> windows,
                                  std::span<const std::size_t> order);
Eigen::MatrixXd make_target_batch(std::span<const WindowSample> windows,
                                  std::span<const std::size_t> order);

// Mini-batch Adam with per-epoch shuffling and early stopping on validation
// MSE. Returns the parameters of the best validation epoch. Windows must be
// normalized and tagged train / validation respectively.
Subnetwork train_subnetwork(std::span<const WindowSample> train,
                            std::span<const WindowSample> validation,
                            int horizon_frames, const Hyperparameters& hyper,
                            std::uint64_t seed);

class TrainedModel : public HorizonPredictor {
 public:
  TrainedModel() = default;
  TrainedModel(ModelSpec spec, Normalizer normalizer, std::vector<Subnetwork> subnetworks);

  const ModelSpec& spec() const { return spec_; }
  const Normalizer& normalizer() const { return normalizer_; }
  const std::vector<Subnetwork>& subnetworks() const { return subnetworks_; }
  const Subnetwork& subnetwork(int horizon_frames) const;

  std::string label() const override;
  double integration_ms() const override { return spec_.integration_ms; }
  std::vector<int> horizons() const override { return spec_.horizons; }
  Eigen::MatrixXd predict_batch(std::span<const WindowSample> windows,
                                int horizon_frames) const override;

  // Directory layout: manifest.txt, normalizer.txt, subnet_XX.bin and
  // history_XX.csv per horizon.
  void save(const std::string& directory) const;
  static TrainedModel load(const std::string& directory);

 private:
  ModelSpec spec_;
  Normalizer normalizer_;
  std::vector<Subnetwork> subnetworks_;
};

// Trains every horizon of `spec` independently over `workers` threads.
// Trials must already carry partitions.
TrainedModel train_model(const ModelSpec& spec, std::span<const FeaturizedTrial> trials,
                         const Normalizer& normalizer, int workers = 0);

// Predicted motor states in physical units, one row per model horizon, from
// the single window ending at blank onset.
Eigen::MatrixXd predict_blank(const TrainedModel& model, const FeaturizedTrial& trial);

}  // namespace handeye
