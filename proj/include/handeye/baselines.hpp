#pragma once

#include <map>
#include <span>
#include <string>
#include <vector>

#include "handeye/predictor.hpp"

namespace handeye {

// Ridge regression from a flattened window (oldest frame first) plus a
// trailing bias column to the motor state at one horizon.
struct LinearPredictor {
  int horizon_frames = 0;
  int window_length = 0;
  double ridge_lambda = 0.0;
  Eigen::MatrixXd weights;  // 8 x (L*16 + 1), bias in the last column

  Eigen::VectorXd predict(const Eigen::MatrixXd& window) const;
};

// Row-major flattening of an L x 16 window with a trailing 1.
Eigen::VectorXd flatten_window(const Eigen::MatrixXd& window);

// Minimizes ||XW - Y||^2 + lambda ||W||^2 by the normal equations; the bias
// column is not penalized. Throws IllConditioned when the normal matrix is
// numerically singular.
LinearPredictor fit_linear(std::span<const WindowSample> windows, int horizon_frames,
                           double ridge_lambda);

inline Eigen::VectorXd predict_linear(const LinearPredictor& p, const WindowSample& w) {
  return p.predict(w.input);
}

class LinearBaseline : public HorizonPredictor {
 public:
  LinearBaseline() = default;
  LinearBaseline(double integration_ms, std::vector<LinearPredictor> predictors);

  std::string label() const override;
  double integration_ms() const override { return integration_ms_; }
  std::vector<int> horizons() const override;
  Eigen::MatrixXd predict_batch(std::span<const WindowSample> windows,
                                int horizon_frames) const override;

  const LinearPredictor& at(int horizon_frames) const;

  // manifest.txt plus linear_XX.csv (8 rows of weights) per horizon.
  void save(const std::string& directory) const;
  static LinearBaseline load(const std::string& directory);

 private:
  double integration_ms_ = 0.0;
  std::vector<LinearPredictor> predictors_;
};

// Fits one ridge predictor per horizon on the training trials.
LinearBaseline fit_linear_baseline(std::span<const FeaturizedTrial> trials,
                                   const Normalizer& normalizer, double integration_ms,
                                   std::span<const int> horizons, double ridge_lambda);

struct MeanBand {
  Eigen::VectorXd mean;  // 8
  Eigen::VectorXd sd;    // 8, population
};

// Per-horizon training-set mean of the motor state, ignoring the input.
class MeanPredictor : public HorizonPredictor {
 public:
  MeanPredictor() = default;
  explicit MeanPredictor(std::map<int, MeanBand> bands) : bands_(std::move(bands)) {}

  std::string label() const override { return "per_frame_mean"; }
  // The mean ignores its input; the shortest window is enough.
  double integration_ms() const override { return kFrameMs; }
  std::vector<int> horizons() const override;
  Eigen::MatrixXd predict_batch(std::span<const WindowSample> windows,
                                int horizon_frames) const override;

  const MeanBand& band(int horizon_frames) const;

  // mean.csv: horizon_frames, 8 means, 8 sds.
  void save(const std::string& directory) const;
  static MeanPredictor load(const std::string& directory);

 private:
  std::map<int, MeanBand> bands_;
};

// `targets` maps a horizon to an N x 8 matrix of motor states.
MeanPredictor fit_mean(const std::map<int, Eigen::MatrixXd>& targets);

inline MeanBand mean_band(const MeanPredictor& p, int horizon_frames) {
  return p.band(horizon_frames);
}

// Normalized training targets per horizon.
MeanPredictor fit_mean_baseline(std::span<const FeaturizedTrial> trials,
                                const Normalizer& normalizer, std::span<const int> horizons);

}  // namespace handeye
