#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "handeye/baselines.hpp"
#include "handeye/predictor.hpp"

namespace handeye {

struct ErrorCurve {
  std::string label;
  std::string output_component = "aggregate";  // or one of kMotorNames
  std::vector<double> horizon_ms;
  std::vector<double> value;
  std::vector<double> dispersion;

  // Delimited text: horizon_ms,value,dispersion,label,component
  void write(const std::string& path) const;
};

// Test-set MSE in normalized space per horizon; dispersion is the population
// sd across trials of the per-trial MSE.
ErrorCurve mse_by_distance(const HorizonPredictor& predictor,
                           std::span<const FeaturizedTrial> test,
                           const Normalizer& normalizer);

// Per-output RMSE in physical units (deg for gaze and rotation, m for
// paddle position); dispersion is the sd across trials of |error|.
std::vector<ErrorCurve> rmse_components(const HorizonPredictor& predictor,
                                        std::span<const FeaturizedTrial> test,
                                        const Normalizer& normalizer);

// The mean predictor's sd band in physical units, one curve per output.
std::vector<ErrorCurve> mean_sd_band(const MeanPredictor& mean, const Normalizer& normalizer);

// Paddle-position curves rescaled from meters to centimeters.
ErrorCurve to_centimeters(const ErrorCurve& curve);

// Gaze sweep over the blank (last visible frame to last blank frame),
// projected onto the ball's sweep and divided by its length. Empty when the
// ball does not move.
std::optional<double> displacement_ratio(const FeaturizedTrial& trial);

// Gaze angular velocity projected on ball angular velocity at the
// reappearance frame (backward differences). Empty when the ball is still.
std::optional<double> pursuit_gain(const FeaturizedTrial& trial);

// Ball angular speed (deg/s) at the reappearance frame.
double reappearance_speed(const FeaturizedTrial& trial);

struct BehaviorSummary {
  int trials = 0;
  double catch_rate = 0.0;
  double displacement_ratio_mean = 0.0;
  double displacement_ratio_sd = 0.0;
  double pursuit_gain_mean = 0.0;
  double pursuit_gain_sd = 0.0;
  double reappearance_speed_mean = 0.0;
  double reappearance_speed_sd = 0.0;
};

BehaviorSummary summarize_behavior(std::span<const FeaturizedTrial> trials);

// Replaces input column `feature_index` of every (physical-unit) window with
// the normalizer's training mean. Outputs are untouched.
std::vector<WindowSample> ablate_feature(std::span<const WindowSample> windows,
                                         int feature_index, const Normalizer& normalizer);

struct AblationMatrix {
  double integration_ms = 0.0;
  double horizon_ms = 0.0;
  int horizon_frames = 0;
  // Mean absolute error increase (normalized units), floored at zero.
  Eigen::Matrix<double, kFeatureDims, kMotorDims> raw_increase =
      Eigen::Matrix<double, kFeatureDims, kMotorDims>::Zero();
  // raw_increase divided by its column maximum.
  Eigen::Matrix<double, kFeatureDims, kMotorDims> values =
      Eigen::Matrix<double, kFeatureDims, kMotorDims>::Zero();
  Eigen::Matrix<double, 1, kMotorDims> baseline_error =
      Eigen::Matrix<double, 1, kMotorDims>::Zero();

  // Grid with a header row of output names and one row per input feature.
  void write(const std::string& path) const;
};

std::vector<AblationMatrix> ablation_matrix(const HorizonPredictor& predictor,
                                            std::span<const FeaturizedTrial> test,
                                            const Normalizer& normalizer,
                                            std::span<const int> horizons);

// Horizon in frames nearest to a duration in ms (13 -> 1, 267 -> 20, 467 -> 35).
int horizon_frames_for_ms(double ms);

}  // namespace handeye
