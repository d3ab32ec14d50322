#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "handeye/behavior.hpp"

namespace handeye {

struct Angles {
  double azimuth = 0.0;    // deg, positive to the right
  double elevation = 0.0;  // deg, positive up
};

// Head-frame direction of a point: azimuth = atan2(x, z),
// elevation = atan2(y, hypot(x, z)). Throws DegenerateGeometry at the origin.
Angles ball_angles(const Vec3& head_position);

// Inverse of ball_angles at a known Euclidean distance.
Vec3 point_from_angles(const Angles& angles, double distance);

// Visual angle subtended by a sphere: 2 atan(radius / depth), degrees.
double angular_size(double ball_radius, double depth);

// Optical tau, angle / expansion rate. Empty when the rate is zero.
std::optional<double> optical_tau(double angle_deg, double expansion_rate_deg_s);

// One 16-dimensional input frame: the motor block (MotorState ordering)
// followed by the optical block.
struct FeatureFrame {
  std::array<double, kMotorDims> motor{};
  // az, el, az rate, el rate, depth, depth rate, angular size, expansion rate
  std::array<double, kOpticalDims> optical{};

  Eigen::Matrix<double, kFeatureDims, 1> to_vector() const;
};

// Rates use backward differences between frames k-1 and k; frame 0 rates
// are zero. Depth is the Euclidean ball distance from the head.
std::vector<FeatureFrame> extract_features(const Trial& trial, double ball_radius);

// Stacks frames as rows (frames x 16).
Eigen::MatrixXd feature_matrix(std::span<const FeatureFrame> frames);

enum class Partition { kUnassigned, kTrain, kValidation, kTest };
std::string_view partition_name(Partition p);
Partition parse_partition(std::string_view name);

// A trial reduced to what the models consume.
struct FeaturizedTrial {
  int trial_id = 0;
  int subject_id = 0;
  bool caught = false;
  int blank_onset = 0;    // first invisible frame
  int reappearance = 0;   // first visible frame after the blank
  Partition partition = Partition::kUnassigned;
  Eigen::MatrixXd features;  // frames x 16, physical units

  int last_visible() const { return blank_onset - 1; }
};

FeaturizedTrial featurize_trial(const Trial& trial, double ball_radius);

// Per-column z-scoring with population standard deviation.
class Normalizer {
 public:
  static constexpr double kSdFloor = 1e-8;

  Normalizer() = default;
  Normalizer(Eigen::VectorXd mean, Eigen::VectorXd sd, std::string computed_from);

  const Eigen::VectorXd& mean() const { return mean_; }
  const Eigen::VectorXd& sd() const { return sd_; }
  const std::string& computed_from() const { return computed_from_; }
  // Columns whose spread fell below the floor during fitting.
  const std::vector<int>& floored_columns() const { return floored_; }
  Eigen::Index dims() const { return mean_.size(); }

  // Rows are frames.
  Eigen::MatrixXd apply(const Eigen::MatrixXd& frames) const;
  Eigen::MatrixXd invert(const Eigen::MatrixXd& frames) const;
  // Motor-block helpers for targets and predictions (first 8 columns).
  Eigen::VectorXd apply_motor(const Eigen::VectorXd& motor_state) const;
  Eigen::VectorXd invert_motor(const Eigen::VectorXd& normalized) const;

  void write(const std::string& path) const;
  static Normalizer read(const std::string& path);

 private:
  friend Normalizer fit_normalizer(const Eigen::MatrixXd&, std::string);
  Eigen::VectorXd mean_;
  Eigen::VectorXd sd_;
  std::string computed_from_;
  std::vector<int> floored_;
};

// Needs at least two rows. Emits a warning on stderr for each floored column.
Normalizer fit_normalizer(const Eigen::MatrixXd& frames,
                          std::string computed_from = "train");

// Fits on the rows of every training-partition trial.
Normalizer fit_normalizer(std::span<const FeaturizedTrial> trials);

inline Eigen::MatrixXd apply_normalizer(const Normalizer& n,
                                        const Eigen::MatrixXd& frames) {
  return n.apply(frames);
}

// Integration window in frames for a duration in ms: round(I / 13.33), >= 1.
int window_length(double integration_ms);

struct WindowSample {
  Eigen::MatrixXd input;   // L x 16, oldest frame first
  Eigen::VectorXd target;  // motor state at blank onset + horizon
  int trial_id = 0;
  double integration_ms = 0.0;
  int horizon_frames = 0;
  Partition partition = Partition::kUnassigned;

  double horizon_ms() const { return horizon_frames * kFrameMs; }
};

// One sample per trial. The window ends on the last visible frame; the target
// lies `horizon_frames` later, strictly inside the blank.
std::vector<WindowSample> window_dataset(std::span<const FeaturizedTrial> trials,
                                         double integration_ms, int horizon_frames);

// Normalized copies (inputs z-scored, targets z-scored by the motor block).
std::vector<WindowSample> normalize_windows(std::span<const WindowSample> windows,
                                            const Normalizer& normalizer);

}  // namespace handeye
