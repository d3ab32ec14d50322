#pragma once

#include <vector>

#include "handeye/common.hpp"

namespace handeye {

// Launch geometry and blanking schedule for one block of virtual throws.
// Room frame: X right, Y up (against gravity), Z forward from the subject
// toward the launch plane.
struct TrajectoryConfig {
  double launch_plane_width = 6.0;   // m, centered on X = 0
  double launch_plane_height = 1.5;  // m
  double launch_plane_bottom = 1.0;  // m, height of the plane's lower edge
  double launch_distance = 3.5;      // m along +Z
  double target_plane_side = 1.0;    // m
  double target_plane_center_height = 1.3;  // m, subject chest height
  double target_plane_distance = 0.5;       // m along +Z, arm's reach
  double gravity = 9.81;                    // m/s^2, acts along -Y
  double frame_rate = kFrameRateHz;
  std::vector<double> pre_blank_options = {600.0, 800.0, 1000.0};
  double blank_duration = 500.0;
  std::vector<double> post_blank_options = {300.0, 400.0, 500.0};
  double ball_radius = 0.03;
  Vec3 head_position{0.0, 1.6, 0.0};
  std::uint64_t rng_seed = 1;

  double frame_ms() const { return 1000.0 / frame_rate; }
  Vec3 gravity_vector() const { return {0.0, -gravity, 0.0}; }

  // Throws InvalidArgument describing the first violated constraint.
  void validate() const;
};

struct BallFrame {
  double time_ms = 0.0;  // since launch
  Vec3 position = Vec3::Zero();
  Vec3 velocity = Vec3::Zero();
  bool visible = true;
};

struct Trajectory {
  int trial_id = 0;
  std::vector<BallFrame> frames;
  double pre_blank_ms = 0.0;
  double blank_ms = 0.0;
  double post_blank_ms = 0.0;
  Vec3 launch_point = Vec3::Zero();
  Vec3 arrival_point = Vec3::Zero();
  Vec3 launch_velocity = Vec3::Zero();

  double flight_ms() const { return pre_blank_ms + blank_ms + post_blank_ms; }
  // First invisible frame. Throws MalformedTrial when there is no blank.
  int blank_onset() const;
  // First visible frame after the blank.
  int reappearance() const;
};

// Initial velocity carrying a projectile from `launch` to `target` in
// `flight_time_s` seconds under constant acceleration `gravity`.
Vec3 solve_ballistic(const Vec3& launch, const Vec3& target,
                     double flight_time_s, const Vec3& gravity);

// Per-frame visibility flags: visible, blank, visible.
//
// The total frame count is round(total / interval) and the pre-blank count
// is round(pre / interval). The blank count rounds half down, so a 500 ms
// blank at 75 Hz spans 37 frames (37.5 -> 37) and prediction horizons end
// at 493.33 ms. Post-blank takes the remainder.
std::vector<bool> blanking_schedule(double pre_blank_ms, double blank_ms,
                                    double post_blank_ms, double frame_rate);

// Frame timestamps are uniformly spaced and the final frame lands exactly on
// the arrival time, so the last sample coincides with `arrival_point`.
Trajectory sample_trajectory(const TrajectoryConfig& config, Rng& rng,
                             int trial_id);

// Ball state at `t_s` seconds after launch.
Vec3 ballistic_position(const Vec3& launch, const Vec3& velocity,
                        const Vec3& gravity, double t_s);

}  // namespace handeye
