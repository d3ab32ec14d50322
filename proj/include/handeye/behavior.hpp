#pragma once

#include <array>
#include <vector>

#include "handeye/ballistics.hpp"

namespace handeye {

// Head pose in the room frame. The columns of `orientation` are the head's
// right, up and forward axes expressed in room coordinates.
struct HeadPose {
  Vec3 position{0.0, 1.6, 0.0};
  Eigen::Matrix3d orientation = Eigen::Matrix3d::Identity();

  Vec3 to_head(const Vec3& room_point) const {
    return orientation.transpose() * (room_point - position);
  }
  Vec3 direction_to_head(const Vec3& room_direction) const {
    return orientation.transpose() * room_direction;
  }
};

// Kinesthetic state of the subject, head-centered.
struct MotorState {
  Vec3 paddle_position = Vec3::Zero();  // m
  Vec3 paddle_rotation = Vec3::Zero();  // deg: roll, pitch, yaw
  double gaze_azimuth = 0.0;            // deg
  double gaze_elevation = 0.0;          // deg

  // (gaze_el, gaze_az, paddle_x, paddle_y, paddle_z, roll, pitch, yaw)
  std::array<double, kMotorDims> to_array() const;
  static MotorState from_array(const std::array<double, kMotorDims>& v);
};

struct AgentParams {
  double pursuit_gain_target = 0.95;
  double gaze_lag_ms = 60.0;       // first-order pursuit time constant
  double gaze_noise_sd = 0.15;     // deg, stationary sd of gaze noise
  double gaze_noise_tau_ms = 60.0; // correlation time of gaze noise
  double reach_onset_ms = 250.0;   // after launch
  double reach_noise_sd = 0.14;    // m, endpoint aiming error per axis
  double rotation_noise_sd = 1.5;  // deg
  double paddle_radius = 0.15;     // m
  Vec3 rest_position{0.25, -0.55, 0.25};  // head-centered paddle rest pose
  std::uint64_t rng_seed = 7;

  void validate() const;
  static AgentParams noiseless();
};

struct GazeSample {
  double azimuth = 0.0;
  double elevation = 0.0;
};

struct PaddlePose {
  Vec3 position = Vec3::Zero();  // head-centered
  Vec3 rotation = Vec3::Zero();  // roll, pitch, yaw in degrees
};

struct Trial {
  Trajectory trajectory;
  std::vector<MotorState> motor;
  HeadPose head;
  int subject_id = 0;
  bool caught = false;

  int trial_id() const { return trajectory.trial_id; }
};

// Smooth pursuit. Visible frames drive a first-order lag filter toward the
// ball's head-frame angles. Blank frames (and the reappearance frame itself,
// before the new retinal signal can act) advance gaze by the ball's angular
// displacement scaled by the pursuit gain. Output carries Ornstein-Uhlenbeck
// noise with stationary sd `gaze_noise_sd`.
std::vector<GazeSample> simulate_gaze(const Trajectory& trajectory,
                                      const AgentParams& params,
                                      const HeadPose& head, Rng& rng);

// Minimum-jerk reach from the rest pose, starting at reach_onset_ms and
// ending at arrival, aimed at the arrival point plus Gaussian aiming error.
// The paddle normal faces the incoming ball (opposite its velocity); roll
// follows the lateral reach displacement.
std::vector<PaddlePose> simulate_paddle(const Trajectory& trajectory,
                                        const AgentParams& params,
                                        const HeadPose& head, Rng& rng);

// Normalized minimum-jerk position profile 10t^3 - 15t^4 + 6t^5, t in [0,1].
double minimum_jerk(double tau);
double minimum_jerk_velocity(double tau);

// Unit paddle normal (head frame) for a (roll, pitch, yaw) rotation.
Vec3 paddle_normal(const Vec3& rotation_deg);

// Whether the ball center lies within `paddle_radius` of the paddle center,
// measured in the paddle plane, at the frame where the ball reaches the
// target plane.
bool catch_outcome(const Trial& trial, double paddle_radius);

// Joins a trajectory with simulated gaze and paddle streams. Draws from the
// per-trial stream so trials are independent of generation order.
Trial simulate_trial(const Trajectory& trajectory, const AgentParams& params,
                     const HeadPose& head, int subject_id);

// Per-subject jitter of the population parameters (lag, noise, gain, reach).
AgentParams subject_params(const AgentParams& population, int subject_id,
                           std::uint64_t seed);

}  // namespace handeye
