#include "handeye/ballistics.hpp"

#include <cmath>
#include <string>

namespace handeye {

namespace {

// Durations within 0.1% of one frame interval count as one frame so that the
// truncated "13.33 ms" spelling of the interval is accepted.
constexpr double kFrameTolerance = 1e-3;

int round_half_down(double x) { return static_cast<int>(std::ceil(x - 0.5)); }

void require_frame(double duration_ms, double interval_ms, const char* what) {
  if (!(duration_ms >= interval_ms * (1.0 - kFrameTolerance))) {
    throw InvalidArgument(std::string(what) + " duration " +
                          std::to_string(duration_ms) +
                          " ms is shorter than one frame (" +
                          std::to_string(interval_ms) + " ms)");
  }
}

}  // namespace

void TrajectoryConfig::validate() const {
  auto positive = [](double v, const char* name) {
    if (!(v > 0.0) || !std::isfinite(v)) {
      throw InvalidArgument(std::string(name) + " must be positive");
    }
  };
  positive(launch_plane_width, "launch_plane_width");
  positive(launch_plane_height, "launch_plane_height");
  positive(launch_distance, "launch_distance");
  positive(target_plane_side, "target_plane_side");
  positive(target_plane_distance, "target_plane_distance");
  positive(frame_rate, "frame_rate");
  positive(ball_radius, "ball_radius");
  if (gravity < 0.0) throw InvalidArgument("gravity must be non-negative");
  if (target_plane_distance >= launch_distance) {
    throw InvalidArgument("target plane must lie between subject and launch plane");
  }
  if (pre_blank_options.empty() || post_blank_options.empty()) {
    throw InvalidArgument("pre/post blank option sets must be nonempty");
  }
  const double interval = frame_ms();
  require_frame(blank_duration, interval, "blank");
  for (double pre : pre_blank_options) require_frame(pre, interval, "pre-blank");
  for (double post : post_blank_options) {
    require_frame(post, interval, "post-blank");
  }
}

int Trajectory::blank_onset() const {
  for (std::size_t k = 0; k < frames.size(); ++k) {
    if (!frames[k].visible) return static_cast<int>(k);
  }
  throw MalformedTrial("trajectory " + std::to_string(trial_id) +
                       " has no blank span");
}

int Trajectory::reappearance() const {
  const auto onset = static_cast<std::size_t>(blank_onset());
  for (std::size_t k = onset; k < frames.size(); ++k) {
    if (frames[k].visible) return static_cast<int>(k);
  }
  throw MalformedTrial("trajectory " + std::to_string(trial_id) +
                       " never reappears after the blank");
}

Vec3 solve_ballistic(const Vec3& launch, const Vec3& target,
                     double flight_time_s, const Vec3& gravity) {
  if (!(flight_time_s > 0.0)) {
    throw InvalidArgument("flight_time must be positive, got " +
                          std::to_string(flight_time_s));
  }
  return (target - launch - 0.5 * gravity * flight_time_s * flight_time_s) /
         flight_time_s;
}

Vec3 ballistic_position(const Vec3& launch, const Vec3& velocity,
                        const Vec3& gravity, double t_s) {
  return launch + velocity * t_s + 0.5 * gravity * t_s * t_s;
}

std::vector<bool> blanking_schedule(double pre_blank_ms, double blank_ms,
                                    double post_blank_ms, double frame_rate) {
  if (!(frame_rate > 0.0)) throw InvalidArgument("frame_rate must be positive");
  const double interval = 1000.0 / frame_rate;
  require_frame(pre_blank_ms, interval, "pre-blank");
  require_frame(blank_ms, interval, "blank");
  require_frame(post_blank_ms, interval, "post-blank");

  const int total = static_cast<int>(
      std::lround((pre_blank_ms + blank_ms + post_blank_ms) / interval));
  const int pre = std::max(1, static_cast<int>(std::lround(pre_blank_ms / interval)));
  const int blank = std::max(1, round_half_down(blank_ms / interval));
  const int post = total - pre - blank;
  if (post < 1) {
    throw InvalidArgument("schedule leaves no post-blank frame");
  }

  std::vector<bool> flags(static_cast<std::size_t>(total), true);
  for (int k = pre; k < pre + blank; ++k) flags[static_cast<std::size_t>(k)] = false;
  return flags;
}

Trajectory sample_trajectory(const TrajectoryConfig& config, Rng& rng,
                             int trial_id) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  auto pick = [&](const std::vector<double>& options) {
    std::uniform_int_distribution<std::size_t> index(0, options.size() - 1);
    return options[index(rng)];
  };

  Trajectory traj;
  traj.trial_id = trial_id;
  traj.launch_point = Vec3((unit(rng) - 0.5) * config.launch_plane_width,
                           config.launch_plane_bottom +
                               unit(rng) * config.launch_plane_height,
                           config.launch_distance);
  const double half = 0.5 * config.target_plane_side;
  traj.arrival_point =
      Vec3(-half + unit(rng) * config.target_plane_side,
           config.target_plane_center_height - half +
               unit(rng) * config.target_plane_side,
           config.target_plane_distance);
  traj.pre_blank_ms = pick(config.pre_blank_options);
  traj.blank_ms = config.blank_duration;
  traj.post_blank_ms = pick(config.post_blank_options);

  const auto visible = blanking_schedule(traj.pre_blank_ms, traj.blank_ms,
                                         traj.post_blank_ms, config.frame_rate);
  const double flight_s = traj.flight_ms() / 1000.0;
  const Vec3 gravity = config.gravity_vector();
  traj.launch_velocity =
      solve_ballistic(traj.launch_point, traj.arrival_point, flight_s, gravity);

  const double interval = config.frame_ms();
  const auto n = visible.size();
  traj.frames.resize(n);
  for (std::size_t k = 0; k < n; ++k) {
    BallFrame& f = traj.frames[k];
    f.time_ms = traj.flight_ms() - static_cast<double>(n - 1 - k) * interval;
    const double t = f.time_ms / 1000.0;
    f.position = ballistic_position(traj.launch_point, traj.launch_velocity,
                                    gravity, t);
    f.velocity = traj.launch_velocity + gravity * t;
    f.visible = visible[k];
  }
  return traj;
}

}  // namespace handeye
