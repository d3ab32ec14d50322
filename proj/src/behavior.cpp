#include "handeye/behavior.hpp"

#include <algorithm>
#include <cmath>

#include "handeye/features.hpp"

namespace handeye {

namespace {

constexpr double kRollPerMeter = -40.0;  // deg of wrist roll per m of lateral reach

// Zero-mean Ornstein-Uhlenbeck sequence sampled once per frame, started from
// its stationary distribution.
class OuNoise {
 public:
  OuNoise(double sd, double tau_ms, double frame_ms)
      : sd_(sd),
        rho_(tau_ms > 0.0 ? std::exp(-frame_ms / tau_ms) : 0.0),
        innovation_(sd * std::sqrt(1.0 - rho_ * rho_)) {}

  double next(Rng& rng) {
    if (sd_ == 0.0) return 0.0;
    std::normal_distribution<double> normal(0.0, 1.0);
    state_ = started_ ? rho_ * state_ + innovation_ * normal(rng)
                      : sd_ * normal(rng);
    started_ = true;
    return state_;
  }

 private:
  double sd_;
  double rho_;
  double innovation_;
  double state_ = 0.0;
  bool started_ = false;
};

double frame_interval_ms(const Trajectory& t) {
  return t.frames.size() > 1 ? t.frames[1].time_ms - t.frames[0].time_ms
                             : kFrameMs;
}

}  // namespace

std::array<double, kMotorDims> MotorState::to_array() const {
  return {gaze_elevation,     gaze_azimuth,       paddle_position.x(),
          paddle_position.y(), paddle_position.z(), paddle_rotation.x(),
          paddle_rotation.y(), paddle_rotation.z()};
}

MotorState MotorState::from_array(const std::array<double, kMotorDims>& v) {
  MotorState m;
  m.gaze_elevation = v[motor::kGazeEl];
  m.gaze_azimuth = v[motor::kGazeAz];
  m.paddle_position = Vec3(v[motor::kPaddleX], v[motor::kPaddleY], v[motor::kPaddleZ]);
  m.paddle_rotation = Vec3(v[motor::kRoll], v[motor::kPitch], v[motor::kYaw]);
  return m;
}

void AgentParams::validate() const {
  if (gaze_noise_sd < 0.0 || reach_noise_sd < 0.0 || rotation_noise_sd < 0.0) {
    throw InvalidArgument("agent noise standard deviations must be >= 0");
  }
  if (!(pursuit_gain_target > 0.0 && pursuit_gain_target <= 1.2)) {
    throw InvalidArgument("pursuit_gain_target must lie in (0, 1.2]");
  }
  if (gaze_lag_ms < 0.0 || gaze_noise_tau_ms < 0.0 || reach_onset_ms < 0.0) {
    throw InvalidArgument("agent time constants must be >= 0");
  }
  if (!(paddle_radius > 0.0)) throw InvalidArgument("paddle_radius must be positive");
}

AgentParams AgentParams::noiseless() {
  AgentParams p;
  p.pursuit_gain_target = 1.0;
  p.gaze_lag_ms = 0.0;
  p.gaze_noise_sd = 0.0;
  p.reach_noise_sd = 0.0;
  p.rotation_noise_sd = 0.0;
  return p;
}

double minimum_jerk(double tau) {
  tau = std::clamp(tau, 0.0, 1.0);
  const double t3 = tau * tau * tau;
  return t3 * (10.0 - 15.0 * tau + 6.0 * tau * tau);
}

double minimum_jerk_velocity(double tau) {
  if (tau <= 0.0 || tau >= 1.0) return 0.0;
  const double t2 = tau * tau;
  return 30.0 * t2 * (1.0 - 2.0 * tau + t2);
}

Vec3 paddle_normal(const Vec3& rotation_deg) {
  const double pitch = rad(rotation_deg.y());
  const double yaw = rad(rotation_deg.z());
  return {std::sin(yaw) * std::cos(pitch), std::sin(pitch),
          std::cos(yaw) * std::cos(pitch)};
}

std::vector<GazeSample> simulate_gaze(const Trajectory& trajectory,
                                      const AgentParams& params,
                                      const HeadPose& head, Rng& rng) {
  const auto& frames = trajectory.frames;
  const std::size_t n = frames.size();
  std::vector<GazeSample> gaze(n);
  if (n == 0) return gaze;

  const double dt = frame_interval_ms(trajectory);
  const double alpha =
      params.gaze_lag_ms > 0.0 ? 1.0 - std::exp(-dt / params.gaze_lag_ms) : 1.0;
  OuNoise noise_az(params.gaze_noise_sd, params.gaze_noise_tau_ms, dt);
  OuNoise noise_el(params.gaze_noise_sd, params.gaze_noise_tau_ms, dt);

  std::vector<Angles> ball(n);
  for (std::size_t k = 0; k < n; ++k) {
    ball[k] = ball_angles(head.to_head(frames[k].position));
  }

  Angles pursuit = ball[0];
  for (std::size_t k = 0; k < n; ++k) {
    if (k > 0) {
      const bool predictive = !frames[k].visible || !frames[k - 1].visible;
      if (predictive) {
        pursuit.azimuth += params.pursuit_gain_target *
                           (ball[k].azimuth - ball[k - 1].azimuth);
        pursuit.elevation += params.pursuit_gain_target *
                             (ball[k].elevation - ball[k - 1].elevation);
      } else {
        // Lagged catch-up, capped so pursuit never outruns the scaled ball.
        double step_az = alpha * (ball[k].azimuth - pursuit.azimuth);
        double step_el = alpha * (ball[k].elevation - pursuit.elevation);
        const double limit =
            params.pursuit_gain_target * std::hypot(ball[k].azimuth - ball[k - 1].azimuth,
                                                    ball[k].elevation - ball[k - 1].elevation);
        const double step = std::hypot(step_az, step_el);
        if (step > limit && alpha < 1.0) {
          step_az *= limit / step;
          step_el *= limit / step;
        }
        pursuit.azimuth += step_az;
        pursuit.elevation += step_el;
      }
    }
    gaze[k].azimuth = pursuit.azimuth + noise_az.next(rng);
    gaze[k].elevation = pursuit.elevation + noise_el.next(rng);
  }
  return gaze;
}

std::vector<PaddlePose> simulate_paddle(const Trajectory& trajectory,
                                        const AgentParams& params,
                                        const HeadPose& head, Rng& rng) {
  const auto& frames = trajectory.frames;
  const std::size_t n = frames.size();
  std::vector<PaddlePose> poses(n);
  if (n == 0) return poses;

  std::normal_distribution<double> normal(0.0, 1.0);
  Vec3 aim = head.to_head(trajectory.arrival_point);
  if (params.reach_noise_sd > 0.0) {
    aim.x() += params.reach_noise_sd * normal(rng);
    aim.y() += params.reach_noise_sd * normal(rng);
  }

  const double dt = frame_interval_ms(trajectory);
  const double tremor_sd = 0.05 * params.reach_noise_sd;
  std::array<OuNoise, 3> tremor{OuNoise(tremor_sd, 100.0, dt),
                                OuNoise(tremor_sd, 100.0, dt),
                                OuNoise(tremor_sd, 100.0, dt)};
  std::array<OuNoise, 3> wobble{
      OuNoise(params.rotation_noise_sd, params.gaze_noise_tau_ms, dt),
      OuNoise(params.rotation_noise_sd, params.gaze_noise_tau_ms, dt),
      OuNoise(params.rotation_noise_sd, params.gaze_noise_tau_ms, dt)};

  const double arrival_ms = trajectory.flight_ms();
  const double reach_ms = std::max(arrival_ms - params.reach_onset_ms, dt);
  for (std::size_t k = 0; k < n; ++k) {
    const double tau = (frames[k].time_ms - params.reach_onset_ms) / reach_ms;
    const double s = minimum_jerk(tau);
    Vec3 pos = params.rest_position + (aim - params.rest_position) * s;
    for (int a = 0; a < 3; ++a) pos[a] += tremor[static_cast<std::size_t>(a)].next(rng);

    const Vec3 incoming = -head.direction_to_head(frames[k].velocity).normalized();
    const double yaw = deg(std::atan2(incoming.x(), incoming.z()));
    const double pitch =
        deg(std::atan2(incoming.y(), std::hypot(incoming.x(), incoming.z())));
    const double roll = kRollPerMeter * (pos.x() - params.rest_position.x());

    poses[k].position = pos;
    poses[k].rotation = Vec3(roll + wobble[0].next(rng), pitch + wobble[1].next(rng),
                             yaw + wobble[2].next(rng));
  }
  return poses;
}

bool catch_outcome(const Trial& trial, double paddle_radius) {
  const auto& frames = trial.trajectory.frames;
  if (trial.motor.size() != frames.size()) {
    throw MalformedTrial("trial " + std::to_string(trial.trial_id()) +
                         " has mismatched ball and motor streams");
  }
  const double plane_z = trial.trajectory.arrival_point.z();
  for (std::size_t k = 0; k < frames.size(); ++k) {
    if (frames[k].position.z() > plane_z + 1e-9) continue;
    const MotorState& m = trial.motor[k];
    const Vec3 offset = trial.head.to_head(frames[k].position) - m.paddle_position;
    const Vec3 normal = paddle_normal(m.paddle_rotation);
    const Vec3 in_plane = offset - offset.dot(normal) * normal;
    return in_plane.norm() <= paddle_radius;
  }
  throw MalformedTrial("trial " + std::to_string(trial.trial_id()) +
                       " never reaches the target plane");
}

Trial simulate_trial(const Trajectory& trajectory, const AgentParams& params,
                     const HeadPose& head, int subject_id) {
  if (trajectory.frames.empty()) {
    throw InvalidArgument("cannot simulate behavior for an empty trajectory");
  }
  Rng rng = make_stream(params.rng_seed,
                        static_cast<std::uint64_t>(trajectory.trial_id));
  const auto gaze = simulate_gaze(trajectory, params, head, rng);
  const auto paddle = simulate_paddle(trajectory, params, head, rng);

  Trial trial;
  trial.trajectory = trajectory;
  trial.head = head;
  trial.subject_id = subject_id;
  trial.motor.resize(gaze.size());
  for (std::size_t k = 0; k < gaze.size(); ++k) {
    trial.motor[k].gaze_azimuth = gaze[k].azimuth;
    trial.motor[k].gaze_elevation = gaze[k].elevation;
    trial.motor[k].paddle_position = paddle[k].position;
    trial.motor[k].paddle_rotation = paddle[k].rotation;
  }
  trial.caught = catch_outcome(trial, params.paddle_radius);
  return trial;
}

AgentParams subject_params(const AgentParams& population, int subject_id,
                           std::uint64_t seed) {
  Rng rng = make_stream(seed, 1'000'000ULL + static_cast<std::uint64_t>(subject_id));
  std::uniform_real_distribution<double> spread(0.75, 1.25);
  std::normal_distribution<double> gain_jitter(0.0, 0.04);
  std::uniform_real_distribution<double> onset_jitter(-50.0, 50.0);

  AgentParams p = population;
  p.pursuit_gain_target =
      std::clamp(population.pursuit_gain_target * (1.0 + gain_jitter(rng)), 0.05, 1.2);
  p.gaze_lag_ms = population.gaze_lag_ms * spread(rng);
  p.gaze_noise_sd = population.gaze_noise_sd * spread(rng);
  p.reach_noise_sd = population.reach_noise_sd * spread(rng);
  p.rotation_noise_sd = population.rotation_noise_sd * spread(rng);
  p.reach_onset_ms = std::max(0.0, population.reach_onset_ms + onset_jitter(rng));
  p.rng_seed = splitmix64(seed ^ (0xabcdefULL + static_cast<std::uint64_t>(subject_id)));
  return p;
}

}  // namespace handeye
