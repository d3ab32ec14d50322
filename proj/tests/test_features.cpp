#include <doctest.h>

#include <cmath>
#include <cstdio>

#include "handeye/ensemble.hpp"
#include "handeye/features.hpp"

using namespace handeye;

namespace {

// Ball moving in a straight line at constant velocity, head at the origin.
Trial linear_trial(const Vec3& start, const Vec3& velocity, int frames, double frame_ms = kFrameMs) {
  Trial t;
  t.head.position = Vec3::Zero();
  for (int k = 0; k < frames; ++k) {
    BallFrame f;
    f.time_ms = k * frame_ms;
    f.position = start + velocity * (f.time_ms / 1000.0);
    f.velocity = velocity;
    t.trajectory.frames.push_back(f);
    t.motor.emplace_back();
  }
  return t;
}

std::vector<FeaturizedTrial> simulated(int count, std::uint64_t seed) {
  TrajectoryConfig config;
  AgentParams agent;
  HeadPose head;
  std::vector<FeaturizedTrial> out;
  for (int id = 0; id < count; ++id) {
    Rng rng = make_stream(seed, static_cast<std::uint64_t>(id));
    const Trial t = simulate_trial(sample_trajectory(config, rng, id), agent, head, 1);
    out.push_back(featurize_trial(t, config.ball_radius));
  }
  return out;
}

}  // namespace

TEST_CASE("ball_angles") {
  Angles a = ball_angles({0, 0, 5});
  CHECK(a.azimuth == doctest::Approx(0.0));
  CHECK(a.elevation == doctest::Approx(0.0));
  a = ball_angles({5, 0, 5});
  CHECK(a.azimuth == doctest::Approx(45.0));
  CHECK(a.elevation == doctest::Approx(0.0));
  a = ball_angles({0, 1, std::sqrt(3.0)});
  CHECK(a.azimuth == doctest::Approx(0.0));
  CHECK(a.elevation == doctest::Approx(30.0));
  CHECK_THROWS_AS(ball_angles(Vec3::Zero()), DegenerateGeometry);
}

TEST_CASE("ball_angles round-trips through point_from_angles") {
  Rng rng(8);
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  for (int i = 0; i < 100; ++i) {
    const Vec3 p(u(rng), u(rng), std::abs(u(rng)) + 0.1);
    const Vec3 back = point_from_angles(ball_angles(p), p.norm());
    CHECK((back - p).norm() < 1e-9);
  }
}

TEST_CASE("angular_size") {
  const double near = angular_size(0.03, 4.0);
  const double far = angular_size(0.03, 8.0);
  CHECK(near == doctest::Approx(0.85943).epsilon(1e-5));
  CHECK(far == doctest::Approx(0.42972).epsilon(1e-5));
  CHECK(std::abs(near / far - 2.0) < 2e-4);
  CHECK(angular_size(0.03, 1e3) < far);
  CHECK(angular_size(0.03, 1e3) > 0.0);
  CHECK_THROWS_AS(angular_size(0.03, 0.03), DegenerateGeometry);
}

TEST_CASE("optical_tau") {
  CHECK(*optical_tau(2.0, 4.0) == doctest::Approx(0.5));
  CHECK(*optical_tau(2.0, -4.0) < 0.0);
  CHECK_FALSE(optical_tau(2.0, 0.0).has_value());
}

TEST_CASE("optical_tau tracks time to contact on a head-on approach") {
  const double speed = 5.0;
  const Trial t = linear_trial({0, 0, 10}, {0, 0, -speed}, 100);
  const auto frames = extract_features(t, 0.03);
  int checked = 0;
  for (std::size_t k = 1; k < frames.size(); ++k) {
    const double angle = frames[k].optical[6];
    if (angle >= 2.0) continue;
    const double remaining = t.trajectory.frames[k].position.z() / speed;
    const auto tau = optical_tau(angle, frames[k].optical[7]);
    REQUIRE(tau.has_value());
    CHECK(std::abs(*tau - remaining) / remaining < 0.05);
    ++checked;
  }
  CHECK(checked > 50);
}

TEST_CASE("extract_features: static and receding balls") {
  const auto still = extract_features(linear_trial({1, 0.5, 4}, Vec3::Zero(), 10), 0.03);
  for (std::size_t k = 1; k < still.size(); ++k) {
    for (int j : {2, 3, 5, 7}) CHECK(still[k].optical[static_cast<std::size_t>(j)] == 0.0);
  }
  const auto away = extract_features(linear_trial({0, 0, 2}, {0, 0, 3}, 10), 0.03);
  REQUIRE(away.size() == 10);
  for (std::size_t k = 0; k < away.size(); ++k) {
    CHECK(away[k].optical[0] == 0.0);
    CHECK(away[k].optical[1] == 0.0);
    if (k == 0) {
      for (int j : {2, 3, 5, 7}) CHECK(away[k].optical[static_cast<std::size_t>(j)] == 0.0);
    } else {
      CHECK(away[k].optical[5] > 0.0);
      CHECK(away[k].optical[7] < 0.0);
    }
  }
}

TEST_CASE("backward-difference rates converge at first order") {
  // Azimuth of a ball crossing in front of the head; the analytic rate is
  // d/dt atan2(x, z) = vx * z / (x^2 + z^2) for constant z.
  auto error_at = [](double frame_ms) {
    const Vec3 start(-1.0, 0.0, 2.0);
    const Vec3 v(4.0, 0.0, 0.0);
    const int k = static_cast<int>(std::lround(200.0 / frame_ms));
    const auto f = extract_features(linear_trial(start, v, k + 1, frame_ms), 0.03);
    const Vec3 p = start + v * (k * frame_ms / 1000.0);
    const double exact = deg(v.x() * p.z() / (p.x() * p.x() + p.z() * p.z()));
    return std::abs(f[static_cast<std::size_t>(k)].optical[2] - exact);
  };
  const double coarse = error_at(20.0);
  const double fine = error_at(10.0);
  CHECK(fine / coarse == doctest::Approx(0.5).epsilon(0.05));
}

TEST_CASE("featurize_trial keeps one frame per trial frame") {
  for (const auto& t : simulated(5, 1)) {
    CHECK(t.features.cols() == kFeatureDims);
    CHECK(t.reappearance - t.blank_onset == kBlankFrames);
    CHECK(t.features.allFinite());
  }
}

TEST_CASE("fit_normalizer: population sd and z-scores") {
  Eigen::MatrixXd x(3, 2);
  x << 1, 5, 2, 5, 3, 5;
  const Normalizer n = fit_normalizer(x, "unit");
  CHECK(n.mean()[0] == doctest::Approx(2.0));
  CHECK(n.sd()[0] == doctest::Approx(std::sqrt(2.0 / 3.0)));
  const Eigen::MatrixXd z = n.apply(x);
  CHECK(z(0, 0) == doctest::Approx(-1.2247).epsilon(1e-4));
  CHECK(z(1, 0) == doctest::Approx(0.0));
  CHECK(z(2, 0) == doctest::Approx(1.2247).epsilon(1e-4));
  // Constant column: floored sd, all zeros, flagged.
  CHECK(z.col(1).cwiseAbs().maxCoeff() == 0.0);
  REQUIRE(n.floored_columns().size() == 1);
  CHECK(n.floored_columns()[0] == 1);
  CHECK((n.invert(z) - x).cwiseAbs().maxCoeff() < 1e-12);
  CHECK_THROWS_AS(fit_normalizer(Eigen::MatrixXd(1, 2), "x"), InvalidArgument);
  CHECK_THROWS_AS(fit_normalizer(Eigen::MatrixXd(0, 2), "x"), InvalidArgument);
}

TEST_CASE("fit_normalizer: training rows become standard") {
  auto trials = simulated(40, 2);
  split_dataset(trials, 3);
  const Normalizer n = fit_normalizer(trials);
  Eigen::MatrixXd rows(0, kFeatureDims);
  std::vector<FeaturizedTrial> with_test;
  for (const auto& t : trials) {
    if (t.partition != Partition::kTrain) continue;
    Eigen::MatrixXd grown(rows.rows() + t.features.rows(), kFeatureDims);
    grown << rows, t.features;
    rows = grown;
  }
  const Eigen::MatrixXd z = n.apply(rows);
  for (int j = 0; j < kFeatureDims; ++j) {
    CHECK(std::abs(z.col(j).mean()) < 1e-9);
    const double sd = std::sqrt((z.col(j).array() - z.col(j).mean()).square().mean());
    CHECK(sd == doctest::Approx(1.0).epsilon(1e-9));
  }
  // Statistics come from the training partition only.
  auto everything = trials;
  for (auto& t : everything) t.partition = Partition::kTrain;
  const Normalizer leaky = fit_normalizer(everything);
  CHECK((leaky.mean() - n.mean()).cwiseAbs().maxCoeff() > 0.0);
}

TEST_CASE("Normalizer text round trip") {
  auto trials = simulated(12, 4);
  split_dataset(trials, 1);
  const Normalizer n = fit_normalizer(trials);
  const std::string path = "normalizer_roundtrip.txt";
  n.write(path);
  const Normalizer back = Normalizer::read(path);
  CHECK(back.mean() == n.mean());
  CHECK(back.sd() == n.sd());
  CHECK(back.computed_from() == n.computed_from());
  std::remove(path.c_str());
}

TEST_CASE("window_length") {
  CHECK(window_length(27) == 2);
  CHECK(window_length(53) == 4);
  CHECK(window_length(200) == 15);
  CHECK(window_length(600) == 45);
  CHECK(window_length(1) == 1);
}

TEST_CASE("window_dataset") {
  const auto trials = simulated(20, 5);
  const auto w = window_dataset(trials, 27, 37);
  REQUIRE(w.size() == trials.size());
  for (std::size_t i = 0; i < w.size(); ++i) {
    const auto& t = trials[i];
    CHECK(w[i].input.rows() == 2);
    CHECK(w[i].horizon_ms() == doctest::Approx(493.33).epsilon(1e-4));
    // Window ends on the last visible frame; the target is the last blank frame.
    CHECK(w[i].input.row(1) == t.features.row(t.last_visible()));
    CHECK(w[i].target.transpose() ==
          t.features.row(t.reappearance - 1).head(kMotorDims));
  }
  CHECK_THROWS_AS(window_dataset(trials, 27, 0), InvalidArgument);
  CHECK_THROWS_AS(window_dataset(trials, 27, 38), InvalidArgument);
  CHECK_THROWS_AS(window_dataset(trials, 700, 1), InvalidArgument);
  CHECK(window_dataset(trials, 600, 1).front().input.rows() == 45);
}

TEST_CASE("Partition names") {
  for (auto p : {Partition::kUnassigned, Partition::kTrain, Partition::kValidation, Partition::kTest}) {
    CHECK(parse_partition(partition_name(p)) == p);
  }
  CHECK_THROWS(parse_partition("bogus"));
}
