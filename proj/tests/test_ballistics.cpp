#include <doctest.h>

#include <array>
#include <cmath>
#include <map>
#include <set>

#include "handeye/ballistics.hpp"

using namespace handeye;

namespace {

// Fixed-step integration of x'' = g at 10 kHz, independent of the closed form.
Vec3 integrate(Vec3 x, Vec3 v, const Vec3& g, double seconds) {
  const double dt = 1e-4;
  const int steps = static_cast<int>(std::lround(seconds / dt));
  for (int i = 0; i < steps; ++i) {
    x += v * dt + 0.5 * g * dt * dt;
    v += g * dt;
  }
  return x;
}

const Vec3 kGravity(0.0, -9.81, 0.0);

}  // namespace

TEST_CASE("solve_ballistic: identity case") {
  const Vec3 p(1.0, 2.0, 3.0);
  const Vec3 v = solve_ballistic(p, p, 1.0, Vec3::Zero());
  CHECK(v.norm() == doctest::Approx(0.0));
}

TEST_CASE("solve_ballistic: lateral throw") {
  const Vec3 v = solve_ballistic({-2.0, 2.0, -8.0}, {0.3, 1.2, 0.0}, 1.4, kGravity);
  CHECK(v.x() == doctest::Approx(1.642857).epsilon(1e-6));
  CHECK(v.y() == doctest::Approx(6.295571).epsilon(1e-6));
  CHECK(v.z() == doctest::Approx(5.714286).epsilon(1e-6));
  const Vec3 end = integrate({-2.0, 2.0, -8.0}, v, kGravity, 1.4);
  CHECK((end - Vec3(0.3, 1.2, 0.0)).norm() < 1e-6);
}

TEST_CASE("solve_ballistic: symmetric apex") {
  const Vec3 v = solve_ballistic({0.0, 1.0, -8.0}, {0.0, 1.0, 0.0}, 2.0, kGravity);
  CHECK(v.x() == doctest::Approx(0.0));
  CHECK(v.y() == doctest::Approx(9.81));
  CHECK(v.z() == doctest::Approx(4.0));
}

TEST_CASE("solve_ballistic: closed form lands within 1e-9 m") {
  Rng rng(3);
  std::uniform_real_distribution<double> u(-5.0, 5.0);
  for (int i = 0; i < 50; ++i) {
    const Vec3 a(u(rng), u(rng), u(rng));
    const Vec3 b(u(rng), u(rng), u(rng));
    const double t = 0.2 + (u(rng) + 5.0) / 5.0;
    const Vec3 v = solve_ballistic(a, b, t, kGravity);
    CHECK((ballistic_position(a, v, kGravity, t) - b).norm() < 1e-9);
  }
}

TEST_CASE("solve_ballistic: rejects non-positive flight time") {
  CHECK_THROWS_AS(solve_ballistic(Vec3::Zero(), Vec3::Ones(), 0.0, kGravity), InvalidArgument);
  CHECK_THROWS_AS(solve_ballistic(Vec3::Zero(), Vec3::Ones(), -1.0, kGravity), InvalidArgument);
}

TEST_CASE("blanking_schedule: counts at 75 Hz") {
  auto count = [](const std::vector<bool>& f, std::size_t from, std::size_t to, bool value) {
    for (std::size_t k = from; k < to; ++k) {
      if (f[k] != value) return false;
    }
    return true;
  };
  const auto a = blanking_schedule(600, 500, 300, 75);
  REQUIRE(a.size() == 105);
  CHECK(count(a, 0, 45, true));
  CHECK(count(a, 45, 82, false));
  CHECK(count(a, 82, 105, true));

  const auto b = blanking_schedule(13.33, 13.33, 13.33, 75);
  CHECK(b == std::vector<bool>{true, false, true});

  const auto c = blanking_schedule(1000, 500, 500, 75);
  REQUIRE(c.size() == 150);
  CHECK(c[74]);
  CHECK_FALSE(c[75]);
}

TEST_CASE("blanking_schedule: sub-frame duration is rejected") {
  CHECK_THROWS_AS(blanking_schedule(600, 5, 300, 75), InvalidArgument);
  CHECK_THROWS_AS(blanking_schedule(0, 500, 300, 75), InvalidArgument);
}

TEST_CASE("sample_trajectory: pre 600 post 500 gives 120 frames") {
  TrajectoryConfig config;
  config.pre_blank_options = {600.0};
  config.post_blank_options = {500.0};
  Rng rng(1);
  const Trajectory t = sample_trajectory(config, rng, 0);
  CHECK(t.flight_ms() == doctest::Approx(1600.0));
  CHECK(t.frames.size() == 120);
}

TEST_CASE("sample_trajectory: structural invariants") {
  TrajectoryConfig config;
  Rng rng(11);
  for (int i = 0; i < 200; ++i) {
    const Trajectory t = sample_trajectory(config, rng, i);
    REQUIRE(t.frames.size() >= 3);
    CHECK((t.frames.back().position - t.arrival_point).norm() < 1e-6);

    int runs = 1;
    for (std::size_t k = 1; k < t.frames.size(); ++k) {
      if (t.frames[k].visible != t.frames[k - 1].visible) ++runs;
      CHECK(t.frames[k].time_ms - t.frames[k - 1].time_ms ==
            doctest::Approx(config.frame_ms()).epsilon(1e-9));
      CHECK(t.frames[k].velocity.x() == doctest::Approx(t.frames[0].velocity.x()));
      CHECK(t.frames[k].velocity.z() == doctest::Approx(t.frames[0].velocity.z()));
      const double dvy = t.frames[k].velocity.y() - t.frames[k - 1].velocity.y();
      CHECK(dvy == doctest::Approx(-config.gravity * config.frame_ms() / 1000.0));
    }
    CHECK(runs == 3);
    CHECK(t.frames.front().visible);
    CHECK(t.blank_onset() < t.reappearance());
    CHECK(std::abs(t.launch_point.x()) <= 3.0);
    CHECK(t.launch_point.y() >= config.launch_plane_bottom);
    CHECK(t.launch_point.y() <= config.launch_plane_bottom + config.launch_plane_height);
    CHECK(std::abs(t.arrival_point.x()) <= 0.5);
  }
}

TEST_CASE("sample_trajectory: duration combinations are uniform") {
  TrajectoryConfig config;
  Rng rng(2024);
  const int n = 10000;
  std::map<std::pair<double, double>, int> counts;
  std::set<double> flights;
  for (int i = 0; i < n; ++i) {
    const Trajectory t = sample_trajectory(config, rng, i);
    ++counts[{t.pre_blank_ms, t.post_blank_ms}];
    flights.insert(t.flight_ms());
  }
  REQUIRE(counts.size() == 9);
  double chi2 = 0.0;
  const double expected = n / 9.0;
  for (const auto& [key, c] : counts) {
    CHECK(std::abs(c / static_cast<double>(n) - 1.0 / 9.0) < 0.02);
    chi2 += (c - expected) * (c - expected) / expected;
  }
  CHECK(chi2 < 26.12);  // chi-square, 8 dof, p = 0.001
  CHECK(flights == std::set<double>{1400, 1500, 1600, 1700, 1800, 1900, 2000});
}

TEST_CASE("sample_trajectory: same stream gives identical trajectories") {
  TrajectoryConfig config;
  Rng a = make_stream(5, 17);
  Rng b = make_stream(5, 17);
  const Trajectory x = sample_trajectory(config, a, 17);
  const Trajectory y = sample_trajectory(config, b, 17);
  REQUIRE(x.frames.size() == y.frames.size());
  for (std::size_t k = 0; k < x.frames.size(); ++k) {
    CHECK(x.frames[k].position == y.frames[k].position);
  }
}

TEST_CASE("TrajectoryConfig::validate") {
  TrajectoryConfig config;
  CHECK_NOTHROW(config.validate());
  config.pre_blank_options.clear();
  CHECK_THROWS_AS(config.validate(), InvalidArgument);
  config = TrajectoryConfig{};
  config.target_plane_distance = config.launch_distance + 1.0;
  CHECK_THROWS_AS(config.validate(), InvalidArgument);
}
