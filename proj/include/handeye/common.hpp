#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>

#include <Eigen/Dense>

namespace handeye {

using Vec3 = Eigen::Vector3d;

// Error taxonomy. The CLI maps these onto exit codes (see tools/handeye.cpp).

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidArgument : public Error {
 public:
  using Error::Error;
};

class DegenerateGeometry : public Error {
 public:
  using Error::Error;
};

class MalformedTrial : public Error {
 public:
  using Error::Error;
};

class NumericInput : public Error {
 public:
  using Error::Error;
};

class IllConditioned : public Error {
 public:
  using Error::Error;
};

class DataError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  IoError(const std::string& path, const std::string& what)
      : Error(what + ": " + path), path_(path) {}
  const std::string& path() const { return path_; }

 private:
  std::string path_;
};

class TrainingDiverged : public Error {
 public:
  TrainingDiverged(int epoch, int horizon)
      : Error("training diverged (non-finite loss) at epoch " +
              std::to_string(epoch) +
              (horizon >= 0 ? " in subnetwork dt=" + std::to_string(horizon)
                            : std::string())),
        epoch_(epoch),
        horizon_(horizon) {}
  int epoch() const { return epoch_; }
  int horizon() const { return horizon_; }

 private:
  int epoch_;
  int horizon_;
};

// Frame clock shared by every module: 75 Hz, 13.33 ms per frame.
inline constexpr double kFrameRateHz = 75.0;
inline constexpr double kFrameMs = 1000.0 / kFrameRateHz;
inline constexpr int kBlankFrames = 37;

inline constexpr int kMotorDims = 8;
inline constexpr int kOpticalDims = 8;
inline constexpr int kFeatureDims = kMotorDims + kOpticalDims;

// Motor ordering is fixed across inputs, targets and model outputs.
inline constexpr std::array<std::string_view, kMotorDims> kMotorNames = {
    "gaze_el", "gaze_az", "paddle_x", "paddle_y",
    "paddle_z", "paddle_roll", "paddle_pitch", "paddle_yaw"};

inline constexpr std::array<std::string_view, kOpticalDims> kOpticalNames = {
    "ball_az",    "ball_el",         "ball_az_rate",  "ball_el_rate",
    "ball_depth", "ball_depth_rate", "angular_size", "expansion_rate"};

inline constexpr std::array<std::string_view, kFeatureDims> kFeatureNames = {
    "gaze_el",      "gaze_az",      "paddle_x",        "paddle_y",
    "paddle_z",     "paddle_roll",  "paddle_pitch",    "paddle_yaw",
    "ball_az",      "ball_el",      "ball_az_rate",    "ball_el_rate",
    "ball_depth",   "ball_depth_rate", "angular_size", "expansion_rate"};

namespace motor {
inline constexpr int kGazeEl = 0;
inline constexpr int kGazeAz = 1;
inline constexpr int kPaddleX = 2;
inline constexpr int kPaddleY = 3;
inline constexpr int kPaddleZ = 4;
inline constexpr int kRoll = 5;
inline constexpr int kPitch = 6;
inline constexpr int kYaw = 7;
}  // namespace motor

namespace optical {
inline constexpr int kAz = 8;
inline constexpr int kEl = 9;
inline constexpr int kAzRate = 10;
inline constexpr int kElRate = 11;
inline constexpr int kDepth = 12;
inline constexpr int kDepthRate = 13;
inline constexpr int kAngularSize = 14;
inline constexpr int kExpansionRate = 15;
}  // namespace optical

inline double deg(double rad) { return rad * 180.0 / 3.14159265358979323846; }
inline double rad(double degrees) {
  return degrees * 3.14159265358979323846 / 180.0;
}

using Rng = std::mt19937_64;

// Independent, reproducible stream for (seed, stream) pairs. Streams are
// keyed by trial id so trials can be generated in any order or thread.
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline Rng make_stream(std::uint64_t seed, std::uint64_t stream) {
  return Rng(splitmix64(splitmix64(seed) ^ splitmix64(stream + 0x51ed27ULL)));
}

}  // namespace handeye
