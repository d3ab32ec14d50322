#include "handeye/features.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

namespace handeye {

Angles ball_angles(const Vec3& p) {
  if (p.squaredNorm() == 0.0) {
    throw DegenerateGeometry("ball direction undefined at the head origin");
  }
  return {deg(std::atan2(p.x(), p.z())),
          deg(std::atan2(p.y(), std::hypot(p.x(), p.z())))};
}

Vec3 point_from_angles(const Angles& a, double distance) {
  const double az = rad(a.azimuth);
  const double el = rad(a.elevation);
  return {distance * std::cos(el) * std::sin(az), distance * std::sin(el),
          distance * std::cos(el) * std::cos(az)};
}

double angular_size(double ball_radius, double depth) {
  if (!(depth > ball_radius)) {
    throw DegenerateGeometry("ball at or inside the eye (depth " +
                             std::to_string(depth) + " m <= radius " +
                             std::to_string(ball_radius) + " m)");
  }
  return deg(2.0 * std::atan(ball_radius / depth));
}

std::optional<double> optical_tau(double angle_deg, double expansion_rate_deg_s) {
  if (expansion_rate_deg_s == 0.0) return std::nullopt;
  return angle_deg / expansion_rate_deg_s;
}

Eigen::Matrix<double, kFeatureDims, 1> FeatureFrame::to_vector() const {
  Eigen::Matrix<double, kFeatureDims, 1> v;
  for (int i = 0; i < kMotorDims; ++i) v[i] = motor[static_cast<std::size_t>(i)];
  for (int i = 0; i < kOpticalDims; ++i) {
    v[kMotorDims + i] = optical[static_cast<std::size_t>(i)];
  }
  return v;
}

std::vector<FeatureFrame> extract_features(const Trial& trial, double ball_radius) {
  const auto& frames = trial.trajectory.frames;
  if (trial.motor.size() != frames.size()) {
    throw MalformedTrial("trial " + std::to_string(trial.trial_id()) +
                         " has mismatched ball and motor streams");
  }
  std::vector<FeatureFrame> out(frames.size());
  for (std::size_t k = 0; k < frames.size(); ++k) {
    const Vec3 p = trial.head.to_head(frames[k].position);
    const Angles a = ball_angles(p);
    const double depth = p.norm();
    auto& o = out[k].optical;
    o[0] = a.azimuth;
    o[1] = a.elevation;
    o[4] = depth;
    o[6] = angular_size(ball_radius, depth);
    if (k > 0) {
      const double dt = (frames[k].time_ms - frames[k - 1].time_ms) / 1000.0;
      const auto& prev = out[k - 1].optical;
      o[2] = (o[0] - prev[0]) / dt;
      o[3] = (o[1] - prev[1]) / dt;
      o[5] = (o[4] - prev[4]) / dt;
      o[7] = (o[6] - prev[6]) / dt;
    }
    out[k].motor = trial.motor[k].to_array();
  }
  return out;
}

Eigen::MatrixXd feature_matrix(std::span<const FeatureFrame> frames) {
  Eigen::MatrixXd m(static_cast<Eigen::Index>(frames.size()), kFeatureDims);
  for (std::size_t k = 0; k < frames.size(); ++k) {
    m.row(static_cast<Eigen::Index>(k)) = frames[k].to_vector().transpose();
  }
  return m;
}

std::string_view partition_name(Partition p) {
  switch (p) {
    case Partition::kTrain: return "train";
    case Partition::kValidation: return "validation";
    case Partition::kTest: return "test";
    case Partition::kUnassigned: break;
  }
  return "unassigned";
}

Partition parse_partition(std::string_view name) {
  if (name == "train") return Partition::kTrain;
  if (name == "validation") return Partition::kValidation;
  if (name == "test") return Partition::kTest;
  if (name == "unassigned") return Partition::kUnassigned;
  throw DataError("unknown partition '" + std::string(name) + "'");
}

FeaturizedTrial featurize_trial(const Trial& trial, double ball_radius) {
  FeaturizedTrial f;
  f.trial_id = trial.trial_id();
  f.subject_id = trial.subject_id;
  f.caught = trial.caught;
  f.blank_onset = trial.trajectory.blank_onset();
  f.reappearance = trial.trajectory.reappearance();
  f.features = feature_matrix(extract_features(trial, ball_radius));
  return f;
}

// --- normalization --------------------------------------------------------

Normalizer::Normalizer(Eigen::VectorXd mean, Eigen::VectorXd sd,
                       std::string computed_from)
    : mean_(std::move(mean)), sd_(std::move(sd)), computed_from_(std::move(computed_from)) {
  if (mean_.size() != sd_.size()) {
    throw InvalidArgument("normalizer mean/sd length mismatch");
  }
  for (Eigen::Index i = 0; i < sd_.size(); ++i) {
    if (!(sd_[i] > 0.0)) throw InvalidArgument("normalizer sd must be positive");
  }
}

Eigen::MatrixXd Normalizer::apply(const Eigen::MatrixXd& frames) const {
  if (frames.cols() != mean_.size()) {
    throw InvalidArgument("normalizer expects " + std::to_string(mean_.size()) +
                          " columns, got " + std::to_string(frames.cols()));
  }
  return (frames.rowwise() - mean_.transpose()).array().rowwise() /
         sd_.transpose().array();
}

Eigen::MatrixXd Normalizer::invert(const Eigen::MatrixXd& frames) const {
  if (frames.cols() != mean_.size()) {
    throw InvalidArgument("normalizer column mismatch in invert");
  }
  return (frames.array().rowwise() * sd_.transpose().array()).matrix().rowwise() +
         mean_.transpose();
}

Eigen::VectorXd Normalizer::apply_motor(const Eigen::VectorXd& m) const {
  if (m.size() > mean_.size()) throw InvalidArgument("motor vector too long");
  return (m - mean_.head(m.size())).cwiseQuotient(sd_.head(m.size()));
}

Eigen::VectorXd Normalizer::invert_motor(const Eigen::VectorXd& z) const {
  if (z.size() > mean_.size()) throw InvalidArgument("motor vector too long");
  return z.cwiseProduct(sd_.head(z.size())) + mean_.head(z.size());
}

void Normalizer::write(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw IoError(path, "cannot write normalizer");
  out << "# handeye normalizer v1\n";
  out << "computed_from " << computed_from_ << "\n";
  out << std::setprecision(17);
  for (Eigen::Index i = 0; i < mean_.size(); ++i) {
    const std::string name = mean_.size() == kFeatureDims
                                 ? std::string(kFeatureNames[static_cast<std::size_t>(i)])
                                 : "f" + std::to_string(i);
    out << name << ' ' << mean_[i] << ' ' << sd_[i] << '\n';
  }
  if (!out) throw IoError(path, "write failed");
}

Normalizer Normalizer::read(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError(path, "cannot read normalizer");
  std::string line;
  std::string tag = "train";
  std::vector<double> means;
  std::vector<double> sds;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream fields(line);
    std::string key;
    fields >> key;
    if (key == "computed_from") {
      fields >> tag;
      continue;
    }
    double m = 0.0;
    double s = 0.0;
    if (!(fields >> m >> s)) throw DataError("malformed normalizer line: " + line);
    means.push_back(m);
    sds.push_back(s);
  }
  return Normalizer(Eigen::Map<Eigen::VectorXd>(means.data(), static_cast<Eigen::Index>(means.size())),
                    Eigen::Map<Eigen::VectorXd>(sds.data(), static_cast<Eigen::Index>(sds.size())),
                    tag);
}

Normalizer fit_normalizer(const Eigen::MatrixXd& frames, std::string computed_from) {
  if (frames.rows() < 2) {
    throw InvalidArgument("normalizer needs at least two frames, got " +
                          std::to_string(frames.rows()));
  }
  const Eigen::VectorXd mean = frames.colwise().mean().transpose();
  const Eigen::MatrixXd centered = frames.rowwise() - mean.transpose();
  Eigen::VectorXd sd =
      (centered.array().square().colwise().sum() / static_cast<double>(frames.rows()))
          .sqrt()
          .transpose();
  std::vector<int> floored;
  for (Eigen::Index i = 0; i < sd.size(); ++i) {
    if (!(sd[i] >= Normalizer::kSdFloor)) {
      sd[i] = Normalizer::kSdFloor;
      floored.push_back(static_cast<int>(i));
      std::cerr << "warning: feature column " << i
                << " is constant; sd floored at " << Normalizer::kSdFloor << '\n';
    }
  }
  Normalizer n(mean, sd, std::move(computed_from));
  n.floored_ = std::move(floored);
  return n;
}

Normalizer fit_normalizer(std::span<const FeaturizedTrial> trials) {
  Eigen::Index rows = 0;
  for (const auto& t : trials) {
    if (t.partition == Partition::kTrain) rows += t.features.rows();
  }
  Eigen::MatrixXd stacked(rows, kFeatureDims);
  Eigen::Index r = 0;
  for (const auto& t : trials) {
    if (t.partition != Partition::kTrain) continue;
    stacked.middleRows(r, t.features.rows()) = t.features;
    r += t.features.rows();
  }
  return fit_normalizer(stacked, "train");
}

// --- windowing ------------------------------------------------------------

int window_length(double integration_ms) {
  if (!(integration_ms > 0.0)) {
    throw InvalidArgument("integration duration must be positive");
  }
  return std::max(1, static_cast<int>(std::lround(integration_ms / kFrameMs)));
}

std::vector<WindowSample> window_dataset(std::span<const FeaturizedTrial> trials,
                                         double integration_ms, int horizon_frames) {
  const int length = window_length(integration_ms);
  std::vector<WindowSample> out;
  out.reserve(trials.size());
  for (const auto& t : trials) {
    const int blank_frames = t.reappearance - t.blank_onset;
    if (horizon_frames < 1 || horizon_frames > blank_frames) {
      throw InvalidArgument("horizon " + std::to_string(horizon_frames) +
                            " frames falls outside the blank of trial " +
                            std::to_string(t.trial_id) + " (1.." +
                            std::to_string(blank_frames) + ")");
    }
    const int last = t.last_visible();
    if (last + 1 < length) {
      throw InvalidArgument("integration window of " + std::to_string(length) +
                            " frames exceeds the " + std::to_string(last + 1) +
                            " pre-blank frames of trial " + std::to_string(t.trial_id));
    }
    WindowSample w;
    w.input = t.features.middleRows(last - length + 1, length);
    w.target = t.features.row(last + horizon_frames).head(kMotorDims).transpose();
    w.trial_id = t.trial_id;
    w.integration_ms = integration_ms;
    w.horizon_frames = horizon_frames;
    w.partition = t.partition;
    out.push_back(std::move(w));
  }
  return out;
}

std::vector<WindowSample> normalize_windows(std::span<const WindowSample> windows,
                                            const Normalizer& normalizer) {
  std::vector<WindowSample> out(windows.begin(), windows.end());
  for (auto& w : out) {
    w.input = normalizer.apply(w.input);
    w.target = normalizer.apply_motor(w.target);
  }
  return out;
}

}  // namespace handeye
