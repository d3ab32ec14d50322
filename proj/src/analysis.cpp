#include "handeye/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "handeye/io.hpp"

namespace handeye {

namespace {

std::vector<FeaturizedTrial> nonempty(std::span<const FeaturizedTrial> test) {
  if (test.empty()) throw DataError("evaluation set is empty");
  return {test.begin(), test.end()};
}

struct Residuals {
  Eigen::MatrixXd predicted;  // 8 x N, normalized
  Eigen::MatrixXd target;     // 8 x N, normalized
};

Residuals residuals(const HorizonPredictor& predictor, std::span<const FeaturizedTrial> test,
                    const Normalizer& normalizer, int horizon) {
  const auto windows = normalize_windows(
      window_dataset(test, predictor.integration_ms(), horizon), normalizer);
  Residuals r;
  r.predicted = predictor.predict_batch(windows, horizon);
  r.target.resize(kMotorDims, static_cast<Eigen::Index>(windows.size()));
  for (std::size_t i = 0; i < windows.size(); ++i) {
    r.target.col(static_cast<Eigen::Index>(i)) = windows[i].target;
  }
  return r;
}

double population_sd(const Eigen::VectorXd& v) {
  if (v.size() == 0) return 0.0;
  return std::sqrt((v.array() - v.mean()).square().mean());
}

std::optional<double> projected_ratio(double gaze_az, double gaze_el, double ball_az,
                                      double ball_el) {
  const double norm2 = ball_az * ball_az + ball_el * ball_el;
  if (norm2 == 0.0) return std::nullopt;
  return (gaze_az * ball_az + gaze_el * ball_el) / norm2;
}

}  // namespace

void ErrorCurve::write(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw IoError(path, "cannot write curve");
  out << "horizon_ms,value,dispersion,label,component\n";
  for (std::size_t i = 0; i < horizon_ms.size(); ++i) {
    out << format_double(horizon_ms[i]) << ',' << format_double(value[i]) << ','
        << format_double(dispersion[i]) << ',' << label << ',' << output_component << '\n';
  }
  if (!out) throw IoError(path, "write failed");
}

ErrorCurve mse_by_distance(const HorizonPredictor& predictor,
                           std::span<const FeaturizedTrial> test,
                           const Normalizer& normalizer) {
  const auto trials = nonempty(test);
  ErrorCurve curve;
  curve.label = predictor.label();
  for (int h : predictor.horizons()) {
    const Residuals r = residuals(predictor, trials, normalizer, h);
    const Eigen::VectorXd per_trial =
        (r.predicted - r.target).array().square().colwise().mean().transpose();
    curve.horizon_ms.push_back(h * kFrameMs);
    curve.value.push_back(per_trial.mean());
    curve.dispersion.push_back(population_sd(per_trial));
  }
  return curve;
}

std::vector<ErrorCurve> rmse_components(const HorizonPredictor& predictor,
                                        std::span<const FeaturizedTrial> test,
                                        const Normalizer& normalizer) {
  const auto trials = nonempty(test);
  std::vector<ErrorCurve> curves(kMotorDims);
  for (int j = 0; j < kMotorDims; ++j) {
    curves[static_cast<std::size_t>(j)].label = predictor.label();
    curves[static_cast<std::size_t>(j)].output_component =
        std::string(kMotorNames[static_cast<std::size_t>(j)]);
  }
  for (int h : predictor.horizons()) {
    const Residuals r = residuals(predictor, trials, normalizer, h);
    for (int j = 0; j < kMotorDims; ++j) {
      const Eigen::VectorXd err =
          ((r.predicted.row(j) - r.target.row(j)) * normalizer.sd()[j]).transpose();
      auto& c = curves[static_cast<std::size_t>(j)];
      c.horizon_ms.push_back(h * kFrameMs);
      c.value.push_back(std::sqrt(err.array().square().mean()));
      c.dispersion.push_back(population_sd(err.cwiseAbs()));
    }
  }
  return curves;
}

std::vector<ErrorCurve> mean_sd_band(const MeanPredictor& mean, const Normalizer& normalizer) {
  std::vector<ErrorCurve> curves(kMotorDims);
  for (int j = 0; j < kMotorDims; ++j) {
    auto& c = curves[static_cast<std::size_t>(j)];
    c.label = "mean_sd_band";
    c.output_component = std::string(kMotorNames[static_cast<std::size_t>(j)]);
    for (int h : mean.horizons()) {
      c.horizon_ms.push_back(h * kFrameMs);
      c.value.push_back(mean.band(h).sd[j] * normalizer.sd()[j]);
      c.dispersion.push_back(0.0);
    }
  }
  return curves;
}

ErrorCurve to_centimeters(const ErrorCurve& curve) {
  ErrorCurve out = curve;
  for (auto& v : out.value) v *= 100.0;
  for (auto& v : out.dispersion) v *= 100.0;
  out.label += "_cm";
  return out;
}

std::optional<double> displacement_ratio(const FeaturizedTrial& trial) {
  const auto& f = trial.features;
  const int first = trial.last_visible();
  const int last = trial.reappearance - 1;
  if (first < 0 || last <= first || last >= f.rows()) {
    throw MalformedTrial("trial " + std::to_string(trial.trial_id) + " lacks a full blank span");
  }
  return projected_ratio(f(last, motor::kGazeAz) - f(first, motor::kGazeAz),
                         f(last, motor::kGazeEl) - f(first, motor::kGazeEl),
                         f(last, optical::kAz) - f(first, optical::kAz),
                         f(last, optical::kEl) - f(first, optical::kEl));
}

std::optional<double> pursuit_gain(const FeaturizedTrial& trial) {
  const auto& f = trial.features;
  const int r = trial.reappearance;
  if (r < 1 || r >= f.rows()) {
    throw MalformedTrial("trial " + std::to_string(trial.trial_id) + " has no reappearance frame");
  }
  return projected_ratio(f(r, motor::kGazeAz) - f(r - 1, motor::kGazeAz),
                         f(r, motor::kGazeEl) - f(r - 1, motor::kGazeEl),
                         f(r, optical::kAz) - f(r - 1, optical::kAz),
                         f(r, optical::kEl) - f(r - 1, optical::kEl));
}

double reappearance_speed(const FeaturizedTrial& trial) {
  const auto& f = trial.features;
  const int r = trial.reappearance;
  if (r < 1 || r >= f.rows()) {
    throw MalformedTrial("trial " + std::to_string(trial.trial_id) + " has no reappearance frame");
  }
  return std::hypot(f(r, optical::kAzRate), f(r, optical::kElRate));
}

BehaviorSummary summarize_behavior(std::span<const FeaturizedTrial> trials) {
  if (trials.empty()) throw DataError("no trials to summarize");
  std::vector<double> ratios;
  std::vector<double> gains;
  std::vector<double> speeds;
  int caught = 0;
  for (const auto& t : trials) {
    caught += t.caught ? 1 : 0;
    if (auto d = displacement_ratio(t)) ratios.push_back(*d);
    if (auto g = pursuit_gain(t)) gains.push_back(*g);
    speeds.push_back(reappearance_speed(t));
  }
  auto stats = [](const std::vector<double>& v) {
    const Eigen::VectorXd x = Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
    return std::pair{x.size() ? x.mean() : 0.0, population_sd(x)};
  };
  BehaviorSummary s;
  s.trials = static_cast<int>(trials.size());
  s.catch_rate = static_cast<double>(caught) / static_cast<double>(trials.size());
  std::tie(s.displacement_ratio_mean, s.displacement_ratio_sd) = stats(ratios);
  std::tie(s.pursuit_gain_mean, s.pursuit_gain_sd) = stats(gains);
  std::tie(s.reappearance_speed_mean, s.reappearance_speed_sd) = stats(speeds);
  return s;
}

std::vector<WindowSample> ablate_feature(std::span<const WindowSample> windows,
                                         int feature_index, const Normalizer& normalizer) {
  if (feature_index < 0 || feature_index >= normalizer.dims()) {
    throw InvalidArgument("feature index " + std::to_string(feature_index) +
                          " outside 0.." + std::to_string(normalizer.dims() - 1));
  }
  std::vector<WindowSample> out(windows.begin(), windows.end());
  for (auto& w : out) w.input.col(feature_index).setConstant(normalizer.mean()[feature_index]);
  return out;
}

int horizon_frames_for_ms(double ms) {
  return std::clamp(static_cast<int>(std::lround(ms / kFrameMs)), 1, kBlankFrames);
}

std::vector<AblationMatrix> ablation_matrix(const HorizonPredictor& predictor,
                                            std::span<const FeaturizedTrial> test,
                                            const Normalizer& normalizer,
                                            std::span<const int> horizons) {
  const auto trials = nonempty(test);
  std::vector<AblationMatrix> out;
  for (int h : horizons) {
    const auto raw = window_dataset(trials, predictor.integration_ms(), h);
    const auto normalized = normalize_windows(raw, normalizer);
    Eigen::MatrixXd targets(kMotorDims, static_cast<Eigen::Index>(raw.size()));
    for (std::size_t i = 0; i < normalized.size(); ++i) {
      targets.col(static_cast<Eigen::Index>(i)) = normalized[i].target;
    }
    auto mean_abs_error = [&](std::span<const WindowSample> windows) {
      return Eigen::VectorXd(
          (predictor.predict_batch(windows, h) - targets).cwiseAbs().rowwise().mean());
    };

    AblationMatrix m;
    m.integration_ms = predictor.integration_ms();
    m.horizon_frames = h;
    m.horizon_ms = h * kFrameMs;
    const Eigen::VectorXd base = mean_abs_error(normalized);
    m.baseline_error = base.transpose();
    for (int i = 0; i < kFeatureDims; ++i) {
      const auto ablated = normalize_windows(ablate_feature(raw, i, normalizer), normalizer);
      const Eigen::VectorXd err = mean_abs_error(ablated);
      m.raw_increase.row(i) = (err - base).cwiseMax(0.0).transpose();
    }
    for (int j = 0; j < kMotorDims; ++j) {
      const double peak = m.raw_increase.col(j).maxCoeff();
      if (peak > 0.0) m.values.col(j) = m.raw_increase.col(j) / peak;
    }
    out.push_back(m);
  }
  return out;
}

void AblationMatrix::write(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw IoError(path, "cannot write ablation matrix");
  out << "# integration_ms=" << format_double(integration_ms)
      << " horizon_ms=" << format_double(horizon_ms) << '\n';
  out << "removed_feature";
  for (auto n : kMotorNames) out << ',' << n;
  out << '\n';
  for (int i = 0; i < kFeatureDims; ++i) {
    out << kFeatureNames[static_cast<std::size_t>(i)];
    for (int j = 0; j < kMotorDims; ++j) out << ',' << format_double(values(i, j));
    out << '\n';
  }
  if (!out) throw IoError(path, "write failed");
}

}  // namespace handeye
