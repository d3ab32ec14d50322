#include "handeye/baselines.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>

#include "handeye/io.hpp"

namespace handeye {

namespace {

constexpr double kMinReciprocalCondition = 1e-15;

std::string two_digit(int value) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%02d", value);
  return buf;
}

std::vector<FeaturizedTrial> training_trials(std::span<const FeaturizedTrial> trials) {
  std::vector<FeaturizedTrial> out;
  for (const auto& t : trials) {
    if (t.partition == Partition::kTrain) out.push_back(t);
  }
  if (out.empty()) throw DataError("no training trials to fit a baseline on");
  return out;
}

}  // namespace

Eigen::VectorXd flatten_window(const Eigen::MatrixXd& window) {
  Eigen::VectorXd x(window.size() + 1);
  for (Eigen::Index t = 0; t < window.rows(); ++t) {
    x.segment(t * window.cols(), window.cols()) = window.row(t).transpose();
  }
  x[window.size()] = 1.0;
  return x;
}

Eigen::VectorXd LinearPredictor::predict(const Eigen::MatrixXd& window) const {
  const Eigen::VectorXd x = flatten_window(window);
  if (x.size() != weights.cols()) {
    throw InvalidArgument("window shape does not match the linear predictor");
  }
  return weights * x;
}

LinearPredictor fit_linear(std::span<const WindowSample> windows, int horizon_frames,
                           double ridge_lambda) {
  if (windows.empty()) throw InvalidArgument("fit_linear needs training windows");
  if (ridge_lambda < 0.0) throw InvalidArgument("ridge_lambda must be >= 0");

  const Eigen::Index n = static_cast<Eigen::Index>(windows.size());
  const Eigen::Index p = windows.front().input.size() + 1;
  const Eigen::Index outputs = windows.front().target.size();
  Eigen::MatrixXd x(n, p);
  Eigen::MatrixXd y(n, outputs);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& w = windows[static_cast<std::size_t>(i)];
    if (w.input.size() + 1 != p) throw InvalidArgument("windows must share a shape");
    x.row(i) = flatten_window(w.input).transpose();
    y.row(i) = w.target.transpose();
  }

  Eigen::MatrixXd normal = x.transpose() * x;
  normal.diagonal().head(p - 1).array() += ridge_lambda;
  const Eigen::LDLT<Eigen::MatrixXd> ldlt(normal);
  if (ldlt.info() != Eigen::Success || !(ldlt.rcond() > kMinReciprocalCondition)) {
    throw IllConditioned("normal matrix is singular or ill-conditioned (rcond " +
                         std::to_string(ldlt.rcond()) +
                         "); use a positive ridge lambda");
  }

  LinearPredictor out;
  out.horizon_frames = horizon_frames;
  out.window_length = static_cast<int>(windows.front().input.rows());
  out.ridge_lambda = ridge_lambda;
  out.weights = ldlt.solve(x.transpose() * y).transpose();
  if (!out.weights.allFinite()) throw IllConditioned("linear solve produced non-finite weights");
  return out;
}

LinearBaseline::LinearBaseline(double integration_ms, std::vector<LinearPredictor> predictors)
    : integration_ms_(integration_ms), predictors_(std::move(predictors)) {}

std::string LinearBaseline::label() const {
  return "linear_I" + std::to_string(static_cast<int>(std::lround(integration_ms_)));
}

std::vector<int> LinearBaseline::horizons() const {
  std::vector<int> h;
  for (const auto& p : predictors_) h.push_back(p.horizon_frames);
  return h;
}

const LinearPredictor& LinearBaseline::at(int horizon_frames) const {
  for (const auto& p : predictors_) {
    if (p.horizon_frames == horizon_frames) return p;
  }
  throw InvalidArgument("linear baseline has no horizon " + std::to_string(horizon_frames));
}

Eigen::MatrixXd LinearBaseline::predict_batch(std::span<const WindowSample> windows,
                                              int horizon_frames) const {
  const LinearPredictor& p = at(horizon_frames);
  Eigen::MatrixXd out(p.weights.rows(), static_cast<Eigen::Index>(windows.size()));
  for (std::size_t i = 0; i < windows.size(); ++i) {
    out.col(static_cast<Eigen::Index>(i)) = p.predict(windows[i].input);
  }
  return out;
}

void LinearBaseline::save(const std::string& directory) const {
  ensure_directory(directory);
  Manifest m;
  m.set("format", std::string("handeye-linear-v1"));
  m.set("integration_ms", integration_ms_);
  std::string list;
  for (std::size_t i = 0; i < predictors_.size(); ++i) {
    list += (i ? "," : "") + std::to_string(predictors_[i].horizon_frames);
  }
  m.set("horizons", list);
  if (!predictors_.empty()) {
    m.set("window_length", predictors_.front().window_length);
    m.set("ridge_lambda", predictors_.front().ridge_lambda);
  }
  m.write(join_path(directory, "manifest.txt"));
  for (const auto& p : predictors_) {
    const std::string path = join_path(directory, "linear_" + two_digit(p.horizon_frames) + ".csv");
    std::ofstream out(path);
    if (!out) throw IoError(path, "cannot write linear weights");
    for (Eigen::Index r = 0; r < p.weights.rows(); ++r) {
      for (Eigen::Index c = 0; c < p.weights.cols(); ++c) {
        out << (c ? "," : "") << format_double(p.weights(r, c));
      }
      out << '\n';
    }
  }
}

LinearBaseline LinearBaseline::load(const std::string& directory) {
  const std::string manifest_path = join_path(directory, "manifest.txt");
  if (!path_exists(manifest_path)) {
    throw IoError(manifest_path, "missing linear baseline manifest (run `train` first)");
  }
  const Manifest m = Manifest::read(manifest_path);
  std::vector<LinearPredictor> predictors;
  for (int h : parse_int_list(m.get("horizons"))) {
    LinearPredictor p;
    p.horizon_frames = h;
    p.window_length = static_cast<int>(m.get_int("window_length"));
    p.ridge_lambda = m.get_double("ridge_lambda");
    const std::string path = join_path(directory, "linear_" + two_digit(h) + ".csv");
    std::ifstream in(path);
    if (!in) throw IoError(path, "cannot read linear weights");
    std::vector<std::vector<double>> rows;
    std::string line;
    while (std::getline(in, line)) {
      if (!line.empty()) rows.push_back(parse_double_list(line));
    }
    if (rows.empty()) throw DataError("empty weight file " + path);
    p.weights.resize(static_cast<Eigen::Index>(rows.size()),
                     static_cast<Eigen::Index>(rows.front().size()));
    for (std::size_t r = 0; r < rows.size(); ++r) {
      if (rows[r].size() != rows.front().size()) throw DataError("ragged weights in " + path);
      for (std::size_t c = 0; c < rows[r].size(); ++c) {
        p.weights(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r][c];
      }
    }
    predictors.push_back(std::move(p));
  }
  return LinearBaseline(m.get_double("integration_ms"), std::move(predictors));
}

LinearBaseline fit_linear_baseline(std::span<const FeaturizedTrial> trials,
                                   const Normalizer& normalizer, double integration_ms,
                                   std::span<const int> horizons, double ridge_lambda) {
  const auto train = training_trials(trials);
  std::vector<LinearPredictor> predictors;
  for (int h : horizons) {
    const auto windows =
        normalize_windows(window_dataset(train, integration_ms, h), normalizer);
    predictors.push_back(fit_linear(windows, h, ridge_lambda));
  }
  return LinearBaseline(integration_ms, std::move(predictors));
}

// --- per-frame mean ---------------------------------------------------------

std::vector<int> MeanPredictor::horizons() const {
  std::vector<int> h;
  for (const auto& [k, v] : bands_) h.push_back(k);
  return h;
}

const MeanBand& MeanPredictor::band(int horizon_frames) const {
  const auto it = bands_.find(horizon_frames);
  if (it == bands_.end()) {
    throw InvalidArgument("mean predictor has no horizon " + std::to_string(horizon_frames));
  }
  return it->second;
}

Eigen::MatrixXd MeanPredictor::predict_batch(std::span<const WindowSample> windows,
                                             int horizon_frames) const {
  const MeanBand& b = band(horizon_frames);
  return b.mean.replicate(1, static_cast<Eigen::Index>(windows.size()));
}

MeanPredictor fit_mean(const std::map<int, Eigen::MatrixXd>& targets) {
  std::map<int, MeanBand> bands;
  for (const auto& [h, y] : targets) {
    if (y.rows() == 0) throw InvalidArgument("no targets for horizon " + std::to_string(h));
    MeanBand b;
    b.mean = y.colwise().mean().transpose();
    b.sd = ((y.rowwise() - b.mean.transpose()).array().square().colwise().sum() /
            static_cast<double>(y.rows()))
               .sqrt()
               .transpose();
    bands.emplace(h, std::move(b));
  }
  return MeanPredictor(std::move(bands));
}

void MeanPredictor::save(const std::string& directory) const {
  ensure_directory(directory);
  const std::string path = join_path(directory, "mean.csv");
  std::ofstream out(path);
  if (!out) throw IoError(path, "cannot write mean predictor");
  out << "horizon_frames";
  for (auto n : kMotorNames) out << ",mean_" << n;
  for (auto n : kMotorNames) out << ",sd_" << n;
  out << '\n';
  for (const auto& [h, b] : bands_) {
    out << h;
    for (Eigen::Index i = 0; i < b.mean.size(); ++i) out << ',' << format_double(b.mean[i]);
    for (Eigen::Index i = 0; i < b.sd.size(); ++i) out << ',' << format_double(b.sd[i]);
    out << '\n';
  }
}

MeanPredictor MeanPredictor::load(const std::string& directory) {
  const std::string path = join_path(directory, "mean.csv");
  std::ifstream in(path);
  if (!in) throw IoError(path, "missing mean predictor (run `train` first)");
  std::string line;
  std::getline(in, line);
  std::map<int, MeanBand> bands;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto f = split(line, ',');
    if (f.size() != 1 + 2 * kMotorDims) throw DataError("malformed row in " + path);
    MeanBand b;
    b.mean.resize(kMotorDims);
    b.sd.resize(kMotorDims);
    for (int i = 0; i < kMotorDims; ++i) {
      b.mean[i] = parse_double(f[static_cast<std::size_t>(1 + i)]);
      b.sd[i] = parse_double(f[static_cast<std::size_t>(1 + kMotorDims + i)]);
    }
    bands.emplace(static_cast<int>(parse_int(f[0])), std::move(b));
  }
  return MeanPredictor(std::move(bands));
}

MeanPredictor fit_mean_baseline(std::span<const FeaturizedTrial> trials,
                                const Normalizer& normalizer, std::span<const int> horizons) {
  const auto train = training_trials(trials);
  std::map<int, Eigen::MatrixXd> targets;
  for (int h : horizons) {
    const auto windows = normalize_windows(window_dataset(train, kFrameMs, h), normalizer);
    Eigen::MatrixXd y(static_cast<Eigen::Index>(windows.size()), kMotorDims);
    for (std::size_t i = 0; i < windows.size(); ++i) {
      y.row(static_cast<Eigen::Index>(i)) = windows[i].target.transpose();
    }
    targets.emplace(h, std::move(y));
  }
  return fit_mean(targets);
}

}  // namespace handeye
