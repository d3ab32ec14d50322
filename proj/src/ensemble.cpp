#include "handeye/ensemble.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numeric>

#include "handeye/io.hpp"
#include "handeye/parallel.hpp"

namespace handeye {

namespace {

int round_half_down(double x) { return static_cast<int>(std::ceil(x - 0.5)); }

std::string two_digit(int value) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%02d", value);
  return buf;
}

void require_partition(std::span<const WindowSample> windows, Partition expected,
                       const char* role) {
  for (const auto& w : windows) {
    if (w.partition != expected) {
      throw DataError(std::string(role) + " window from trial " + std::to_string(w.trial_id) +
                      " is tagged '" + std::string(partition_name(w.partition)) +
                      "', expected '" + std::string(partition_name(expected)) + "'");
    }
  }
}

double evaluate_loss(std::span<const WindowSample> windows, const LstmParams& params) {
  std::vector<std::size_t> all(windows.size());
  std::iota(all.begin(), all.end(), 0);
  const auto cache = lstm_forward(make_sequence_batch(windows, all), params);
  return mse_loss(cache.output, make_target_batch(windows, all));
}

}  // namespace

void Hyperparameters::validate() const {
  if (batch_size < 1 || max_epochs < 1 || patience < 0 || hidden_units < 1 ||
      !(learning_rate > 0.0) || clip_norm < 0.0) {
    throw InvalidArgument("hyperparameters must be positive (patience, clip_norm >= 0)");
  }
}

std::vector<int> all_horizons() {
  std::vector<int> h(kBlankFrames);
  std::iota(h.begin(), h.end(), 1);
  return h;
}

void ModelSpec::validate() const {
  hyper.validate();
  if (horizons.empty()) throw InvalidArgument("model needs at least one horizon");
  for (std::size_t i = 0; i < horizons.size(); ++i) {
    if (horizons[i] < 1 || horizons[i] > kBlankFrames) {
      throw InvalidArgument("horizon " + std::to_string(horizons[i]) +
                            " outside 1.." + std::to_string(kBlankFrames));
    }
    if (i > 0 && horizons[i] <= horizons[i - 1]) {
      throw InvalidArgument("horizons must be strictly increasing");
    }
  }
  window_length();
}

double TrainingHistory::best_val_loss() const {
  if (best_epoch < 1) return initial_val_loss;
  return val_loss[static_cast<std::size_t>(best_epoch - 1)];
}

SplitCounts split_counts(int trials) {
  SplitCounts c;
  c.validation = round_half_down(0.12 * trials);
  c.test = round_half_down(0.20 * trials);
  c.train = trials - c.validation - c.test;
  return c;
}

void split_dataset(std::span<FeaturizedTrial> trials, std::uint64_t seed) {
  if (trials.size() < 10) {
    throw InvalidArgument("need at least 10 trials to split, got " +
                          std::to_string(trials.size()));
  }
  const auto counts = split_counts(static_cast<int>(trials.size()));
  std::vector<std::size_t> order(trials.size());
  std::iota(order.begin(), order.end(), 0);
  // Shuffle by trial id rather than position so the split does not depend on
  // file or thread ordering.
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return trials[a].trial_id < trials[b].trial_id;
  });
  Rng rng = make_stream(seed, 0x5b117ULL);
  std::shuffle(order.begin(), order.end(), rng);
  for (std::size_t i = 0; i < order.size(); ++i) {
    const auto rank = static_cast<int>(i);
    Partition p = Partition::kTest;
    if (rank < counts.train) {
      p = Partition::kTrain;
    } else if (rank < counts.train + counts.validation) {
      p = Partition::kValidation;
    }
    trials[order[i]].partition = p;
  }
}

SequenceBatch make_sequence_batch(std::span<const WindowSample> windows,
                                  std::span<const std::size_t> order) {
  if (order.empty()) throw InvalidArgument("empty batch");
  const Eigen::Index length = windows[order[0]].input.rows();
  const Eigen::Index dims = windows[order[0]].input.cols();
  SequenceBatch steps(static_cast<std::size_t>(length),
                      Eigen::MatrixXd(dims, static_cast<Eigen::Index>(order.size())));
  for (std::size_t b = 0; b < order.size(); ++b) {
    const auto& input = windows[order[b]].input;
    if (input.rows() != length || input.cols() != dims) {
      throw InvalidArgument("windows in one batch must share a shape");
    }
    for (Eigen::Index t = 0; t < length; ++t) {
      steps[static_cast<std::size_t>(t)].col(static_cast<Eigen::Index>(b)) =
          input.row(t).transpose();
    }
  }
  return steps;
}

Eigen::MatrixXd make_target_batch(std::span<const WindowSample> windows,
                                  std::span<const std::size_t> order) {
  if (order.empty()) throw InvalidArgument("empty batch");
  Eigen::MatrixXd targets(windows[order[0]].target.size(),
                          static_cast<Eigen::Index>(order.size()));
  for (std::size_t b = 0; b < order.size(); ++b) {
    targets.col(static_cast<Eigen::Index>(b)) = windows[order[b]].target;
  }
  return targets;
}

Subnetwork train_subnetwork(std::span<const WindowSample> train,
                            std::span<const WindowSample> validation,
                            int horizon_frames, const Hyperparameters& hyper,
                            std::uint64_t seed) {
  hyper.validate();
  if (train.empty() || validation.empty()) {
    throw InvalidArgument("training and validation windows must be nonempty");
  }
  require_partition(train, Partition::kTrain, "training");
  require_partition(validation, Partition::kValidation, "validation");

  Rng rng = make_stream(seed, static_cast<std::uint64_t>(horizon_frames));
  const int inputs = static_cast<int>(train.front().input.cols());
  const int outputs = static_cast<int>(train.front().target.size());

  Subnetwork net;
  net.horizon_frames = horizon_frames;
  net.params = LstmParams::initialized(inputs, hyper.hidden_units, outputs, rng);
  AdamState adam = AdamState::for_params(net.params, hyper.learning_rate);

  TrainingHistory& history = net.history;
  history.initial_val_loss = evaluate_loss(validation, net.params);
  if (!std::isfinite(history.initial_val_loss)) throw TrainingDiverged(0, horizon_frames);

  LstmParams best = net.params;
  double best_loss = std::numeric_limits<double>::infinity();
  int waiting = 0;
  std::vector<std::size_t> order(train.size());
  std::iota(order.begin(), order.end(), 0);
  const auto batch_size = static_cast<std::size_t>(hyper.batch_size);

  for (int epoch = 1; epoch <= hyper.max_epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double weighted = 0.0;
    for (std::size_t start = 0; start < order.size(); start += batch_size) {
      const std::span<const std::size_t> batch(
          order.data() + start, std::min(batch_size, order.size() - start));
      const auto cache = lstm_forward(make_sequence_batch(train, batch), net.params);
      const Eigen::MatrixXd targets = make_target_batch(train, batch);
      const double loss = mse_loss(cache.output, targets);
      if (!std::isfinite(loss)) throw TrainingDiverged(epoch, horizon_frames);
      weighted += loss * static_cast<double>(batch.size());
      LstmParams grads = backward(cache, targets, net.params);
      if (hyper.clip_norm > 0.0) clip_gradient_norm(grads, hyper.clip_norm);
      adam_step(net.params, grads, adam);
    }
    const double val = evaluate_loss(validation, net.params);
    if (!std::isfinite(val)) throw TrainingDiverged(epoch, horizon_frames);
    history.train_loss.push_back(weighted / static_cast<double>(order.size()));
    history.val_loss.push_back(val);
    history.stop_epoch = epoch;

    if (val < best_loss) {
      best_loss = val;
      best = net.params;
      history.best_epoch = epoch;
      waiting = 0;
    } else if (++waiting >= std::max(hyper.patience, 1)) {
      break;
    }
  }
  net.params = std::move(best);
  return net;
}

// --- TrainedModel ---------------------------------------------------------

TrainedModel::TrainedModel(ModelSpec spec, Normalizer normalizer,
                           std::vector<Subnetwork> subnetworks)
    : spec_(std::move(spec)),
      normalizer_(std::move(normalizer)),
      subnetworks_(std::move(subnetworks)) {
  if (subnetworks_.size() != spec_.horizons.size()) {
    throw InvalidArgument("subnetwork count does not match the model's horizons");
  }
}

const Subnetwork& TrainedModel::subnetwork(int horizon_frames) const {
  for (const auto& s : subnetworks_) {
    if (s.horizon_frames == horizon_frames) return s;
  }
  throw InvalidArgument("model has no subnetwork for horizon " +
                        std::to_string(horizon_frames));
}

std::string TrainedModel::label() const {
  return "lstm_I" + std::to_string(static_cast<int>(std::lround(spec_.integration_ms)));
}

Eigen::MatrixXd TrainedModel::predict_batch(std::span<const WindowSample> windows,
                                            int horizon_frames) const {
  const Subnetwork& net = subnetwork(horizon_frames);
  std::vector<std::size_t> all(windows.size());
  std::iota(all.begin(), all.end(), 0);
  return lstm_forward(make_sequence_batch(windows, all), net.params).output;
}

void TrainedModel::save(const std::string& directory) const {
  ensure_directory(directory);
  Manifest m;
  m.set("format", std::string("handeye-model-v1"));
  m.set("integration_ms", spec_.integration_ms);
  m.set("window_length", spec_.window_length());
  std::string horizons;
  for (std::size_t i = 0; i < spec_.horizons.size(); ++i) {
    horizons += (i ? "," : "") + std::to_string(spec_.horizons[i]);
  }
  m.set("horizons", horizons);
  m.set("batch_size", spec_.hyper.batch_size);
  m.set("max_epochs", spec_.hyper.max_epochs);
  m.set("patience", spec_.hyper.patience);
  m.set("learning_rate", spec_.hyper.learning_rate);
  m.set("clip_norm", spec_.hyper.clip_norm);
  m.set("hidden_units", spec_.hyper.hidden_units);
  m.set("seed", static_cast<unsigned long long>(spec_.seed));
  for (const auto& s : subnetworks_) {
    const std::string tag = two_digit(s.horizon_frames);
    m.set("best_epoch_" + tag, s.history.best_epoch);
    m.set("stop_epoch_" + tag, s.history.stop_epoch);
    m.set("initial_val_loss_" + tag, s.history.initial_val_loss);

    s.params.write(join_path(directory, "subnet_" + tag + ".bin"));
    const std::string hist_path = join_path(directory, "history_" + tag + ".csv");
    std::ofstream hist(hist_path);
    if (!hist) throw IoError(hist_path, "cannot write history");
    hist << "epoch,train_loss,val_loss\n";
    for (std::size_t e = 0; e < s.history.val_loss.size(); ++e) {
      hist << e + 1 << ',' << format_double(s.history.train_loss[e]) << ','
           << format_double(s.history.val_loss[e]) << '\n';
    }
  }
  m.write(join_path(directory, "manifest.txt"));
  normalizer_.write(join_path(directory, "normalizer.txt"));
}

TrainedModel TrainedModel::load(const std::string& directory) {
  const std::string manifest_path = join_path(directory, "manifest.txt");
  if (!path_exists(manifest_path)) {
    throw IoError(manifest_path, "missing model manifest (run `train` first)");
  }
  const Manifest m = Manifest::read(manifest_path);
  ModelSpec spec;
  spec.integration_ms = m.get_double("integration_ms");
  spec.horizons = parse_int_list(m.get("horizons"));
  spec.hyper.batch_size = static_cast<int>(m.get_int("batch_size"));
  spec.hyper.max_epochs = static_cast<int>(m.get_int("max_epochs"));
  spec.hyper.patience = static_cast<int>(m.get_int("patience"));
  spec.hyper.learning_rate = m.get_double("learning_rate");
  spec.hyper.clip_norm = m.get_double("clip_norm");
  spec.hyper.hidden_units = static_cast<int>(m.get_int("hidden_units"));
  spec.seed = static_cast<std::uint64_t>(std::stoull(m.get("seed")));

  std::vector<Subnetwork> nets;
  for (int h : spec.horizons) {
    const std::string tag = two_digit(h);
    Subnetwork s;
    s.horizon_frames = h;
    s.params = LstmParams::read(join_path(directory, "subnet_" + tag + ".bin"));
    s.history.best_epoch = static_cast<int>(m.get_int("best_epoch_" + tag));
    s.history.stop_epoch = static_cast<int>(m.get_int("stop_epoch_" + tag));
    s.history.initial_val_loss = m.get_double("initial_val_loss_" + tag);
    const std::string hist_path = join_path(directory, "history_" + tag + ".csv");
    std::ifstream hist(hist_path);
    if (!hist) throw IoError(hist_path, "cannot read history");
    std::string line;
    std::getline(hist, line);
    while (std::getline(hist, line)) {
      if (line.empty()) continue;
      const auto f = split(line, ',');
      if (f.size() != 3) throw DataError("malformed history row in " + hist_path);
      s.history.train_loss.push_back(parse_double(f[1]));
      s.history.val_loss.push_back(parse_double(f[2]));
    }
    nets.push_back(std::move(s));
  }
  return TrainedModel(std::move(spec),
                      Normalizer::read(join_path(directory, "normalizer.txt")),
                      std::move(nets));
}

TrainedModel train_model(const ModelSpec& spec, std::span<const FeaturizedTrial> trials,
                         const Normalizer& normalizer, int workers) {
  spec.validate();
  std::vector<FeaturizedTrial> train_trials;
  std::vector<FeaturizedTrial> val_trials;
  for (const auto& t : trials) {
    if (t.partition == Partition::kTrain) train_trials.push_back(t);
    if (t.partition == Partition::kValidation) val_trials.push_back(t);
  }
  if (train_trials.empty() || val_trials.empty()) {
    throw DataError("dataset has no train or validation trials; split it first");
  }

  std::vector<Subnetwork> nets(spec.horizons.size());
  parallel_for(spec.horizons.size(), workers, [&](std::size_t i) {
    const int h = spec.horizons[i];
    const auto train = normalize_windows(
        window_dataset(train_trials, spec.integration_ms, h), normalizer);
    const auto val = normalize_windows(
        window_dataset(val_trials, spec.integration_ms, h), normalizer);
    nets[i] = train_subnetwork(train, val, h, spec.hyper, spec.seed);
  });
  return TrainedModel(spec, normalizer, std::move(nets));
}

Eigen::MatrixXd predict_blank(const TrainedModel& model, const FeaturizedTrial& trial) {
  const auto windows = normalize_windows(
      window_dataset(std::span(&trial, 1), model.spec().integration_ms, 1),
      model.normalizer());
  const auto& horizons = model.spec().horizons;
  Eigen::MatrixXd out(static_cast<Eigen::Index>(horizons.size()), kMotorDims);
  for (std::size_t k = 0; k < horizons.size(); ++k) {
    const Eigen::VectorXd z = model.predict(windows.front(), horizons[k]);
    out.row(static_cast<Eigen::Index>(k)) = model.normalizer().invert_motor(z).transpose();
  }
  return out;
}

}  // namespace handeye
