#include "handeye/pipeline.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>

#include "handeye/io.hpp"
#include "handeye/parallel.hpp"

namespace handeye {

namespace {

constexpr const char* kTrialHeader =
    "trial_id,frame_idx,time_ms,visible,ball_x,ball_y,ball_z,ball_vx,ball_vy,ball_vz,"
    "pre_blank_ms,post_blank_ms,gaze_az,gaze_el,paddle_x,paddle_y,paddle_z,"
    "paddle_roll,paddle_pitch,paddle_yaw,subject_id,caught";

std::string subject_file(int subject) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "subject_%02d.csv", subject);
  return buf;
}

std::string join_list(const std::vector<int>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + std::to_string(v[i]);
  return s;
}

std::string join_list(const std::vector<double>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + format_double(v[i]);
  return s;
}

std::vector<std::string> read_lines(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError(path, "cannot read");
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty()) lines.push_back(line);
  }
  return lines;
}

void record_common(Manifest& m, const RunConfig& c) {
  m.set("seed", static_cast<unsigned long long>(c.seed));
  m.set("desk_mode", std::string(c.desk_mode ? "true" : "false"));
}

void log(const std::string& msg) { std::cerr << "[handeye] " << msg << '\n'; }

}  // namespace

std::vector<int> RunConfig::effective_horizons() const {
  if (!horizons.empty()) return horizons;
  if (desk_mode) return {1, 19, 37};
  return all_horizons();
}

Hyperparameters RunConfig::effective_hyper() const {
  Hyperparameters h = hyper;
  if (desk_mode) {
    h.max_epochs = std::min(h.max_epochs, kDeskEpochCap);
    h.learning_rate = kDeskLearningRate;
    h.batch_size = kDeskBatchSize;
  }
  if (epochs_cap > 0) h.max_epochs = std::min(h.max_epochs, epochs_cap);
  return h;
}

AgentParams RunConfig::population_agent() const {
  AgentParams a = noiseless ? AgentParams::noiseless() : agent;
  if (noiseless) a.paddle_radius = agent.paddle_radius;
  a.rng_seed = seed;
  return a;
}

// --- datasets ------------------------------------------------------------------

std::vector<Trial> simulate_population(const RunConfig& config) {
  config.trajectory.validate();
  const AgentParams population = config.population_agent();
  population.validate();
  if (config.subjects < 1 || config.trials_per_subject < 1) {
    throw InvalidArgument("need at least one subject and one trial per subject");
  }
  HeadPose head;
  head.position = config.trajectory.head_position;

  const int total = config.subjects * config.trials_per_subject;
  std::vector<Trial> trials(static_cast<std::size_t>(total));
  std::vector<AgentParams> per_subject;
  for (int s = 1; s <= config.subjects; ++s) {
    per_subject.push_back(config.noiseless ? population
                                           : subject_params(population, s, config.seed));
  }
  parallel_for(trials.size(), config.workers, [&](std::size_t i) {
    const int trial_id = static_cast<int>(i);
    const int subject = trial_id / config.trials_per_subject + 1;
    Rng rng = make_stream(config.seed ^ config.trajectory.rng_seed,
                          static_cast<std::uint64_t>(trial_id));
    const Trajectory traj = sample_trajectory(config.trajectory, rng, trial_id);
    trials[i] = simulate_trial(traj, per_subject[static_cast<std::size_t>(subject - 1)], head,
                               subject);
  });
  return trials;
}

void write_trials_csv(const std::string& path, std::span<const Trial> trials) {
  std::ofstream out(path);
  if (!out) throw IoError(path, "cannot write trials");
  out << kTrialHeader << '\n';
  for (const auto& t : trials) {
    const auto& traj = t.trajectory;
    for (std::size_t k = 0; k < traj.frames.size(); ++k) {
      const auto& f = traj.frames[k];
      const auto& m = t.motor[k];
      out << t.trial_id() << ',' << k << ',' << format_double(f.time_ms) << ','
          << (f.visible ? 1 : 0);
      for (int a = 0; a < 3; ++a) out << ',' << format_double(f.position[a]);
      for (int a = 0; a < 3; ++a) out << ',' << format_double(f.velocity[a]);
      out << ',' << format_double(traj.pre_blank_ms) << ',' << format_double(traj.post_blank_ms)
          << ',' << format_double(m.gaze_azimuth) << ',' << format_double(m.gaze_elevation);
      for (int a = 0; a < 3; ++a) out << ',' << format_double(m.paddle_position[a]);
      for (int a = 0; a < 3; ++a) out << ',' << format_double(m.paddle_rotation[a]);
      out << ',' << t.subject_id << ',' << (t.caught ? 1 : 0) << '\n';
    }
  }
  if (!out) throw IoError(path, "write failed");
}

std::vector<Trial> read_trials_csv(const std::string& path, const TrajectoryConfig& config) {
  const auto lines = read_lines(path);
  if (lines.empty() || lines.front() != kTrialHeader) {
    throw DataError("unexpected trial file header in " + path);
  }
  std::vector<Trial> trials;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const auto f = split(lines[i], ',');
    if (f.size() != 22) throw DataError("malformed trial row " + std::to_string(i) + " in " + path);
    const int id = static_cast<int>(parse_int(f[0]));
    if (trials.empty() || trials.back().trial_id() != id) {
      Trial t;
      t.trajectory.trial_id = id;
      t.trajectory.pre_blank_ms = parse_double(f[10]);
      t.trajectory.post_blank_ms = parse_double(f[11]);
      t.trajectory.blank_ms = config.blank_duration;
      t.head.position = config.head_position;
      t.subject_id = static_cast<int>(parse_int(f[20]));
      t.caught = parse_int(f[21]) != 0;
      trials.push_back(std::move(t));
    }
    Trial& t = trials.back();
    BallFrame frame;
    frame.time_ms = parse_double(f[2]);
    frame.visible = parse_int(f[3]) != 0;
    frame.position = Vec3(parse_double(f[4]), parse_double(f[5]), parse_double(f[6]));
    frame.velocity = Vec3(parse_double(f[7]), parse_double(f[8]), parse_double(f[9]));
    t.trajectory.frames.push_back(frame);
    MotorState m;
    m.gaze_azimuth = parse_double(f[12]);
    m.gaze_elevation = parse_double(f[13]);
    m.paddle_position = Vec3(parse_double(f[14]), parse_double(f[15]), parse_double(f[16]));
    m.paddle_rotation = Vec3(parse_double(f[17]), parse_double(f[18]), parse_double(f[19]));
    t.motor.push_back(m);
  }
  const Vec3 g = config.gravity_vector();
  for (auto& t : trials) {
    auto& traj = t.trajectory;
    const auto& first = traj.frames.front();
    const double s = first.time_ms / 1000.0;
    traj.launch_velocity = first.velocity - g * s;
    traj.launch_point = first.position - traj.launch_velocity * s - 0.5 * g * s * s;
    traj.arrival_point = traj.frames.back().position;
  }
  return trials;
}

std::vector<FeaturizedTrial> featurize_all(std::span<const Trial> trials, double ball_radius) {
  std::vector<FeaturizedTrial> out;
  out.reserve(trials.size());
  for (const auto& t : trials) out.push_back(featurize_trial(t, ball_radius));
  return out;
}

void write_features_csv(const std::string& path, std::span<const FeaturizedTrial> trials) {
  std::ofstream out(path);
  if (!out) throw IoError(path, "cannot write features");
  out << "trial_id,subject_id,frame_idx,partition,visible,caught";
  for (auto n : kFeatureNames) out << ',' << n;
  for (auto n : kMotorNames) out << ",target_" << n;
  out << '\n';
  for (const auto& t : trials) {
    for (Eigen::Index k = 0; k < t.features.rows(); ++k) {
      const bool visible = k < t.blank_onset || k >= t.reappearance;
      out << t.trial_id << ',' << t.subject_id << ',' << k << ','
          << partition_name(t.partition) << ',' << (visible ? 1 : 0) << ','
          << (t.caught ? 1 : 0);
      for (int j = 0; j < kFeatureDims; ++j) out << ',' << format_double(t.features(k, j));
      for (int j = 0; j < kMotorDims; ++j) out << ',' << format_double(t.features(k, j));
      out << '\n';
    }
  }
  if (!out) throw IoError(path, "write failed");
}

std::vector<FeaturizedTrial> read_features_csv(const std::string& path) {
  const auto lines = read_lines(path);
  if (lines.empty()) throw DataError("empty feature file " + path);
  constexpr std::size_t kColumns = 6 + kFeatureDims + kMotorDims;
  std::vector<FeaturizedTrial> trials;
  std::vector<std::vector<double>> rows;
  std::vector<bool> visible;
  auto finish = [&] {
    if (trials.empty()) return;
    auto& t = trials.back();
    t.features.resize(static_cast<Eigen::Index>(rows.size()), kFeatureDims);
    for (std::size_t r = 0; r < rows.size(); ++r) {
      for (int j = 0; j < kFeatureDims; ++j) {
        t.features(static_cast<Eigen::Index>(r), j) = rows[r][static_cast<std::size_t>(j)];
      }
    }
    t.blank_onset = -1;
    for (std::size_t k = 0; k < visible.size(); ++k) {
      if (!visible[k] && t.blank_onset < 0) t.blank_onset = static_cast<int>(k);
      if (visible[k] && t.blank_onset >= 0) {
        t.reappearance = static_cast<int>(k);
        break;
      }
    }
    if (t.blank_onset < 1 || t.reappearance <= t.blank_onset) {
      throw DataError("trial " + std::to_string(t.trial_id) + " in " + path +
                      " lacks a visible-blank-visible schedule");
    }
    rows.clear();
    visible.clear();
  };
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const auto f = split(lines[i], ',');
    if (f.size() != kColumns) throw DataError("malformed feature row " + std::to_string(i));
    const int id = static_cast<int>(parse_int(f[0]));
    if (trials.empty() || trials.back().trial_id != id) {
      finish();
      FeaturizedTrial t;
      t.trial_id = id;
      t.subject_id = static_cast<int>(parse_int(f[1]));
      t.partition = parse_partition(f[3]);
      t.caught = parse_int(f[5]) != 0;
      trials.push_back(std::move(t));
    }
    visible.push_back(parse_int(f[4]) != 0);
    std::vector<double> row(kFeatureDims);
    for (int j = 0; j < kFeatureDims; ++j) row[static_cast<std::size_t>(j)] = parse_double(f[static_cast<std::size_t>(6 + j)]);
    rows.push_back(std::move(row));
  }
  finish();
  return trials;
}

// --- workspace ---------------------------------------------------------------------

std::string integration_tag(double integration_ms) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "I%03d", static_cast<int>(std::lround(integration_ms)));
  return buf;
}

std::string Workspace::trials_dir() const { return join_path(root, "trials"); }
std::string Workspace::features_dir() const { return join_path(root, "features"); }
std::string Workspace::features_csv() const { return join_path(features_dir(), "features.csv"); }
std::string Workspace::normalizer_txt() const {
  return join_path(features_dir(), "normalizer.txt");
}
std::string Workspace::models_dir() const { return join_path(root, "models"); }
std::string Workspace::lstm_dir(double i) const {
  return join_path(models_dir(), "lstm_" + integration_tag(i));
}
std::string Workspace::linear_dir(double i) const {
  return join_path(models_dir(), "linear_" + integration_tag(i));
}
std::string Workspace::mean_dir() const { return join_path(models_dir(), "mean"); }
std::string Workspace::report_dir() const { return join_path(root, "report"); }

std::vector<FeaturizedTrial> LoadedDataset::test() const {
  std::vector<FeaturizedTrial> out;
  for (const auto& t : trials) {
    if (t.partition == Partition::kTest) out.push_back(t);
  }
  return out;
}

LoadedDataset load_dataset(const Workspace& ws) {
  if (!path_exists(ws.features_csv())) {
    throw IoError(ws.features_csv(), "missing feature dataset (run `featurize` first)");
  }
  LoadedDataset d;
  d.trials = read_features_csv(ws.features_csv());
  d.normalizer = Normalizer::read(ws.normalizer_txt());
  return d;
}

// --- subcommands ----------------------------------------------------------------------

void cmd_simulate(const RunConfig& config) {
  const Workspace ws{config.out_dir};
  ensure_directory(ws.trials_dir());
  log("simulating " + std::to_string(config.subjects) + " x " +
      std::to_string(config.trials_per_subject) + " trials");
  const auto trials = simulate_population(config);
  for (int s = 1; s <= config.subjects; ++s) {
    const auto begin = static_cast<std::size_t>((s - 1) * config.trials_per_subject);
    write_trials_csv(join_path(ws.trials_dir(), subject_file(s)),
                     std::span(trials).subspan(begin, static_cast<std::size_t>(config.trials_per_subject)));
  }
  const AgentParams agent = config.population_agent();
  Manifest m;
  m.set("stage", std::string("simulate"));
  record_common(m, config);
  m.set("subjects", config.subjects);
  m.set("trials_per_subject", config.trials_per_subject);
  m.set("noiseless", std::string(config.noiseless ? "true" : "false"));
  m.set("launch_distance_m", config.trajectory.launch_distance);
  m.set("target_plane_distance_m", config.trajectory.target_plane_distance);
  m.set("ball_radius_m", config.trajectory.ball_radius);
  m.set("pursuit_gain_target", agent.pursuit_gain_target);
  m.set("gaze_lag_ms", agent.gaze_lag_ms);
  m.set("gaze_noise_sd_deg", agent.gaze_noise_sd);
  m.set("reach_noise_sd_m", agent.reach_noise_sd);
  m.set("paddle_radius_m", agent.paddle_radius);
  m.write(join_path(ws.trials_dir(), "manifest.txt"));
}

void cmd_featurize(const RunConfig& config) {
  const Workspace ws{config.out_dir};
  const std::string trial_manifest = join_path(ws.trials_dir(), "manifest.txt");
  if (!path_exists(trial_manifest)) {
    throw IoError(trial_manifest, "missing simulated trials (run `simulate` first)");
  }
  const Manifest sim = Manifest::read(trial_manifest);
  const int subjects = static_cast<int>(sim.get_int("subjects"));
  std::vector<Trial> trials;
  std::vector<std::string> inputs;
  for (int s = 1; s <= subjects; ++s) {
    const std::string path = join_path(ws.trials_dir(), subject_file(s));
    auto part = read_trials_csv(path, config.trajectory);
    trials.insert(trials.end(), std::make_move_iterator(part.begin()),
                  std::make_move_iterator(part.end()));
    inputs.push_back(path);
  }
  log("featurizing " + std::to_string(trials.size()) + " trials");
  auto featurized = featurize_all(trials, config.trajectory.ball_radius);
  split_dataset(featurized, config.seed);
  const Normalizer normalizer = fit_normalizer(featurized);

  ensure_directory(ws.features_dir());
  write_features_csv(ws.features_csv(), featurized);
  normalizer.write(ws.normalizer_txt());
  const auto counts = split_counts(static_cast<int>(featurized.size()));
  Manifest m;
  m.set("stage", std::string("featurize"));
  record_common(m, config);
  m.set("trials", static_cast<int>(featurized.size()));
  m.set("train", counts.train);
  m.set("validation", counts.validation);
  m.set("test", counts.test);
  m.set("trials_hash", content_hash(inputs));
  m.write(join_path(ws.features_dir(), "manifest.txt"));
}

void cmd_train(const RunConfig& config) {
  const Workspace ws{config.out_dir};
  const LoadedDataset data = load_dataset(ws);
  const auto horizons = config.effective_horizons();
  const Hyperparameters hyper = config.effective_hyper();
  ensure_directory(ws.models_dir());

  for (double integration : config.integration_ms) {
    ModelSpec spec;
    spec.integration_ms = integration;
    spec.horizons = horizons;
    spec.hyper = hyper;
    spec.seed = config.seed;
    log("training " + integration_tag(integration) + " over " +
        std::to_string(horizons.size()) + " horizons");
    const TrainedModel model = train_model(spec, data.trials, data.normalizer, config.workers);
    model.save(ws.lstm_dir(integration));
    fit_linear_baseline(data.trials, data.normalizer, integration, horizons, config.ridge_lambda)
        .save(ws.linear_dir(integration));
  }
  fit_mean_baseline(data.trials, data.normalizer, horizons).save(ws.mean_dir());

  Manifest m;
  m.set("stage", std::string("train"));
  record_common(m, config);
  m.set("integration_ms", join_list(config.integration_ms));
  m.set("horizons", join_list(horizons));
  m.set("batch_size", hyper.batch_size);
  m.set("max_epochs", hyper.max_epochs);
  m.set("patience", hyper.patience);
  m.set("learning_rate", hyper.learning_rate);
  m.set("ridge_lambda", config.ridge_lambda);
  m.set("dataset_hash", content_hash({ws.features_csv(), ws.normalizer_txt()}));
  m.write(join_path(ws.models_dir(), "manifest.txt"));
}

void cmd_evaluate(const RunConfig& config) {
  const Workspace ws{config.out_dir};
  const LoadedDataset data = load_dataset(ws);
  const auto test = data.test();
  if (test.empty()) throw DataError("test partition is empty; nothing to evaluate");
  const std::string dir = join_path(ws.report_dir(), "curves");
  ensure_directory(dir);

  const MeanPredictor mean = MeanPredictor::load(ws.mean_dir());
  mse_by_distance(mean, test, data.normalizer).write(join_path(dir, "mse_mean.csv"));
  for (const auto& band : mean_sd_band(mean, data.normalizer)) {
    band.write(join_path(dir, "band_" + band.output_component + ".csv"));
  }
  for (double integration : config.integration_ms) {
    const std::string tag = integration_tag(integration);
    const TrainedModel model = TrainedModel::load(ws.lstm_dir(integration));
    const LinearBaseline linear = LinearBaseline::load(ws.linear_dir(integration));
    mse_by_distance(model, test, data.normalizer).write(join_path(dir, "mse_lstm_" + tag + ".csv"));
    mse_by_distance(linear, test, data.normalizer)
        .write(join_path(dir, "mse_linear_" + tag + ".csv"));
    for (const auto& c : rmse_components(model, test, data.normalizer)) {
      c.write(join_path(dir, "rmse_lstm_" + tag + "_" + c.output_component + ".csv"));
      const auto& name = c.output_component;
      if (name == "paddle_x" || name == "paddle_y" || name == "paddle_z") {
        to_centimeters(c).write(join_path(dir, "rmse_lstm_" + tag + "_" + name + "_cm.csv"));
      }
    }
  }
}

void cmd_ablate(const RunConfig& config) {
  const Workspace ws{config.out_dir};
  const LoadedDataset data = load_dataset(ws);
  const auto test = data.test();
  if (test.empty()) throw DataError("test partition is empty; nothing to ablate");
  const std::string dir = join_path(ws.report_dir(), "ablation");
  ensure_directory(dir);
  for (double integration : config.integration_ms) {
    const TrainedModel model = TrainedModel::load(ws.lstm_dir(integration));
    std::vector<int> horizons;
    for (double ms : config.ablation_ms) {
      // Desk-mode models train a subset, so fall back to the nearest horizon.
      const int h = horizon_frames_for_ms(ms);
      int best = model.spec().horizons.front();
      for (int mh : model.spec().horizons) {
        if (std::abs(mh - h) < std::abs(best - h)) best = mh;
      }
      if (best != h) {
        log("ablation horizon " + std::to_string(h) + " not trained; using " +
            std::to_string(best));
      }
      horizons.push_back(best);
    }
    for (const auto& m : ablation_matrix(model, test, data.normalizer, horizons)) {
      char name[64];
      std::snprintf(name, sizeof(name), "ablation_%s_dt%03d.csv", integration_tag(integration).c_str(),
                    static_cast<int>(std::lround(m.horizon_ms)));
      m.write(join_path(dir, name));
    }
  }
}

void cmd_report(const RunConfig& config) {
  const Workspace ws{config.out_dir};
  for (double integration : config.integration_ms) {
    if (!path_exists(join_path(ws.lstm_dir(integration), "manifest.txt"))) {
      throw IoError(ws.lstm_dir(integration), "missing trained model (run `train` first)");
    }
  }
  const LoadedDataset data = load_dataset(ws);
  if (data.test().empty()) throw DataError("test partition is empty; refusing to write an empty report");
  cmd_evaluate(config);
  cmd_ablate(config);

  const BehaviorSummary b = summarize_behavior(data.trials);
  Manifest m;
  m.set("stage", std::string("report"));
  record_common(m, config);
  m.set("trials", b.trials);
  m.set("catch_rate", b.catch_rate);
  m.set("displacement_ratio_mean", b.displacement_ratio_mean);
  m.set("displacement_ratio_sd", b.displacement_ratio_sd);
  m.set("pursuit_gain_mean", b.pursuit_gain_mean);
  m.set("pursuit_gain_sd", b.pursuit_gain_sd);
  m.set("reappearance_speed_deg_s_mean", b.reappearance_speed_mean);
  m.set("reappearance_speed_deg_s_sd", b.reappearance_speed_sd);
  m.write(join_path(ws.report_dir(), "summary.txt"));
}

void run_pipeline(const RunConfig& config) {
  cmd_simulate(config);
  cmd_featurize(config);
  cmd_train(config);
  cmd_report(config);
}

}  // namespace handeye
