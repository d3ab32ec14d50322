#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "handeye/pipeline.hpp"

namespace py = pybind11;
using namespace handeye;

namespace {

Eigen::MatrixXd ball_positions(const Trial& t) {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(t.trajectory.frames.size()), 3);
  for (std::size_t k = 0; k < t.trajectory.frames.size(); ++k) {
    out.row(static_cast<Eigen::Index>(k)) = t.trajectory.frames[k].position.transpose();
  }
  return out;
}

std::vector<bool> visibility(const Trial& t) {
  std::vector<bool> out;
  for (const auto& f : t.trajectory.frames) out.push_back(f.visible);
  return out;
}

Eigen::MatrixXd motor_matrix(const Trial& t) {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(t.motor.size()), kMotorDims);
  for (std::size_t k = 0; k < t.motor.size(); ++k) {
    const auto v = t.motor[k].to_array();
    for (int j = 0; j < kMotorDims; ++j) out(static_cast<Eigen::Index>(k), j) = v[static_cast<std::size_t>(j)];
  }
  return out;
}

py::dict summary_dict(const BehaviorSummary& s) {
  py::dict d;
  d["trials"] = s.trials;
  d["catch_rate"] = s.catch_rate;
  d["displacement_ratio_mean"] = s.displacement_ratio_mean;
  d["displacement_ratio_sd"] = s.displacement_ratio_sd;
  d["pursuit_gain_mean"] = s.pursuit_gain_mean;
  d["pursuit_gain_sd"] = s.pursuit_gain_sd;
  d["reappearance_speed_mean"] = s.reappearance_speed_mean;
  d["reappearance_speed_sd"] = s.reappearance_speed_sd;
  return d;
}

}  // namespace

PYBIND11_MODULE(_handeye, m) {
  m.doc() = "Synthetic ball-catching simulator, feature extraction and motor-state prediction";

  auto base = py::register_exception<Error>(m, "HandeyeError", PyExc_RuntimeError);
  py::register_exception<InvalidArgument>(m, "InvalidArgument", base.ptr());
  py::register_exception<DegenerateGeometry>(m, "DegenerateGeometry", base.ptr());
  py::register_exception<MalformedTrial>(m, "MalformedTrial", base.ptr());
  py::register_exception<NumericInput>(m, "NumericInput", base.ptr());
  py::register_exception<IllConditioned>(m, "IllConditioned", base.ptr());
  py::register_exception<DataError>(m, "DataError", base.ptr());
  py::register_exception<IoError>(m, "IoError", base.ptr());
  py::register_exception<TrainingDiverged>(m, "TrainingDiverged", base.ptr());

  m.attr("FRAME_MS") = kFrameMs;
  m.attr("BLANK_FRAMES") = kBlankFrames;
  m.attr("MOTOR_NAMES") = std::vector<std::string>(kMotorNames.begin(), kMotorNames.end());
  m.attr("FEATURE_NAMES") = std::vector<std::string>(kFeatureNames.begin(), kFeatureNames.end());

  m.def("solve_ballistic",
        [](const Vec3& launch, const Vec3& target, double flight_s, const Vec3& gravity) {
          return solve_ballistic(launch, target, flight_s, gravity);
        },
        py::arg("launch"), py::arg("target"), py::arg("flight_s"), py::arg("gravity"));
  m.def("window_length", &window_length, py::arg("integration_ms"));
  m.def("horizon_frames_for_ms", &horizon_frames_for_ms, py::arg("ms"));
  m.def("split_counts", [](int n) {
    const auto c = split_counts(n);
    return py::make_tuple(c.train, c.validation, c.test);
  }, py::arg("trials"));

  py::class_<TrajectoryConfig>(m, "TrajectoryConfig")
      .def(py::init<>())
      .def_readwrite("launch_distance", &TrajectoryConfig::launch_distance)
      .def_readwrite("target_plane_distance", &TrajectoryConfig::target_plane_distance)
      .def_readwrite("blank_duration", &TrajectoryConfig::blank_duration)
      .def_readwrite("ball_radius", &TrajectoryConfig::ball_radius)
      .def_readwrite("gravity", &TrajectoryConfig::gravity)
      .def("validate", &TrajectoryConfig::validate);

  py::class_<AgentParams>(m, "AgentParams")
      .def(py::init<>())
      .def_static("noiseless", &AgentParams::noiseless)
      .def_readwrite("pursuit_gain_target", &AgentParams::pursuit_gain_target)
      .def_readwrite("gaze_lag_ms", &AgentParams::gaze_lag_ms)
      .def_readwrite("gaze_noise_sd", &AgentParams::gaze_noise_sd)
      .def_readwrite("reach_noise_sd", &AgentParams::reach_noise_sd)
      .def_readwrite("rotation_noise_sd", &AgentParams::rotation_noise_sd)
      .def_readwrite("paddle_radius", &AgentParams::paddle_radius)
      .def("validate", &AgentParams::validate);

  py::class_<RunConfig>(m, "RunConfig")
      .def(py::init<>())
      .def_readwrite("out_dir", &RunConfig::out_dir)
      .def_readwrite("seed", &RunConfig::seed)
      .def_readwrite("subjects", &RunConfig::subjects)
      .def_readwrite("trials_per_subject", &RunConfig::trials_per_subject)
      .def_readwrite("integration_ms", &RunConfig::integration_ms)
      .def_readwrite("horizons", &RunConfig::horizons)
      .def_readwrite("ablation_ms", &RunConfig::ablation_ms)
      .def_readwrite("desk_mode", &RunConfig::desk_mode)
      .def_readwrite("epochs_cap", &RunConfig::epochs_cap)
      .def_readwrite("ridge_lambda", &RunConfig::ridge_lambda)
      .def_readwrite("noiseless", &RunConfig::noiseless)
      .def_readwrite("workers", &RunConfig::workers)
      .def_readwrite("trajectory", &RunConfig::trajectory)
      .def_readwrite("agent", &RunConfig::agent)
      .def("effective_horizons", &RunConfig::effective_horizons);

  py::class_<Trial>(m, "Trial")
      .def_property_readonly("trial_id", &Trial::trial_id)
      .def_readonly("subject_id", &Trial::subject_id)
      .def_readonly("caught", &Trial::caught)
      .def_property_readonly("ball_positions", &ball_positions)
      .def_property_readonly("visible", &visibility)
      .def_property_readonly("motor", &motor_matrix);

  py::class_<FeaturizedTrial>(m, "FeaturizedTrial")
      .def_readonly("trial_id", &FeaturizedTrial::trial_id)
      .def_readonly("subject_id", &FeaturizedTrial::subject_id)
      .def_readonly("caught", &FeaturizedTrial::caught)
      .def_readonly("blank_onset", &FeaturizedTrial::blank_onset)
      .def_readonly("reappearance", &FeaturizedTrial::reappearance)
      .def_property_readonly("partition",
                             [](const FeaturizedTrial& t) { return std::string(partition_name(t.partition)); })
      .def_readonly("features", &FeaturizedTrial::features);

  py::class_<Normalizer>(m, "Normalizer")
      .def_property_readonly("mean", &Normalizer::mean)
      .def_property_readonly("sd", &Normalizer::sd)
      .def("apply", &Normalizer::apply, py::arg("frames"))
      .def("invert", &Normalizer::invert, py::arg("frames"));

  m.def("simulate", &simulate_population, py::arg("config"),
        py::call_guard<py::gil_scoped_release>());
  m.def("featurize",
        [](const std::vector<Trial>& trials, double ball_radius, std::uint64_t split_seed) {
          auto out = featurize_all(trials, ball_radius);
          split_dataset(out, split_seed);
          return out;
        },
        py::arg("trials"), py::arg("ball_radius") = 0.03, py::arg("split_seed") = 2024);
  m.def("fit_normalizer",
        [](const std::vector<FeaturizedTrial>& trials) { return fit_normalizer(trials); },
        py::arg("trials"));
  m.def("summarize_behavior",
        [](const std::vector<FeaturizedTrial>& trials) { return summary_dict(summarize_behavior(trials)); },
        py::arg("trials"));

  m.def("run_pipeline", &run_pipeline, py::arg("config"), py::call_guard<py::gil_scoped_release>());
  m.def("simulate_stage", &cmd_simulate, py::arg("config"));
  m.def("featurize_stage", &cmd_featurize, py::arg("config"));
  m.def("train_stage", &cmd_train, py::arg("config"), py::call_guard<py::gil_scoped_release>());
  m.def("report_stage", &cmd_report, py::arg("config"));
}
