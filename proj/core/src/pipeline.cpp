#include "evactrack/pipeline.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>

#include <json.hpp>

#include "evactrack/ingest.hpp"

namespace evactrack::pipeline {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

geometry::CameraModel preset_camera(const std::string& id, geometry::WorldPoint position,
                                    geometry::AxisMapping mapping) {
  geometry::DepthModel depth({14.3829, -0.035047, 1.2e-5}, {40.0, 460.0});
  geometry::WidthModel width({0.0257, -4.2857e-5}, {40.0, 460.0});
  return geometry::make_camera_model({id, position, mapping, 320.0}, std::move(depth),
                                     std::move(width));
}

std::vector<geometry::CameraModel> preset_cameras() {
  std::vector<geometry::CameraModel> cams;
  cams.push_back(preset_camera("entry", {6.0, 8.0}, geometry::AxisMapping::PlusXMinusY));
  cams.push_back(preset_camera("room", {-0.5, 1.0}, geometry::AxisMapping::SwapPlusMinus));
  cams.push_back(preset_camera("hallway", {11.0, -0.6}, geometry::AxisMapping::PlusXPlusY));
  cams.push_back(preset_camera("exit", {11.0, 14.5}, geometry::AxisMapping::PlusXMinusY));
  return cams;
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) raise(ErrorCode::IoError, "cannot create directory " + dir.string() + ": " + ec.message());
}

void write_run_meta(const fs::path& path, const RunOptions& options) {
  json doc;
  doc["format"] = "evactrack-run-meta";
  doc["version"] = 1;
  doc["environment_id"] = options.spec.environment_id;
  doc["seed"] = options.spec.scenario.seed;
  doc["n_subjects"] = options.spec.n_subjects;
  doc["jitter"] = options.spec.jitter;
  doc["sample_rate_hz"] = options.spec.scenario.sample_rate_hz;
  doc["environment_scale"] = options.spec.scenario.environment_scale;
  doc["pixel_noise_sigma"] = options.spec.scenario.pixel_noise_sigma;
  doc["world_noise_sigma"] = options.spec.scenario.world_noise_sigma;
  doc["stages"] = {
      {"sg", {{"window", options.stages.sg.window}, {"order", options.stages.sg.order}}},
      {"lag",
       {{"lag_frames", options.stages.lag.lag_frames},
        {"include_relative_distance", options.stages.lag.include_relative_distance},
        {"sample_rate_hz", options.stages.lag.sample_rate_hz}}},
      {"gbt",
       {{"rounds", options.stages.hp.rounds},
        {"max_depth", options.stages.hp.max_depth},
        {"learning_rate", options.stages.hp.learning_rate},
        {"lambda", options.stages.hp.lambda},
        {"gamma", options.stages.hp.gamma},
        {"min_child_weight", options.stages.hp.min_child_weight}}},
      {"confidence_threshold", options.stages.confidence_threshold},
      {"scaler_policy", "per-environment, refit per training fold"}};
  doc["exclusions"] = options.exclusions;
  doc["file_format_versions"] = {{"track", 1},      {"dataset", 1}, {"scaler", 1},
                                 {"camera", 1},     {"calibration", 1}, {"report", 1},
                                 {"boxplot", 1},    {"gbt", 1},     {"scenario", 1},
                                 {"run-meta", 1}};
  std::ofstream out(path);
  if (!out) raise(ErrorCode::IoError, "cannot write " + path.string());
  out << doc.dump(1) << '\n';
}

}  // namespace

CohortResult build_cohort(const RunOptions& options) {
  const auto& spec = options.spec;
  dataset::validate(options.stages.lag);
  filter::validate(options.stages.sg);
  gbt::validate(options.stages.hp);
  if (std::abs(options.stages.lag.sample_rate_hz - spec.scenario.sample_rate_hz) > 1e-9)
    raise(ErrorCode::InvalidConfig, "lag config sample rate does not match the scenario rate");

  const fs::path out_dir(options.out_dir);
  ensure_dir(out_dir);
  ensure_dir(out_dir / "calibration");
  ensure_dir(out_dir / "datasets");
  if (options.write_tracks) ensure_dir(out_dir / "tracks");

  io::write_simulation_spec((out_dir / "scenario.json").string(), spec);

  CohortResult data;
  for (const auto& truth_cam : simgen::effective_cameras(spec.scenario)) {
    const auto input = simgen::export_calibration(truth_cam, 12);
    io::write_calibration_input(
        (out_dir / "calibration" / (truth_cam.pose.camera_id + "_measurements.json")).string(),
        input);
    geometry::FitDiagnostics depth_diag, width_diag;
    auto fitted = geometry::fit_calibration(input, &depth_diag, &width_diag);
    io::write_camera_model(
        (out_dir / "calibration" / (truth_cam.pose.camera_id + "_model.json")).string(), fitted,
        &depth_diag, &width_diag);
    data.fitted_cameras.push_back(std::move(fitted));
  }

  const auto cohort = simgen::make_cohort(spec.scenario, spec.n_subjects, spec.jitter);
  for (const auto& scenario : cohort) {
    if (options.write_observations) {
      const fs::path subject_dir = out_dir / "scenarios" / ("subject_" + scenario.subject_id);
      ensure_dir(subject_dir);
      for (const auto& obs : scenario.observations) {
        io::write_pose_frames_file((subject_dir / (obs.camera_id + "_keypoints.jsonl")).string(),
                                   obs.subject_frames);
        io::write_robot_detections_file((subject_dir / (obs.camera_id + "_robot.csv")).string(),
                                        obs.robot_detections);
      }
    }

    auto run = reconstruct(scenario, data.fitted_cameras, options.stages);
    run.subject_id = scenario.subject_id;
    if (options.write_tracks) {
      io::write_track(
          (out_dir / "tracks" / ("subject_" + scenario.subject_id + "_subject.csv")).string(),
          run.subject);
      io::write_track(
          (out_dir / "tracks" / ("subject_" + scenario.subject_id + "_robot.csv")).string(),
          run.robot);
    }

    eval::SubjectDataset sd;
    sd.subject_id = scenario.subject_id;
    sd.rows = dataset::build_lagged_rows(run.subject, run.robot, options.stages.lag,
                                         scenario.subject_id);
    dataset::check_no_leakage(sd.rows);

    io::DatasetFile file;
    file.environment_id = spec.environment_id;
    file.lag = options.stages.lag;
    file.scaled = false;
    file.subject_id = scenario.subject_id;
    file.rows = sd.rows;
    io::write_dataset(
        (out_dir / "datasets" / ("subject_" + scenario.subject_id + ".csv")).string(), file);
    data.subjects.push_back(std::move(sd));
  }

  std::vector<dataset::FeatureRow> all_rows;
  for (const auto& s : data.subjects) all_rows.insert(all_rows.end(), s.rows.begin(), s.rows.end());
  const auto scaler =
      dataset::fit_minmax_scaler(all_rows, options.stages.lag.include_relative_distance);
  io::write_scaler((out_dir / "datasets" / "scaler.json").string(), scaler);

  write_run_meta(out_dir / "run_meta.json", options);
  return data;
}

io::SimulationSpec physical_preset(std::uint64_t seed) {
  io::SimulationSpec spec;
  spec.environment_id = "physical";
  spec.n_subjects = 12;
  spec.jitter = 0.15;
  spec.scenario.seed = seed;
  spec.scenario.waypoints = {{2.5, 1.0}, {11.0, 1.0}, {11.0, 9.0}};
  spec.scenario.robot_speed = 1.0;
  spec.scenario.follow_distance = 1.2;
  spec.scenario.follower_gain = 2.0;
  spec.scenario.follower_delay = 0.3;
  spec.scenario.sample_rate_hz = 40.0;
  spec.scenario.world_noise_sigma = 0.0;
  spec.scenario.pixel_noise_sigma = 0.4;
  spec.scenario.environment_scale = 1.0;
  spec.scenario.cameras = preset_cameras();
  return spec;
}

io::SimulationSpec sim1hz_preset(std::uint64_t seed) {
  io::SimulationSpec spec;
  spec.environment_id = "sim-1hz";
  spec.n_subjects = 5;
  spec.jitter = 0.2;
  spec.scenario.seed = seed;
  spec.scenario.waypoints = {{11.0, 9.0}, {11.0, 1.0}, {2.5, 1.0}};
  spec.scenario.robot_speed = 0.9;
  spec.scenario.follow_distance = 1.0;
  spec.scenario.follower_gain = 1.5;
  spec.scenario.follower_delay = 0.5;
  spec.scenario.sample_rate_hz = 1.0;
  spec.scenario.world_noise_sigma = 0.0;
  spec.scenario.pixel_noise_sigma = 0.7;
  spec.scenario.environment_scale = 10.0;
  spec.scenario.cameras = preset_cameras();
  return spec;
}

io::SimulationSpec preset_by_name(const std::string& name, std::uint64_t seed) {
  if (name == "physical-40hz") return physical_preset(seed);
  if (name == "sim-1hz") return sim1hz_preset(seed);
  raise(ErrorCode::InvalidConfig,
        "unknown preset " + name + " (expected physical-40hz or sim-1hz)");
}

filter::SgConfig default_sg_for(const io::SimulationSpec& spec) {
  if (spec.scenario.sample_rate_hz >= 10.0) return {31, 3, 0};
  return {5, 2, 0};
}

dataset::LagConfig default_lag_for(const io::SimulationSpec& spec) {
  dataset::LagConfig lag;
  lag.lag_frames = spec.scenario.sample_rate_hz >= 10.0 ? 10 : 1;
  lag.include_relative_distance = true;
  lag.sample_rate_hz = spec.scenario.sample_rate_hz;
  return lag;
}

geometry::StitchOptions default_stitch_for(const io::SimulationSpec& spec) {
  // The conflict guard is a sanity bound on cross-camera disagreement, so it
  // grows with the environment's coordinate scale.
  return {1.0 * spec.scenario.environment_scale};
}

ReconstructedRun reconstruct(const simgen::Scenario& scenario,
                             std::span<const geometry::CameraModel> cameras,
                             const StageConfigs& stages) {
  std::map<std::string, const geometry::CameraModel*> by_id;
  for (const auto& cam : cameras) by_id[cam.pose.camera_id] = &cam;

  const double rate = scenario.subject_truth.sample_rate_hz;
  const ingest::ExtractConfig extract_cfg{stages.confidence_threshold};
  std::vector<geometry::WorldTrack> subject_segments;
  std::vector<geometry::WorldTrack> robot_segments;

  for (const auto& obs : scenario.observations) {
    const auto it = by_id.find(obs.camera_id);
    if (it == by_id.end())
      raise(ErrorCode::InvalidConfig, "no fitted camera model for " + obs.camera_id);
    const auto& cam = *it->second;

    if (obs.subject_frames.size() >= 2) {
      auto pixel = ingest::extract_subject_track(obs.subject_frames, extract_cfg, obs.camera_id,
                                                 rate);
      if (pixel.samples.size() >= 2)
        subject_segments.push_back(ingest::pixel_track_to_world(ingest::fill_gaps(pixel), cam));
    }
    if (obs.robot_detections.size() >= 2) {
      auto pixel = ingest::extract_robot_track(obs.robot_detections, stages.confidence_threshold,
                                               obs.camera_id, rate);
      if (pixel.samples.size() >= 2)
        robot_segments.push_back(ingest::pixel_track_to_world(ingest::fill_gaps(pixel), cam));
    }
  }

  auto subject = geometry::stitch_tracks(subject_segments, stages.stitch);
  auto robot = geometry::stitch_tracks(robot_segments, stages.stitch);
  auto [subject_aligned, robot_aligned] = geometry::align_tracks(subject, robot);

  ReconstructedRun run;
  run.subject_id = scenario.subject_id;
  run.subject = filter::smooth_track(subject_aligned, stages.sg);
  run.robot = filter::smooth_track(robot_aligned, stages.sg);
  return run;
}

RunResult run_pipeline(const RunOptions& options) {
  CohortResult data = build_cohort(options);
  RunResult result;
  result.report = eval::leave_one_subject_out(data.subjects, options.stages.lag,
                                              options.stages.hp, options.exclusions);
  result.subjects = std::move(data.subjects);
  result.fitted_cameras = std::move(data.fitted_cameras);

  const fs::path out_dir(options.out_dir);
  result.report_path = (out_dir / "report.csv").string();
  io::write_report(result.report_path, result.report);
  io::write_boxplot((out_dir / "boxplot.csv").string(), result.report);
  return result;
}

RunResult run_transfer(const TransferOptions& options) {
  CohortResult train = build_cohort(options.train);
  CohortResult test = build_cohort(options.test);

  RunResult result;
  result.report = eval::evaluate_transfer(train.subjects, options.train.stages.lag, test.subjects,
                                          options.test.stages.lag, options.train.stages.hp);
  result.subjects = std::move(test.subjects);
  result.fitted_cameras = std::move(test.fitted_cameras);

  const fs::path out_dir(options.out_dir);
  ensure_dir(out_dir);
  result.report_path = (out_dir / "report.csv").string();
  io::write_report(result.report_path, result.report);
  io::write_boxplot((out_dir / "boxplot.csv").string(), result.report);
  return result;
}

double bbox_diagonal(std::span<const eval::SubjectDataset> subjects) {
  const double inf = std::numeric_limits<double>::infinity();
  double min_x = inf, max_x = -inf, min_y = inf, max_y = -inf;
  bool any = false;
  for (const auto& s : subjects) {
    for (const auto& r : s.rows) {
      for (double v : {r.xs_lag, r.xr_lag, r.target_x}) {
        min_x = std::min(min_x, v);
        max_x = std::max(max_x, v);
      }
      for (double v : {r.ys_lag, r.yr_lag, r.target_y}) {
        min_y = std::min(min_y, v);
        max_y = std::max(max_y, v);
      }
      any = true;
    }
  }
  if (!any) raise(ErrorCode::EmptyInput, "no rows to bound");
  return std::hypot(max_x - min_x, max_y - min_y);
}

}  // namespace evactrack::pipeline
