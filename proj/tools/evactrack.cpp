// evactrack: command line front end for the evacuee motion pipeline.
//
// Stage-per-command layout; every command takes --out <dir>, writes fixed
// file names inside it, and drops a run_meta.json describing the parameters
// and file format versions. Log level comes from EVACTRACK_LOG
// (error|warn|info|debug, default warn).

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "evactrack/errors.hpp"
#include "evactrack/eval.hpp"
#include "evactrack/gbt.hpp"
#include "evactrack/ingest.hpp"
#include "evactrack/io.hpp"
#include "evactrack/pipeline.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace evactrack;

namespace {

enum class LogLevel { Error = 0, Warn = 1, Info = 2, Debug = 3 };

LogLevel g_log_level = LogLevel::Warn;

LogLevel log_level_from_env() {
  const char* raw = std::getenv("EVACTRACK_LOG");
  if (!raw) return LogLevel::Warn;
  std::string v(raw);
  std::transform(v.begin(), v.end(), v.begin(), [](unsigned char c) { return std::tolower(c); });
  if (v == "error") return LogLevel::Error;
  if (v == "warn" || v == "warning") return LogLevel::Warn;
  if (v == "info") return LogLevel::Info;
  if (v == "debug") return LogLevel::Debug;
  return LogLevel::Warn;
}

void log_at(LogLevel level, const std::string& tag, const std::string& msg) {
  if (level <= g_log_level) std::cerr << "[" << tag << "] " << msg << "\n";
}

void log_info(const std::string& msg) { log_at(LogLevel::Info, "info", msg); }
void log_debug(const std::string& msg) { log_at(LogLevel::Debug, "debug", msg); }

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) raise(ErrorCode::IoError, "cannot create directory " + dir.string() + ": " + ec.message());
}

json format_versions() {
  return json{{"track", 1},   {"dataset", 1},     {"scaler", 1}, {"camera", 1},
              {"calibration", 1}, {"report", 1},  {"boxplot", 1}, {"gbt", 1},
              {"scenario", 1}, {"run-meta", 1}};
}

void write_meta(const fs::path& dir, const std::string& command, json parameters) {
  json doc;
  doc["format"] = "evactrack-run-meta";
  doc["version"] = 1;
  doc["command"] = command;
  doc["parameters"] = std::move(parameters);
  doc["file_format_versions"] = format_versions();
  const fs::path path = dir / "run_meta.json";
  std::ofstream out(path);
  if (!out) raise(ErrorCode::IoError, "cannot write " + path.string());
  out << doc.dump(1) << '\n';
}

// Options shared by the cohort-level commands. Negative values mean "not
// set": filled from --config, then from the preset defaults.
struct CommonOpts {
  std::string config_path;
  std::string preset = "physical-40hz";
  std::uint64_t seed = 7;
  int subjects = -1;
  double jitter = -1.0;
  int lag = -1;
  int window = -1;
  int order = -1;
  int rounds = -1;
  int depth = -1;
  double eta = -1.0;
  double lambda = -1.0;
  double gamma = -1.0;
  double min_child_weight = -1.0;
  double confidence = -1.0;
  std::vector<std::string> exclude;
  std::string out = "evactrack_out";
};

void add_common_options(CLI::App* cmd, CommonOpts& o, bool with_preset = true) {
  cmd->add_option("--config", o.config_path, "JSON config file; flags override its values");
  if (with_preset)
    cmd->add_option("--preset", o.preset, "physical-40hz or sim-1hz")
        ->default_str("physical-40hz");
  cmd->add_option("--seed", o.seed, "simulation seed")->default_str("7");
  if (with_preset) {
    cmd->add_option("--subjects", o.subjects, "cohort size");
    cmd->add_option("--jitter", o.jitter, "cohort parameter jitter");
  }
  cmd->add_option("--lag", o.lag, "lag in frames");
  cmd->add_option("--window", o.window, "Savitzky-Golay window (odd)");
  cmd->add_option("--order", o.order, "Savitzky-Golay polynomial order");
  cmd->add_option("--rounds", o.rounds, "boosting rounds");
  cmd->add_option("--depth", o.depth, "tree max depth");
  cmd->add_option("--eta", o.eta, "learning rate");
  cmd->add_option("--lambda", o.lambda, "L2 leaf regularization");
  cmd->add_option("--gamma", o.gamma, "minimum split gain");
  cmd->add_option("--min-child-weight", o.min_child_weight, "minimum child hessian sum");
  cmd->add_option("--confidence", o.confidence, "keypoint confidence threshold");
  cmd->add_option("--exclude", o.exclude, "subject ids to exclude")->delimiter(',');
  cmd->add_option("--out", o.out, "output directory")->default_str("evactrack_out");
}

// Fills options the user did not pass on the command line from the config
// file, so precedence is defaults < config < flags.
void apply_config(const CLI::App* cmd, CommonOpts& o) {
  if (o.config_path.empty()) return;
  std::ifstream in(o.config_path);
  if (!in) raise(ErrorCode::IoError, "cannot open config " + o.config_path);
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::exception& e) {
    raise(ErrorCode::InvalidConfig, o.config_path + ": " + e.what());
  }

  auto unset = [&](const char* flag) {
    const CLI::Option* opt = cmd->get_option_no_throw(flag);
    return opt == nullptr || opt->count() == 0;
  };
  try {
    if (doc.contains("preset") && unset("--preset")) o.preset = doc["preset"].get<std::string>();
    if (doc.contains("seed") && unset("--seed")) o.seed = doc["seed"].get<std::uint64_t>();
    if (doc.contains("subjects") && unset("--subjects")) o.subjects = doc["subjects"].get<int>();
    if (doc.contains("jitter") && unset("--jitter")) o.jitter = doc["jitter"].get<double>();
    if (doc.contains("lag") && unset("--lag")) o.lag = doc["lag"].get<int>();
    if (doc.contains("window") && unset("--window")) o.window = doc["window"].get<int>();
    if (doc.contains("order") && unset("--order")) o.order = doc["order"].get<int>();
    if (doc.contains("rounds") && unset("--rounds")) o.rounds = doc["rounds"].get<int>();
    if (doc.contains("depth") && unset("--depth")) o.depth = doc["depth"].get<int>();
    if (doc.contains("eta") && unset("--eta")) o.eta = doc["eta"].get<double>();
    if (doc.contains("lambda") && unset("--lambda")) o.lambda = doc["lambda"].get<double>();
    if (doc.contains("gamma") && unset("--gamma")) o.gamma = doc["gamma"].get<double>();
    if (doc.contains("min_child_weight") && unset("--min-child-weight"))
      o.min_child_weight = doc["min_child_weight"].get<double>();
    if (doc.contains("confidence") && unset("--confidence"))
      o.confidence = doc["confidence"].get<double>();
    if (doc.contains("exclude") && unset("--exclude"))
      o.exclude = doc["exclude"].get<std::vector<std::string>>();
    if (doc.contains("out") && unset("--out")) o.out = doc["out"].get<std::string>();
  } catch (const json::exception& e) {
    raise(ErrorCode::InvalidConfig, o.config_path + ": " + e.what());
  }
}

json opts_to_json(const CommonOpts& o) {
  return json{{"preset", o.preset},
              {"seed", o.seed},
              {"subjects", o.subjects},
              {"jitter", o.jitter},
              {"lag", o.lag},
              {"window", o.window},
              {"order", o.order},
              {"rounds", o.rounds},
              {"depth", o.depth},
              {"eta", o.eta},
              {"lambda", o.lambda},
              {"gamma", o.gamma},
              {"min_child_weight", o.min_child_weight},
              {"confidence", o.confidence},
              {"exclude", o.exclude},
              {"out", o.out}};
}

pipeline::StageConfigs make_stage_configs(const io::SimulationSpec& spec, const CommonOpts& o) {
  pipeline::StageConfigs stages;
  stages.sg = pipeline::default_sg_for(spec);
  stages.lag = pipeline::default_lag_for(spec);
  stages.stitch = pipeline::default_stitch_for(spec);
  if (o.window > 0) stages.sg.window = o.window;
  if (o.order >= 0) stages.sg.order = o.order;
  if (o.lag > 0) stages.lag.lag_frames = o.lag;
  if (o.rounds > 0) stages.hp.rounds = o.rounds;
  if (o.depth > 0) stages.hp.max_depth = o.depth;
  if (o.eta > 0) stages.hp.learning_rate = o.eta;
  if (o.lambda >= 0) stages.hp.lambda = o.lambda;
  if (o.gamma >= 0) stages.hp.gamma = o.gamma;
  if (o.min_child_weight >= 0) stages.hp.min_child_weight = o.min_child_weight;
  if (o.confidence >= 0) stages.confidence_threshold = o.confidence;
  return stages;
}

pipeline::RunOptions make_run_options(const CommonOpts& o, const std::string& preset,
                                      std::uint64_t seed, const std::string& out_dir) {
  pipeline::RunOptions run;
  run.spec = pipeline::preset_by_name(preset, seed);
  if (o.subjects > 0) run.spec.n_subjects = o.subjects;
  if (o.jitter >= 0) run.spec.jitter = o.jitter;
  run.stages = make_stage_configs(run.spec, o);
  run.exclusions = o.exclude;
  run.out_dir = out_dir;
  return run;
}

// "physical" and "sim-1hz" are the environment names the reports use; map
// them (and the full preset names) onto presets.
std::string preset_for_env(const std::string& env) {
  if (env == "physical" || env == "physical-40hz") return "physical-40hz";
  if (env == "sim-1hz" || env == "sim") return "sim-1hz";
  raise(ErrorCode::InvalidConfig, "unknown environment " + env);
}

void print_report(const eval::FoldReport& report, const std::string& path) {
  for (const auto& fold : report.folds)
    log_debug("fold " + fold.holdout_id + ": mu_e=" + io::format_fixed(fold.mu_e, 6) +
              " sigma_e=" + io::format_fixed(fold.sigma_e, 6) +
              " n=" + std::to_string(fold.n_samples));
  std::cout << "mean mu_e=" << io::format_truncated3(report.aggregate.mu_e)
            << " m, sigma_e=" << io::format_truncated3(report.aggregate.sigma_e) << " m over "
            << report.folds.size() << " folds (" << path << ")\n";
}

std::vector<eval::SubjectDataset> load_subject_datasets(const std::string& dir,
                                                        dataset::LagConfig* lag_out,
                                                        std::string* env_out) {
  std::vector<std::string> paths;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    const std::string name = entry.path().filename().string();
    if (name.rfind("subject_", 0) == 0 && entry.path().extension() == ".csv")
      paths.push_back(entry.path().string());
  }
  if (paths.empty()) raise(ErrorCode::EmptyInput, "no subject_*.csv files in " + dir);
  std::sort(paths.begin(), paths.end());

  std::vector<eval::SubjectDataset> subjects;
  dataset::LagConfig lag;
  std::string env;
  for (const auto& path : paths) {
    io::DatasetFile file = io::read_dataset(path);
    if (file.scaled)
      raise(ErrorCode::InvalidConfig, path + ": expected unscaled rows; scalers are refit per fold");
    if (subjects.empty()) {
      lag = file.lag;
      env = file.environment_id;
    } else if (file.lag.lag_frames != lag.lag_frames ||
               file.lag.include_relative_distance != lag.include_relative_distance ||
               std::abs(file.lag.sample_rate_hz - lag.sample_rate_hz) > 1e-9 ||
               file.environment_id != env) {
      raise(ErrorCode::InvalidConfig, path + ": lag or environment differs from the other files");
    }
    subjects.push_back({file.subject_id, std::move(file.rows)});
  }
  auto numeric = [](const std::string& s) {
    return !s.empty() && std::all_of(s.begin(), s.end(), [](unsigned char c) { return std::isdigit(c); });
  };
  std::sort(subjects.begin(), subjects.end(), [&](const auto& a, const auto& b) {
    if (numeric(a.subject_id) && numeric(b.subject_id))
      return std::stol(a.subject_id) < std::stol(b.subject_id);
    return a.subject_id < b.subject_id;
  });
  if (lag_out) *lag_out = lag;
  if (env_out) *env_out = env;
  return subjects;
}

// --- subcommand bodies ---

int cmd_calibrate(const std::vector<std::string>& inputs, const std::string& out) {
  ensure_dir(out);
  std::string report = "# evactrack-calibration-report v1 cameras=" + std::to_string(inputs.size()) +
                       "\ncamera_id,depth_rms_m,depth_condition,width_rms_m,width_condition\n";
  for (const auto& path : inputs) {
    const auto input = io::read_calibration_input(path);
    geometry::FitDiagnostics depth_diag, width_diag;
    std::optional<geometry::CameraModel> model;
    try {
      model = geometry::fit_calibration(input, &depth_diag, &width_diag);
    } catch (const Error& e) {
      raise(e.code(), "camera " + input.camera_id + " (" + path + "): " + e.what());
    }
    const std::string model_path =
        (fs::path(out) / (input.camera_id + "_model.json")).string();
    io::write_camera_model(model_path, *model, &depth_diag, &width_diag);
    char row[256];
    std::snprintf(row, sizeof(row), "%s,%.9g,%.9g,%.9g,%.9g\n", input.camera_id.c_str(),
                  depth_diag.rms, depth_diag.condition_number, width_diag.rms,
                  width_diag.condition_number);
    report += row;
    log_info("calibrated " + input.camera_id + ": depth rms " + io::format_fixed(depth_diag.rms, 6) +
             " m, width rms " + io::format_fixed(width_diag.rms, 6) + " m");
  }
  const fs::path report_path = fs::path(out) / "calibration_report.csv";
  std::ofstream rout(report_path);
  if (!rout) raise(ErrorCode::IoError, "cannot write " + report_path.string());
  rout << report;
  write_meta(out, "calibrate", json{{"inputs", inputs}, {"out", out}});
  std::cout << "calibrated " << inputs.size() << " camera(s) -> " << out << "\n";
  return 0;
}

int cmd_ingest(const std::vector<std::string>& cameras, const std::vector<std::string>& keypoints,
               const std::vector<std::string>& robots, double fps, double confidence,
               const std::string& out) {
  if (keypoints.empty() && robots.empty())
    raise(ErrorCode::InvalidConfig, "need at least one of --keypoints or --robot");
  if (!keypoints.empty() && keypoints.size() != cameras.size())
    raise(ErrorCode::InvalidConfig, "--keypoints count must match --camera count");
  if (!robots.empty() && robots.size() != cameras.size())
    raise(ErrorCode::InvalidConfig, "--robot count must match --camera count");
  ensure_dir(out);

  std::vector<geometry::CameraModel> models;
  for (const auto& path : cameras) models.push_back(io::read_camera_model(path));

  const ingest::ExtractConfig extract_cfg{confidence};
  auto ingest_streams = [&](bool subject) {
    std::vector<geometry::WorldTrack> segments;
    const auto& paths = subject ? keypoints : robots;
    for (std::size_t i = 0; i < paths.size(); ++i) {
      const auto& cam = models[i];
      ingest::PixelTrack pixel;
      if (subject) {
        const auto frames = ingest::parse_pose_frames_file(paths[i]);
        pixel = ingest::extract_subject_track(frames, extract_cfg, cam.pose.camera_id, fps);
      } else {
        const auto detections = ingest::parse_robot_detections_file(paths[i]);
        pixel = ingest::extract_robot_track(detections, confidence, cam.pose.camera_id, fps);
      }
      segments.push_back(ingest::pixel_track_to_world(ingest::fill_gaps(pixel), cam));
      log_debug(paths[i] + ": " + std::to_string(segments.back().samples.size()) + " samples");
    }
    return geometry::stitch_tracks(segments);
  };

  json meta{{"cameras", cameras}, {"fps", fps}, {"confidence", confidence}, {"out", out}};
  if (!keypoints.empty()) {
    const auto track = ingest_streams(true);
    io::write_track((fs::path(out) / "subject.csv").string(), track);
    meta["keypoints"] = keypoints;
    std::cout << "subject track: " << track.samples.size() << " samples -> " << out
              << "/subject.csv\n";
  }
  if (!robots.empty()) {
    const auto track = ingest_streams(false);
    io::write_track((fs::path(out) / "robot.csv").string(), track);
    meta["robot"] = robots;
    std::cout << "robot track: " << track.samples.size() << " samples -> " << out
              << "/robot.csv\n";
  }
  write_meta(out, "ingest", std::move(meta));
  return 0;
}

int cmd_smooth(const std::string& in, int window, int order, const std::string& out) {
  auto track = io::read_track(in);
  geometry::validate_uniform_sampling(track);
  const filter::SgConfig cfg{window, order, 0};
  const auto smoothed = filter::smooth_track(track, cfg);
  ensure_dir(out);
  io::write_track((fs::path(out) / "smoothed.csv").string(), smoothed);
  write_meta(out, "smooth", json{{"in", in}, {"window", window}, {"order", order}, {"out", out}});
  std::cout << "smoothed " << smoothed.samples.size() << " samples -> " << out << "/smoothed.csv\n";
  return 0;
}

int cmd_dataset(const std::string& subject_path, const std::string& robot_path, int lag_frames,
                bool no_rel, const std::string& env, const std::string& subject_id,
                const std::string& out) {
  const auto subject = io::read_track(subject_path);
  const auto robot = io::read_track(robot_path);
  const auto [subject_aligned, robot_aligned] = geometry::align_tracks(subject, robot);

  dataset::LagConfig lag;
  lag.lag_frames = lag_frames;
  lag.include_relative_distance = !no_rel;
  lag.sample_rate_hz = subject_aligned.sample_rate_hz;

  io::DatasetFile file;
  file.environment_id = env;
  file.lag = lag;
  file.scaled = false;
  file.subject_id = subject_id;
  file.rows = dataset::build_lagged_rows(subject_aligned, robot_aligned, lag, subject_id);
  dataset::check_no_leakage(file.rows);

  ensure_dir(out);
  io::write_dataset((fs::path(out) / "dataset.csv").string(), file);
  write_meta(out, "dataset",
             json{{"subject", subject_path},
                  {"robot", robot_path},
                  {"lag", lag_frames},
                  {"include_relative_distance", !no_rel},
                  {"environment", env},
                  {"subject_id", subject_id},
                  {"out", out}});
  std::cout << file.rows.size() << " rows -> " << out << "/dataset.csv\n";
  return 0;
}

int cmd_train(CLI::App* cmd, CommonOpts& o, const std::string& datasets_dir) {
  apply_config(cmd, o);
  ensure_dir(o.out);

  std::vector<eval::SubjectDataset> subjects;
  dataset::LagConfig lag;
  std::string env;
  if (!datasets_dir.empty()) {
    subjects = load_subject_datasets(datasets_dir, &lag, &env);
    if (o.lag > 0 && o.lag != lag.lag_frames)
      raise(ErrorCode::InvalidConfig, "--lag disagrees with the dataset files");
  } else {
    auto run = make_run_options(o, o.preset, o.seed, (fs::path(o.out) / "cohort").string());
    log_info("building training cohort (" + std::to_string(run.spec.n_subjects) + " subjects, seed " +
             std::to_string(run.spec.scenario.seed) + ")");
    auto cohort = pipeline::build_cohort(run);
    subjects = std::move(cohort.subjects);
    lag = run.stages.lag;
    env = run.spec.environment_id;
  }

  std::vector<dataset::FeatureRow> rows;
  for (const auto& s : subjects) {
    if (std::find(o.exclude.begin(), o.exclude.end(), s.subject_id) != o.exclude.end()) continue;
    rows.insert(rows.end(), s.rows.begin(), s.rows.end());
  }
  const auto scaler = dataset::fit_minmax_scaler(rows, lag.include_relative_distance);

  dataset::SupervisedDataset ds;
  ds.environment_id = env;
  ds.lag = lag;
  ds.scaler = scaler;
  ds.rows = dataset::apply_scaler(rows, scaler, lag.include_relative_distance);

  pipeline::StageConfigs stages = make_stage_configs(pipeline::preset_by_name(o.preset, o.seed), o);
  const auto model = gbt::train(ds, stages.hp);
  gbt::save_model(model, (fs::path(o.out) / "model.json").string());
  io::write_scaler((fs::path(o.out) / "scaler.json").string(), scaler);

  json meta = opts_to_json(o);
  meta["datasets"] = datasets_dir;
  meta["environment"] = env;
  meta["rows"] = rows.size();
  write_meta(o.out, "train", std::move(meta));
  std::cout << "trained on " << rows.size() << " rows (" << subjects.size() << " subjects, lag "
            << lag.lag_frames << ") -> " << o.out << "/model.json\n";
  return 0;
}

int cmd_evaluate(CLI::App* cmd, CommonOpts& o, const std::string& datasets_dir,
                 const std::string& train_env, const std::string& test_env) {
  apply_config(cmd, o);
  if (!train_env.empty() || !test_env.empty()) {
    if (train_env.empty() || test_env.empty())
      raise(ErrorCode::InvalidConfig, "--train-env and --test-env must be given together");
    pipeline::TransferOptions transfer;
    transfer.train = make_run_options(o, preset_for_env(train_env), o.seed,
                                      (fs::path(o.out) / "train").string());
    CommonOpts test_opts = o;
    // Per-environment stage defaults; only the GBT flags carry over.
    test_opts.lag = -1;
    test_opts.window = -1;
    test_opts.order = -1;
    test_opts.subjects = -1;
    test_opts.jitter = -1.0;
    transfer.test = make_run_options(test_opts, preset_for_env(test_env), o.seed + 1,
                                     (fs::path(o.out) / "test").string());
    transfer.out_dir = o.out;
    log_info("transfer: train on " + transfer.train.spec.environment_id + ", test on " +
             transfer.test.spec.environment_id);
    const auto result = pipeline::run_transfer(transfer);
    json meta = opts_to_json(o);
    meta["mode"] = "transfer";
    meta["train_env"] = transfer.train.spec.environment_id;
    meta["test_env"] = transfer.test.spec.environment_id;
    write_meta(o.out, "evaluate", std::move(meta));
    print_report(result.report, result.report_path);
    return 0;
  }

  if (!datasets_dir.empty()) {
    dataset::LagConfig lag;
    std::string env;
    const auto subjects = load_subject_datasets(datasets_dir, &lag, &env);
    pipeline::StageConfigs stages = make_stage_configs(pipeline::preset_by_name(o.preset, o.seed), o);
    const auto report = eval::leave_one_subject_out(subjects, lag, stages.hp, o.exclude);
    ensure_dir(o.out);
    const std::string report_path = (fs::path(o.out) / "report.csv").string();
    io::write_report(report_path, report);
    io::write_boxplot((fs::path(o.out) / "boxplot.csv").string(), report);
    json meta = opts_to_json(o);
    meta["mode"] = "loso-datasets";
    meta["datasets"] = datasets_dir;
    meta["environment"] = env;
    write_meta(o.out, "evaluate", std::move(meta));
    print_report(report, report_path);
    return 0;
  }

  const auto run = make_run_options(o, o.preset, o.seed, o.out);
  log_info("leave-one-subject-out on preset " + o.preset);
  const auto result = pipeline::run_pipeline(run);
  print_report(result.report, result.report_path);
  return 0;
}

int cmd_predict_track(const std::string& model_path, const std::string& scaler_path,
                      const std::string& subject_path, const std::string& robot_path,
                      int lag_frames, const std::string& out) {
  const auto model = gbt::load_model(model_path);
  const auto scaler = io::read_scaler(scaler_path);
  const auto subject = io::read_track(subject_path);
  const auto robot = io::read_track(robot_path);
  const auto [subject_aligned, robot_aligned] = geometry::align_tracks(subject, robot);

  dataset::LagConfig lag;
  lag.lag_frames = lag_frames;
  lag.include_relative_distance = model.feature_names.size() == 5;
  lag.sample_rate_hz = subject_aligned.sample_rate_hz;
  if (scaler.has_rel() != lag.include_relative_distance)
    raise(ErrorCode::DimensionMismatch, "scaler and model disagree on the relative-distance feature");

  const auto predicted = eval::predict_track(model, subject_aligned, robot_aligned, lag, scaler);
  ensure_dir(out);
  io::write_track((fs::path(out) / "predicted.csv").string(), predicted);
  write_meta(out, "predict-track",
             json{{"model", model_path},
                  {"scaler", scaler_path},
                  {"subject", subject_path},
                  {"robot", robot_path},
                  {"lag", lag_frames},
                  {"out", out}});
  std::cout << predicted.samples.size() << " predictions -> " << out << "/predicted.csv\n";
  return 0;
}

int cmd_simulate(CLI::App* cmd, CommonOpts& o) {
  apply_config(cmd, o);
  auto spec = pipeline::preset_by_name(o.preset, o.seed);
  if (o.subjects > 0) spec.n_subjects = o.subjects;
  if (o.jitter >= 0) spec.jitter = o.jitter;

  const fs::path out(o.out);
  ensure_dir(out / "calibration");
  ensure_dir(out / "truth");
  io::write_simulation_spec((out / "scenario.json").string(), spec);
  for (const auto& cam : spec.scenario.cameras) {
    const auto input = simgen::export_calibration(cam, 12);
    io::write_calibration_input(
        (out / "calibration" / (cam.pose.camera_id + "_measurements.json")).string(), input);
  }

  const auto cohort = simgen::make_cohort(spec.scenario, spec.n_subjects, spec.jitter);
  for (const auto& scenario : cohort) {
    const fs::path subject_dir = out / "scenarios" / ("subject_" + scenario.subject_id);
    ensure_dir(subject_dir);
    for (const auto& obs : scenario.observations) {
      io::write_pose_frames_file((subject_dir / (obs.camera_id + "_keypoints.jsonl")).string(),
                                 obs.subject_frames);
      io::write_robot_detections_file((subject_dir / (obs.camera_id + "_robot.csv")).string(),
                                      obs.robot_detections);
    }
    io::write_track((out / "truth" / ("subject_" + scenario.subject_id + "_subject.csv")).string(),
                    scenario.subject_truth);
    io::write_track((out / "truth" / ("subject_" + scenario.subject_id + "_robot.csv")).string(),
                    scenario.robot_truth);
    log_debug("simulated subject " + scenario.subject_id);
  }
  json meta = opts_to_json(o);
  meta["n_subjects"] = spec.n_subjects;
  write_meta(o.out, "simulate", std::move(meta));
  std::cout << "simulated " << cohort.size() << " subject(s) on " << spec.environment_id << " -> "
            << o.out << "\n";
  return 0;
}

int cmd_pipeline(CLI::App* cmd, CommonOpts& o) {
  apply_config(cmd, o);
  const auto run = make_run_options(o, o.preset, o.seed, o.out);
  log_info("pipeline: preset " + o.preset + ", " + std::to_string(run.spec.n_subjects) +
           " subjects, seed " + std::to_string(run.spec.scenario.seed));
  const auto result = pipeline::run_pipeline(run);
  print_report(result.report, result.report_path);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  g_log_level = log_level_from_env();

  CLI::App app{"evacuee motion model pipeline"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "evactrack 0.1.0");
  int exit_code = 0;

  // calibrate
  std::vector<std::string> cal_inputs;
  std::string cal_out = "evactrack_out";
  auto* calibrate = app.add_subcommand("calibrate", "fit camera models from measurement files");
  calibrate->add_option("inputs", cal_inputs, "calibration measurement JSON files")
      ->required()
      ->expected(-1);
  calibrate->add_option("--out", cal_out, "output directory")->default_str("evactrack_out");
  calibrate->callback([&] { exit_code = cmd_calibrate(cal_inputs, cal_out); });

  // ingest
  std::vector<std::string> ing_cams, ing_keypoints, ing_robots;
  double ing_fps = 40.0, ing_conf = 0.5;
  std::string ing_out = "evactrack_out";
  auto* ingest_cmd = app.add_subcommand("ingest", "detections to world-space tracks");
  ingest_cmd->add_option("--camera", ing_cams, "camera model files, one per stream")->required();
  ingest_cmd->add_option("--keypoints", ing_keypoints, "keypoint JSONL files (subject)");
  ingest_cmd->add_option("--robot", ing_robots, "robot detection CSV files");
  ingest_cmd->add_option("--fps", ing_fps, "frames per second")->default_str("40");
  ingest_cmd->add_option("--confidence", ing_conf, "confidence threshold")->default_str("0.5");
  ingest_cmd->add_option("--out", ing_out, "output directory")->default_str("evactrack_out");
  ingest_cmd->callback(
      [&] { exit_code = cmd_ingest(ing_cams, ing_keypoints, ing_robots, ing_fps, ing_conf, ing_out); });

  // smooth
  std::string sm_in, sm_out = "evactrack_out";
  int sm_window = 31, sm_order = 3;
  auto* smooth = app.add_subcommand("smooth", "Savitzky-Golay smoothing of a track");
  smooth->add_option("--in", sm_in, "track CSV")->required();
  smooth->add_option("--window", sm_window, "window length (odd)")->default_str("31");
  smooth->add_option("--order", sm_order, "polynomial order")->default_str("3");
  smooth->add_option("--out", sm_out, "output directory")->default_str("evactrack_out");
  smooth->callback([&] { exit_code = cmd_smooth(sm_in, sm_window, sm_order, sm_out); });

  // dataset
  std::string ds_subject, ds_robot, ds_env = "physical", ds_id = "1", ds_out = "evactrack_out";
  int ds_lag = 10;
  bool ds_no_rel = false;
  auto* dataset_cmd = app.add_subcommand("dataset", "build a lag-feature dataset from two tracks");
  dataset_cmd->add_option("--subject", ds_subject, "subject track CSV")->required();
  dataset_cmd->add_option("--robot", ds_robot, "robot track CSV")->required();
  dataset_cmd->add_option("--lag", ds_lag, "lag in frames")->default_str("10");
  dataset_cmd->add_flag("--no-rel", ds_no_rel, "omit the relative-distance feature");
  dataset_cmd->add_option("--env", ds_env, "environment id")->default_str("physical");
  dataset_cmd->add_option("--subject-id", ds_id, "subject id")->default_str("1");
  dataset_cmd->add_option("--out", ds_out, "output directory")->default_str("evactrack_out");
  dataset_cmd->callback(
      [&] { exit_code = cmd_dataset(ds_subject, ds_robot, ds_lag, ds_no_rel, ds_env, ds_id, ds_out); });

  // train
  CommonOpts train_opts;
  std::string train_datasets;
  auto* train = app.add_subcommand("train", "train a gradient-boosted model");
  add_common_options(train, train_opts);
  train->add_option("--datasets", train_datasets, "directory of subject_*.csv dataset files");
  train->callback([&] { exit_code = cmd_train(train, train_opts, train_datasets); });

  // evaluate
  CommonOpts eval_opts;
  std::string eval_datasets, eval_train_env, eval_test_env;
  auto* evaluate = app.add_subcommand("evaluate", "leave-one-subject-out or transfer evaluation");
  add_common_options(evaluate, eval_opts);
  evaluate->add_option("--datasets", eval_datasets, "directory of subject_*.csv dataset files");
  evaluate->add_option("--train-env", eval_train_env, "training environment (transfer mode)");
  evaluate->add_option("--test-env", eval_test_env, "test environment (transfer mode)");
  evaluate->callback(
      [&] { exit_code = cmd_evaluate(evaluate, eval_opts, eval_datasets, eval_train_env, eval_test_env); });

  // predict-track
  std::string pt_model, pt_scaler, pt_subject, pt_robot, pt_out = "evactrack_out";
  int pt_lag = 10;
  auto* predict = app.add_subcommand("predict-track", "one-step predictions along a track");
  predict->add_option("--model", pt_model, "model JSON")->required();
  predict->add_option("--scaler", pt_scaler, "scaler JSON")->required();
  predict->add_option("--subject", pt_subject, "subject track CSV")->required();
  predict->add_option("--robot", pt_robot, "robot track CSV")->required();
  predict->add_option("--lag", pt_lag, "lag in frames")->default_str("10");
  predict->add_option("--out", pt_out, "output directory")->default_str("evactrack_out");
  predict->callback(
      [&] { exit_code = cmd_predict_track(pt_model, pt_scaler, pt_subject, pt_robot, pt_lag, pt_out); });

  // simulate
  CommonOpts sim_opts;
  auto* simulate = app.add_subcommand("simulate", "generate a synthetic observation cohort");
  add_common_options(simulate, sim_opts);
  simulate->callback([&] { exit_code = cmd_simulate(simulate, sim_opts); });

  // pipeline
  CommonOpts pipe_opts;
  auto* pipeline_cmd = app.add_subcommand("pipeline", "end-to-end run: simulate through report");
  add_common_options(pipeline_cmd, pipe_opts);
  pipeline_cmd->callback([&] { exit_code = cmd_pipeline(pipeline_cmd, pipe_opts); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";  // what() leads with the category token
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: Internal: " << e.what() << "\n";
    return 1;
  }
  return exit_code;
}
