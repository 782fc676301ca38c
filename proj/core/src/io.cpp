#include "evactrack/io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include <json.hpp>

namespace evactrack::io {

namespace {

using nlohmann::json;

constexpr double kFeetToMeters = 0.3048;

std::ofstream open_output(const std::string& path) {
  std::ofstream out(path);
  if (!out) raise(ErrorCode::IoError, "cannot write " + path);
  return out;
}

std::ifstream open_input(const std::string& path) {
  std::ifstream in(path);
  if (!in) raise(ErrorCode::IoError, "cannot open " + path);
  return in;
}

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream ss(line);
  while (std::getline(ss, field, sep)) out.push_back(field);
  if (!line.empty() && line.back() == sep) out.emplace_back();
  return out;
}

double parse_double(const std::string& s, const std::string& context) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) raise(ErrorCode::MalformedRecord, context + ": trailing junk in " + s);
    return v;
  } catch (const std::invalid_argument&) {
    raise(ErrorCode::MalformedRecord, context + ": not a number: " + s);
  } catch (const std::out_of_range&) {
    raise(ErrorCode::MalformedRecord, context + ": out of range: " + s);
  }
}

struct Marker {
  std::string name;
  int version = 0;
  std::map<std::string, std::string> fields;
};

std::string marker_line(const std::string& name, int version,
                        const std::vector<std::pair<std::string, std::string>>& fields) {
  std::string line = "# evactrack-" + name + " v" + std::to_string(version);
  for (const auto& [k, v] : fields) line += " " + k + "=" + v;
  return line;
}

/// Parses `# evactrack-<name> v<version> key=val ...` and rejects any other
/// name or version.
Marker read_marker(std::istream& in, const std::string& expected_name, int expected_version,
                   const std::string& path) {
  std::string line;
  if (!std::getline(in, line))
    raise(ErrorCode::MalformedRecord, path + ": empty file, expected a format marker");
  Marker m;
  std::istringstream ss(line);
  std::string hash, name, version;
  ss >> hash >> name >> version;
  if (hash != "#" || name.rfind("evactrack-", 0) != 0 || version.size() < 2 || version[0] != 'v')
    raise(ErrorCode::MalformedRecord, path + ": missing format marker line");
  m.name = name.substr(10);
  if (m.name != expected_name)
    raise(ErrorCode::MalformedRecord,
          path + ": expected an evactrack-" + expected_name + " file, found " + name);
  m.version = static_cast<int>(parse_double(version.substr(1), path + " marker version"));
  if (m.version != expected_version)
    raise(ErrorCode::VersionMismatch,
          path + ": format version " + std::to_string(m.version) + ", reader supports v" +
              std::to_string(expected_version));
  std::string kv;
  while (ss >> kv) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos)
      raise(ErrorCode::MalformedRecord, path + ": marker field without '=': " + kv);
    m.fields[kv.substr(0, eq)] = kv.substr(eq + 1);
  }
  return m;
}

std::string require_field(const Marker& m, const std::string& key, const std::string& path) {
  const auto it = m.fields.find(key);
  if (it == m.fields.end())
    raise(ErrorCode::MalformedRecord, path + ": marker missing field " + key);
  return it->second;
}

json camera_to_json(const geometry::CameraModel& cam) {
  json doc;
  doc["camera_id"] = cam.pose.camera_id;
  doc["world_position"] = {cam.pose.world_position.x, cam.pose.world_position.y};
  doc["axis_mapping"] = geometry::to_token(cam.pose.axis_mapping);
  doc["principal_pixel_u"] = cam.pose.principal_pixel_u;
  doc["depth"] = {{"coefficients", cam.depth.coefficients()},
                  {"range", {cam.depth.valid_pixel_range().min_v, cam.depth.valid_pixel_range().max_v}}};
  doc["width"] = {{"coefficients", cam.width.coefficients()},
                  {"range", {cam.width.valid_pixel_range().min_v, cam.width.valid_pixel_range().max_v}}};
  return doc;
}

geometry::CameraModel camera_from_json(const json& doc) {
  geometry::CameraPose pose;
  pose.camera_id = doc.at("camera_id").get<std::string>();
  pose.world_position = {doc.at("world_position").at(0).get<double>(),
                         doc.at("world_position").at(1).get<double>()};
  pose.axis_mapping = geometry::axis_mapping_from_token(doc.at("axis_mapping").get<std::string>());
  pose.principal_pixel_u = doc.at("principal_pixel_u").get<double>();
  const auto& d = doc.at("depth");
  geometry::DepthModel depth(d.at("coefficients").get<std::vector<double>>(),
                             {d.at("range").at(0).get<double>(), d.at("range").at(1).get<double>()});
  const auto& w = doc.at("width");
  geometry::WidthModel width(w.at("coefficients").get<std::vector<double>>(),
                             {w.at("range").at(0).get<double>(), w.at("range").at(1).get<double>()});
  return geometry::make_camera_model(std::move(pose), std::move(depth), std::move(width));
}

json read_json_file(const std::string& path, const std::string& expected_format) {
  auto in = open_input(path);
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::exception& e) {
    raise(ErrorCode::MalformedRecord, path + ": " + e.what());
  }
  if (!doc.is_object() || doc.value("format", "") != expected_format)
    raise(ErrorCode::MalformedRecord, path + ": expected a " + expected_format + " file");
  if (doc.value("version", -1) != 1)
    raise(ErrorCode::VersionMismatch, path + ": unsupported version");
  return doc;
}

std::string dataset_header(const dataset::LagConfig& lag) {
  const std::string m = std::to_string(lag.lag_frames);
  std::string header = "subject_id,t_s,xs_l" + m + ",ys_l" + m + ",xr_l" + m + ",yr_l" + m;
  if (lag.include_relative_distance) header += ",rel_l" + m;
  return header + ",target_x,target_y";
}

}  // namespace

std::string format_fixed(double value, int decimals) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", decimals, value);
  return buf;
}

std::string format_shortest(double value) {
  char buf[64];
  const auto result = std::to_chars(buf, buf + sizeof buf, value);
  return std::string(buf, result.ptr);
}

std::string format_truncated3(double value) {
  const double sign = value < 0.0 ? -1.0 : 1.0;
  const double truncated = sign * std::floor(std::abs(value) * 1000.0 + 1e-9) / 1000.0;
  return format_fixed(truncated, 3);
}

void write_track(const std::string& path, const geometry::WorldTrack& track) {
  auto out = open_output(path);
  out << marker_line("track", 1,
                     {{"agent", geometry::to_token(track.agent)},
                      {"rate", format_fixed(track.sample_rate_hz, 6)}})
      << '\n';
  out << "t_s,x_m,y_m,source,camera_id\n";
  for (const auto& s : track.samples) {
    out << format_fixed(s.t) << ',' << format_fixed(s.point.x) << ',' << format_fixed(s.point.y)
        << ',' << geometry::to_token(s.source) << ',' << s.camera_id << '\n';
  }
}

geometry::WorldTrack read_track(const std::string& path) {
  auto in = open_input(path);
  const Marker m = read_marker(in, "track", 1, path);
  geometry::WorldTrack track;
  track.agent = geometry::agent_from_token(require_field(m, "agent", path));
  track.sample_rate_hz = parse_double(require_field(m, "rate", path), path + " rate");

  std::string line;
  if (!std::getline(in, line) || line != "t_s,x_m,y_m,source,camera_id")
    raise(ErrorCode::MalformedRecord, path + ": missing track header");
  std::size_t line_no = 2;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto fields = split(line, ',');
    if (fields.size() != 5)
      raise(ErrorCode::MalformedRecord,
            path + ":" + std::to_string(line_no) + ": expected 5 fields");
    geometry::TrackSample s;
    s.t = parse_double(fields[0], path + " t_s");
    s.point.x = parse_double(fields[1], path + " x_m");
    s.point.y = parse_double(fields[2], path + " y_m");
    s.source = geometry::sample_source_from_token(fields[3]);
    s.camera_id = fields[4];
    track.samples.push_back(std::move(s));
  }
  geometry::validate_track(track);
  return track;
}

void write_dataset(const std::string& path, const DatasetFile& file) {
  std::vector<std::pair<std::string, std::string>> fields{
      {"env", file.environment_id},
      {"lag", std::to_string(file.lag.lag_frames)},
      {"rate", format_fixed(file.lag.sample_rate_hz, 6)},
      {"rel", file.lag.include_relative_distance ? "1" : "0"},
      {"scaled", file.scaled ? "1" : "0"}};
  if (!file.subject_id.empty()) fields.emplace_back("subject", file.subject_id);

  auto out = open_output(path);
  out << marker_line("dataset", 1, fields) << '\n';
  out << dataset_header(file.lag) << '\n';
  for (const auto& r : file.rows) {
    out << r.subject_id << ',' << format_shortest(r.t_k) << ',' << format_shortest(r.xs_lag) << ','
        << format_shortest(r.ys_lag) << ',' << format_shortest(r.xr_lag) << ','
        << format_shortest(r.yr_lag);
    if (file.lag.include_relative_distance) out << ',' << format_shortest(r.rel_dist_lag);
    out << ',' << format_shortest(r.target_x) << ',' << format_shortest(r.target_y) << '\n';
  }
}

DatasetFile read_dataset(const std::string& path) {
  auto in = open_input(path);
  const Marker m = read_marker(in, "dataset", 1, path);
  DatasetFile file;
  file.environment_id = require_field(m, "env", path);
  file.lag.lag_frames = static_cast<int>(parse_double(require_field(m, "lag", path), path));
  file.lag.sample_rate_hz = parse_double(require_field(m, "rate", path), path);
  file.lag.include_relative_distance = require_field(m, "rel", path) == "1";
  file.scaled = require_field(m, "scaled", path) == "1";
  if (const auto it = m.fields.find("subject"); it != m.fields.end()) file.subject_id = it->second;
  dataset::validate(file.lag);

  std::string line;
  if (!std::getline(in, line) || line != dataset_header(file.lag))
    raise(ErrorCode::MalformedRecord, path + ": dataset header does not match marker fields");
  const std::size_t expected = file.lag.include_relative_distance ? 9 : 8;
  const double lag_seconds = file.lag.lag_frames / file.lag.sample_rate_hz;
  std::size_t line_no = 2;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto fields = split(line, ',');
    if (fields.size() != expected)
      raise(ErrorCode::MalformedRecord, path + ":" + std::to_string(line_no) + ": expected " +
                                            std::to_string(expected) + " fields");
    dataset::FeatureRow r;
    std::size_t f = 0;
    r.subject_id = fields[f++];
    r.t_k = parse_double(fields[f++], path + " t_s");
    r.t_lag = r.t_k - lag_seconds;
    r.xs_lag = parse_double(fields[f++], path + " xs");
    r.ys_lag = parse_double(fields[f++], path + " ys");
    r.xr_lag = parse_double(fields[f++], path + " xr");
    r.yr_lag = parse_double(fields[f++], path + " yr");
    if (file.lag.include_relative_distance)
      r.rel_dist_lag = parse_double(fields[f++], path + " rel");
    r.target_x = parse_double(fields[f++], path + " target_x");
    r.target_y = parse_double(fields[f++], path + " target_y");
    file.rows.push_back(std::move(r));
  }
  return file;
}

void write_scaler(const std::string& path, const dataset::MinMaxScaler& scaler) {
  if (!scaler.fitted()) raise(ErrorCode::InvalidInput, "refusing to write an unfitted scaler");
  json doc;
  doc["format"] = "evactrack-scaler";
  doc["version"] = 1;
  json features;
  features["x"] = {{"min", scaler.x_bounds().min}, {"max", scaler.x_bounds().max}};
  features["y"] = {{"min", scaler.y_bounds().min}, {"max", scaler.y_bounds().max}};
  if (scaler.has_rel())
    features["rel"] = {{"min", scaler.rel_bounds().min}, {"max", scaler.rel_bounds().max}};
  doc["features"] = std::move(features);
  auto out = open_output(path);
  out << doc.dump(1) << '\n';
}

dataset::MinMaxScaler read_scaler(const std::string& path) {
  const json doc = read_json_file(path, "evactrack-scaler");
  try {
    const auto& f = doc.at("features");
    auto bounds = [&f](const char* key) {
      return dataset::MinMaxScaler::Bounds{f.at(key).at("min").get<double>(),
                                           f.at(key).at("max").get<double>()};
    };
    const bool has_rel = f.contains("rel");
    return dataset::MinMaxScaler(bounds("x"), bounds("y"),
                                 has_rel ? bounds("rel") : dataset::MinMaxScaler::Bounds{},
                                 has_rel);
  } catch (const json::exception& e) {
    raise(ErrorCode::MalformedRecord, path + ": " + e.what());
  }
}

void write_calibration_input(const std::string& path, const geometry::CalibrationInput& input) {
  json doc;
  doc["format"] = "evactrack-calibration";
  doc["version"] = 1;
  doc["camera_id"] = input.camera_id;
  doc["world_position"] = {input.world_position.x, input.world_position.y};
  doc["axis_mapping"] = geometry::to_token(input.axis_mapping);
  doc["principal_pixel_u"] = input.principal_pixel_u;
  doc["depth_degree"] = input.depth_degree;
  doc["width_degree"] = input.width_degree;
  doc["unit"] = "m";
  json pairs = json::array();
  for (const auto& [v, d] : input.depth_pairs) pairs.push_back({v, d});
  doc["depth_pairs"] = std::move(pairs);
  json samples = json::array();
  for (const auto& s : input.width_samples) samples.push_back({s.pixel_v, s.width_px, s.width_m});
  doc["width_samples"] = std::move(samples);
  auto out = open_output(path);
  out << doc.dump(1) << '\n';
}

geometry::CalibrationInput read_calibration_input(const std::string& path) {
  const json doc = read_json_file(path, "evactrack-calibration");
  geometry::CalibrationInput input;
  try {
    input.camera_id = doc.at("camera_id").get<std::string>();
    input.world_position = {doc.at("world_position").at(0).get<double>(),
                            doc.at("world_position").at(1).get<double>()};
    input.axis_mapping =
        geometry::axis_mapping_from_token(doc.at("axis_mapping").get<std::string>());
    input.principal_pixel_u = doc.at("principal_pixel_u").get<double>();
    input.depth_degree = doc.at("depth_degree").get<int>();
    input.width_degree = doc.at("width_degree").get<int>();
    const std::string unit = doc.value("unit", "m");
    double to_meters = 1.0;
    if (unit == "ft")
      to_meters = kFeetToMeters;
    else if (unit != "m")
      raise(ErrorCode::MalformedRecord, path + ": unknown unit " + unit);
    for (const auto& p : doc.at("depth_pairs"))
      input.depth_pairs.emplace_back(p.at(0).get<double>(), p.at(1).get<double>() * to_meters);
    for (const auto& s : doc.at("width_samples"))
      input.width_samples.push_back({s.at(0).get<double>(), s.at(1).get<double>(),
                                     s.at(2).get<double>() * to_meters});
  } catch (const json::exception& e) {
    raise(ErrorCode::MalformedRecord, path + ": " + e.what());
  }
  return input;
}

void write_camera_model(const std::string& path, const geometry::CameraModel& cam,
                        const geometry::FitDiagnostics* depth_diagnostics,
                        const geometry::FitDiagnostics* width_diagnostics) {
  json doc = camera_to_json(cam);
  doc["format"] = "evactrack-camera";
  doc["version"] = 1;
  if (depth_diagnostics && width_diagnostics) {
    doc["diagnostics"] = {
        {"depth", {{"rms", depth_diagnostics->rms},
                   {"condition_number", depth_diagnostics->condition_number}}},
        {"width", {{"rms", width_diagnostics->rms},
                   {"condition_number", width_diagnostics->condition_number}}}};
  }
  auto out = open_output(path);
  out << doc.dump(1) << '\n';
}

geometry::CameraModel read_camera_model(const std::string& path) {
  const json doc = read_json_file(path, "evactrack-camera");
  try {
    return camera_from_json(doc);
  } catch (const json::exception& e) {
    raise(ErrorCode::MalformedRecord, path + ": " + e.what());
  }
}

void write_report(const std::string& path, const eval::FoldReport& report) {
  auto out = open_output(path);
  out << marker_line("report", 1, {{"folds", std::to_string(report.folds.size())}}) << '\n';
  out << "holdout_id,mu_e_m,sigma_e_m,n\n";
  for (const auto& f : report.folds) {
    out << f.holdout_id << ',' << format_truncated3(f.mu_e) << ',' << format_truncated3(f.sigma_e)
        << ',' << f.n_samples << '\n';
  }
  out << report.aggregate.holdout_id << ',' << format_truncated3(report.aggregate.mu_e) << ','
      << format_truncated3(report.aggregate.sigma_e) << ',' << report.aggregate.n_samples << '\n';
}

void write_boxplot(const std::string& path, const eval::FoldReport& report) {
  if (report.fold_distances.size() != report.folds.size())
    raise(ErrorCode::LengthMismatch, "fold distance lists do not match fold stats");
  auto out = open_output(path);
  out << marker_line("boxplot", 1, {}) << '\n';
  out << "holdout_id,min_m,q1_m,median_m,q3_m,max_m\n";
  for (std::size_t i = 0; i < report.folds.size(); ++i) {
    const auto& d = report.fold_distances[i];
    out << report.folds[i].holdout_id;
    for (double p : {0.0, 0.25, 0.5, 0.75, 1.0}) out << ',' << format_fixed(eval::quantile(d, p));
    out << '\n';
  }
}

void write_pose_frames_file(const std::string& path,
                            const std::vector<ingest::PoseFrame>& frames) {
  auto out = open_output(path);
  ingest::write_pose_frames(out, frames);
}

void write_robot_detections_file(const std::string& path,
                                 const std::vector<ingest::RobotDetection>& detections) {
  auto out = open_output(path);
  ingest::write_robot_detections(out, detections);
}

void write_simulation_spec(const std::string& path, const SimulationSpec& spec) {
  json doc;
  doc["format"] = "evactrack-scenario";
  doc["version"] = 1;
  doc["environment_id"] = spec.environment_id;
  doc["n_subjects"] = spec.n_subjects;
  doc["jitter"] = spec.jitter;
  json sc;
  sc["seed"] = spec.scenario.seed;
  json wp = json::array();
  for (const auto& w : spec.scenario.waypoints) wp.push_back({w.x, w.y});
  sc["waypoints"] = std::move(wp);
  sc["robot_speed"] = spec.scenario.robot_speed;
  sc["follow_distance"] = spec.scenario.follow_distance;
  sc["follower_gain"] = spec.scenario.follower_gain;
  sc["follower_delay"] = spec.scenario.follower_delay;
  sc["sample_rate_hz"] = spec.scenario.sample_rate_hz;
  sc["world_noise_sigma"] = spec.scenario.world_noise_sigma;
  sc["pixel_noise_sigma"] = spec.scenario.pixel_noise_sigma;
  sc["environment_scale"] = spec.scenario.environment_scale;
  json cams = json::array();
  for (const auto& cam : spec.scenario.cameras) cams.push_back(camera_to_json(cam));
  sc["cameras"] = std::move(cams);
  doc["scenario"] = std::move(sc);
  auto out = open_output(path);
  out << doc.dump(1) << '\n';
}

SimulationSpec read_simulation_spec(const std::string& path) {
  const json doc = read_json_file(path, "evactrack-scenario");
  SimulationSpec spec;
  try {
    spec.environment_id = doc.at("environment_id").get<std::string>();
    spec.n_subjects = doc.at("n_subjects").get<int>();
    spec.jitter = doc.at("jitter").get<double>();
    const auto& sc = doc.at("scenario");
    spec.scenario.seed = sc.at("seed").get<std::uint64_t>();
    for (const auto& w : sc.at("waypoints"))
      spec.scenario.waypoints.push_back({w.at(0).get<double>(), w.at(1).get<double>()});
    spec.scenario.robot_speed = sc.at("robot_speed").get<double>();
    spec.scenario.follow_distance = sc.at("follow_distance").get<double>();
    spec.scenario.follower_gain = sc.at("follower_gain").get<double>();
    spec.scenario.follower_delay = sc.at("follower_delay").get<double>();
    spec.scenario.sample_rate_hz = sc.at("sample_rate_hz").get<double>();
    spec.scenario.world_noise_sigma = sc.at("world_noise_sigma").get<double>();
    spec.scenario.pixel_noise_sigma = sc.at("pixel_noise_sigma").get<double>();
    spec.scenario.environment_scale = sc.at("environment_scale").get<double>();
    for (const auto& cam : sc.at("cameras")) spec.scenario.cameras.push_back(camera_from_json(cam));
  } catch (const json::exception& e) {
    raise(ErrorCode::MalformedRecord, path + ": " + e.what());
  }
  return spec;
}

}  // namespace evactrack::io
