#pragma once

#include <string>
#include <utility>
#include <vector>

#include "evactrack/dataset.hpp"
#include "evactrack/eval.hpp"
#include "evactrack/geometry.hpp"
#include "evactrack/simgen.hpp"

namespace evactrack::io {

/// Fixed-point formatting used by all CSV artifacts.
std::string format_fixed(double value, int decimals = 6);

/// Shortest decimal string that parses back to the same double; dataset rows
/// use this so a file round trip is bit-exact.
std::string format_shortest(double value);

/// Reporting convention for meter-valued summary tables: three decimals,
/// truncated toward zero rather than half-rounded.
std::string format_truncated3(double value);

/// Track CSV: a `# evactrack-track v1 ...` marker line carrying agent and
/// sample rate, then `t_s,x_m,y_m,source,camera_id` rows at 6 decimals.
void write_track(const std::string& path, const geometry::WorldTrack& track);
geometry::WorldTrack read_track(const std::string& path);

struct DatasetFile {
  std::string environment_id;
  dataset::LagConfig lag;
  bool scaled = false;
  std::string subject_id;  // single-subject files; empty for mixed rows
  std::vector<dataset::FeatureRow> rows;
};

/// Dataset CSV: marker line, then
/// `subject_id,t_s,xs_l{m},ys_l{m},xr_l{m},yr_l{m}[,rel_l{m}],target_x,target_y`
/// with values in shortest round-trip form.
void write_dataset(const std::string& path, const DatasetFile& file);
DatasetFile read_dataset(const std::string& path);

void write_scaler(const std::string& path, const dataset::MinMaxScaler& scaler);
dataset::MinMaxScaler read_scaler(const std::string& path);

/// Calibration measurement file (structured text). Distances may be recorded
/// in meters or feet (`unit` field); feet convert on read with 0.3048 exactly.
void write_calibration_input(const std::string& path, const geometry::CalibrationInput& input);
geometry::CalibrationInput read_calibration_input(const std::string& path);

/// Fitted camera model file (structured text).
void write_camera_model(const std::string& path, const geometry::CameraModel& cam,
                        const geometry::FitDiagnostics* depth_diagnostics = nullptr,
                        const geometry::FitDiagnostics* width_diagnostics = nullptr);
geometry::CameraModel read_camera_model(const std::string& path);

/// Report CSV: marker line, `holdout_id,mu_e_m,sigma_e_m,n` rows (3-decimal
/// truncated meters) and a final `mean` row.
void write_report(const std::string& path, const eval::FoldReport& report);

/// Box-plot CSV: per fold `holdout_id,min,q1,median,q3,max` in meters.
void write_boxplot(const std::string& path, const eval::FoldReport& report);

/// Keypoint and robot-detection observation files (ingest formats).
void write_pose_frames_file(const std::string& path,
                            const std::vector<ingest::PoseFrame>& frames);
void write_robot_detections_file(const std::string& path,
                                 const std::vector<ingest::RobotDetection>& detections);

struct SimulationSpec {
  std::string environment_id = "physical";
  simgen::ScenarioConfig scenario;
  int n_subjects = 12;
  double jitter = 0.15;
};

void write_simulation_spec(const std::string& path, const SimulationSpec& spec);
SimulationSpec read_simulation_spec(const std::string& path);

}  // namespace evactrack::io
