#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "evactrack/eval.hpp"
#include "evactrack/filter.hpp"
#include "evactrack/io.hpp"
#include "evactrack/simgen.hpp"

namespace evactrack::pipeline {

/// Built-in experiment regimes:
///   physical-40hz  40 fps cohort in a 1:1-scale environment, lag 10 frames
///   sim-1hz        1 Hz cohort at 10x environment scale, lag 1 frame
io::SimulationSpec physical_preset(std::uint64_t seed);
io::SimulationSpec sim1hz_preset(std::uint64_t seed);
io::SimulationSpec preset_by_name(const std::string& name, std::uint64_t seed);

/// Stage defaults appropriate for a preset's sample rate and scale.
filter::SgConfig default_sg_for(const io::SimulationSpec& spec);
dataset::LagConfig default_lag_for(const io::SimulationSpec& spec);
geometry::StitchOptions default_stitch_for(const io::SimulationSpec& spec);

struct StageConfigs {
  filter::SgConfig sg;
  dataset::LagConfig lag;
  gbt::GbtHyperparams hp;
  geometry::StitchOptions stitch;
  double confidence_threshold = 0.5;
};

struct ReconstructedRun {
  std::string subject_id;
  geometry::WorldTrack subject;  // stitched + smoothed
  geometry::WorldTrack robot;
};

/// Observation streams -> per-camera pixel tracks -> world segments ->
/// stitched tracks -> aligned common span -> smoothed pair.
ReconstructedRun reconstruct(const simgen::Scenario& scenario,
                             std::span<const geometry::CameraModel> cameras,
                             const StageConfigs& stages);

struct RunOptions {
  io::SimulationSpec spec;
  StageConfigs stages;
  std::vector<std::string> exclusions;
  std::string out_dir;
  bool write_observations = true;
  bool write_tracks = true;
};

struct CohortResult {
  std::vector<eval::SubjectDataset> subjects;  // unscaled rows per subject
  std::vector<geometry::CameraModel> fitted_cameras;
};

/// Simulation through dataset materialization, no evaluation: writes
/// scenario.json, calibration/, scenarios/, tracks/, datasets/ (plus the
/// environment scaler) and run_meta.json under out_dir.
CohortResult build_cohort(const RunOptions& options);

struct RunResult {
  eval::FoldReport report;
  std::vector<eval::SubjectDataset> subjects;  // unscaled rows per subject
  std::vector<geometry::CameraModel> fitted_cameras;
  std::string report_path;
};

/// The full chain: simulate a cohort, refit camera models from exported
/// calibration measurements, reconstruct world tracks from the observation
/// streams, build lag datasets, and run leave-one-subject-out evaluation.
/// Writes report.csv, boxplot.csv, datasets, and run_meta.json under out_dir.
RunResult run_pipeline(const RunOptions& options);

struct TransferOptions {
  RunOptions train;
  RunOptions test;
  std::string out_dir;
};

/// Cross-environment protocol: reconstruct both cohorts, train on the full
/// training environment, evaluate per test run with a test-environment scaler.
RunResult run_transfer(const TransferOptions& options);

/// Bounding-box diagonal of all positions referenced by the rows (features
/// and targets), in meters.
double bbox_diagonal(std::span<const eval::SubjectDataset> subjects);

}  // namespace evactrack::pipeline
