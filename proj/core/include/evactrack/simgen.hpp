#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "evactrack/geometry.hpp"
#include "evactrack/ingest.hpp"

namespace evactrack::simgen {

/// Synthetic shepherding episode: a robot walks the waypoint polyline at
/// constant speed while the subject pursues the robot's delayed position with
/// a saturated first-order law. environment_scale multiplies all world-unit
/// quantities (coordinates, speeds, camera placement and calibration) to
/// emulate differently scaled environments.
struct ScenarioConfig {
  std::uint64_t seed = 1;
  std::vector<geometry::WorldPoint> waypoints;
  double robot_speed = 1.0;        // m/s
  double follow_distance = 1.2;    // m
  double follower_gain = 2.0;      // 1/s
  double follower_delay = 0.3;     // s
  double sample_rate_hz = 40.0;
  double world_noise_sigma = 0.0;  // m, applied to observations only
  double pixel_noise_sigma = 0.5;  // px
  double environment_scale = 1.0;
  std::vector<geometry::CameraModel> cameras;
};

void validate(const ScenarioConfig& cfg);

struct CameraObservations {
  std::string camera_id;
  std::vector<ingest::PoseFrame> subject_frames;
  std::vector<ingest::RobotDetection> robot_detections;
};

struct Scenario {
  std::string subject_id;
  geometry::WorldTrack robot_truth;
  geometry::WorldTrack subject_truth;
  std::vector<CameraObservations> observations;
};

/// Deterministic given the config; the seed drives observation noise only,
/// never the truth tracks.
Scenario generate_scenario(const ScenarioConfig& cfg);

/// The camera models the generator actually projects through: the configured
/// models with environment_scale folded into positions and meter-unit
/// coefficients. Calibrating against these recovers world tracks in the
/// scaled environment's own units.
std::vector<geometry::CameraModel> effective_cameras(const ScenarioConfig& cfg);

struct PixelObservation {
  std::int64_t frame_index = 0;
  geometry::PixelPoint pixel;
};

/// Inverse of the calibration mapping: world -> camera frame -> pixel, with
/// the depth polynomial inverted by bisection. Samples outside the camera's
/// calibrated range are omitted, creating realistic coverage gaps. Seeded
/// Gaussian pixel noise is added to emitted pixels.
std::vector<PixelObservation> project_to_camera(const geometry::WorldTrack& track,
                                                const geometry::CameraModel& cam,
                                                double pixel_noise_sigma, std::uint64_t seed);

/// n scenarios sharing the robot path, with seeded per-subject variation of
/// gain, delay, and follow distance. Subject ids are "1".."n".
std::vector<Scenario> make_cohort(const ScenarioConfig& cfg, int n_subjects, double jitter);

/// Deterministic per-stream seed derivation (splitmix64 over tagged inputs).
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream, std::uint64_t index);

/// Noise-free calibration measurements sampled from a known camera model:
/// evenly spaced pixel rows paired with the model's exact distances, plus
/// width samples for a reference object of the given physical width.
geometry::CalibrationInput export_calibration(const geometry::CameraModel& cam, int n_points,
                                              double object_width_m = 0.5);

/// Portable seeded Gaussian source (explicit Box-Muller over mt19937_64 bits;
/// avoids the implementation-defined std::normal_distribution).
class GaussianRng {
 public:
  explicit GaussianRng(std::uint64_t seed) : engine_(seed) {}
  double uniform();   // [0, 1)
  double gaussian();  // standard normal

 private:
  std::mt19937_64 engine_;
};

}  // namespace evactrack::simgen
