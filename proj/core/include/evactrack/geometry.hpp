#pragma once

#include <cmath>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "evactrack/errors.hpp"

namespace evactrack::geometry {

struct PixelPoint {
  double u = 0.0;
  double v = 0.0;
};

/// Position relative to a camera on the ground plane: lateral offset from the
/// optical center line and distance along the viewing direction, both meters.
struct CameraPoint {
  double lateral = 0.0;
  double depth = 0.0;
};

struct WorldPoint {
  double x = 0.0;
  double y = 0.0;
};

inline WorldPoint operator+(WorldPoint a, WorldPoint b) { return {a.x + b.x, a.y + b.y}; }
inline WorldPoint operator-(WorldPoint a, WorldPoint b) { return {a.x - b.x, a.y - b.y}; }
inline WorldPoint operator*(double s, WorldPoint p) { return {s * p.x, s * p.y}; }
inline double norm(WorldPoint p) { return std::hypot(p.x, p.y); }
inline double distance(WorldPoint a, WorldPoint b) { return norm(a - b); }

/// The four supported camera-to-world axis orientations. Tokens map the
/// camera's (lateral, depth) pair onto signed world axes:
///   +x+y    world x = +lateral, world y = +depth
///   +x-y    world x = +lateral, world y = -depth
///   swap+-  world x = +depth,   world y = -lateral
///   swap-+  world x = -depth,   world y = +lateral
/// All four are signed permutations, so distances are preserved.
enum class AxisMapping { PlusXPlusY, PlusXMinusY, SwapPlusMinus, SwapMinusPlus };

AxisMapping axis_mapping_from_token(const std::string& token);
const char* to_token(AxisMapping mapping) noexcept;

WorldPoint apply_axis_mapping(AxisMapping mapping, CameraPoint c);
CameraPoint invert_axis_mapping(AxisMapping mapping, WorldPoint direction);

/// Inclusive vertical-pixel interval over which a calibration model is valid.
struct PixelRange {
  double min_v = 0.0;
  double max_v = 0.0;
  bool contains(double v) const { return v >= min_v && v <= max_v; }
  double width() const { return max_v - min_v; }
};

/// Polynomial mapping from the image frame's vertical pixel coordinate to the
/// distance from the camera in meters. Strictly monotone over its valid pixel
/// range; evaluation outside that range is refused rather than extrapolated.
class DepthModel {
 public:
  /// Coefficients in ascending degree. Validates the invariants (degree >= 1,
  /// strict monotonicity over the range, checked on 100 evenly spaced samples).
  DepthModel(std::vector<double> coefficients, PixelRange valid_pixel_range);

  double operator()(double pixel_v) const;  // throws OutOfCalibratedRange
  double evaluate_unchecked(double pixel_v) const;

  /// Finds the pixel row whose depth equals `distance_m` by bisection over the
  /// valid range. Throws NotInvertible when the distance lies outside the
  /// range the model spans.
  double invert(double distance_m) const;

  int degree() const { return static_cast<int>(coeffs_.size()) - 1; }
  const std::vector<double>& coefficients() const { return coeffs_; }
  PixelRange valid_pixel_range() const { return range_; }
  bool increasing() const { return increasing_; }
  /// Depth interval [min,max] the model spans over its valid pixel range.
  std::pair<double, double> depth_span() const;

 private:
  std::vector<double> coeffs_;
  PixelRange range_;
  bool increasing_ = false;
};

/// Polynomial mapping from vertical pixel coordinate to the lateral scale in
/// meters per pixel. Strictly positive over its valid range.
class WidthModel {
 public:
  WidthModel(std::vector<double> coefficients, PixelRange valid_pixel_range);

  double operator()(double pixel_v) const;  // throws OutOfCalibratedRange
  double evaluate_unchecked(double pixel_v) const;

  int degree() const { return static_cast<int>(coeffs_.size()) - 1; }
  const std::vector<double>& coefficients() const { return coeffs_; }
  PixelRange valid_pixel_range() const { return range_; }

 private:
  std::vector<double> coeffs_;
  PixelRange range_;
};

struct CameraPose {
  std::string camera_id;
  WorldPoint world_position;
  AxisMapping axis_mapping = AxisMapping::PlusXPlusY;
  double principal_pixel_u = 320.0;
};

struct CameraModel {
  CameraPose pose;
  DepthModel depth;
  WidthModel width;

  /// Intersection of the depth and width pixel ranges (non-empty by invariant).
  PixelRange valid_range() const;
};

CameraModel make_camera_model(CameraPose pose, DepthModel depth, WidthModel width);

enum class Agent { Subject, Robot };
enum class SampleSource { Observed, Interpolated };

const char* to_token(Agent agent) noexcept;
const char* to_token(SampleSource source) noexcept;
Agent agent_from_token(const std::string& token);
SampleSource sample_source_from_token(const std::string& token);

struct TrackSample {
  double t = 0.0;  // seconds
  WorldPoint point;
  SampleSource source = SampleSource::Observed;
  std::string camera_id;
};

/// Time-stamped 2-D positions in meters for one agent; the pipeline's central
/// currency. Timestamps are strictly increasing; once gaps are filled,
/// consecutive gaps equal 1/sample_rate_hz within 1e-9.
struct WorldTrack {
  Agent agent = Agent::Subject;
  double sample_rate_hz = 40.0;
  std::vector<TrackSample> samples;

  std::size_t size() const { return samples.size(); }
};

void validate_track(const WorldTrack& track);           // strictly increasing timestamps
void validate_uniform_sampling(const WorldTrack& track);  // gaps == 1/rate within 1e-9

struct FitDiagnostics {
  double rms = 0.0;
  double condition_number = 0.0;
};

struct WidthSample {
  double pixel_v = 0.0;
  double width_px = 0.0;
  double width_m = 0.0;
};

/// Least-squares polynomial fit of camera distance against vertical pixel.
DepthModel fit_depth_model(std::span<const std::pair<double, double>> pixel_distance_pairs,
                           int degree, FitDiagnostics* diagnostics = nullptr);

/// Least-squares fit of the lateral meters-per-pixel scale against vertical pixel.
WidthModel fit_width_model(std::span<const WidthSample> samples, int degree,
                           FitDiagnostics* diagnostics = nullptr);

/// Raw calibration measurements for one camera, distances already in meters.
struct CalibrationInput {
  std::string camera_id;
  WorldPoint world_position;
  AxisMapping axis_mapping = AxisMapping::PlusXPlusY;
  double principal_pixel_u = 320.0;
  int depth_degree = 2;
  int width_degree = 1;
  std::vector<std::pair<double, double>> depth_pairs;  // (pixel_v, distance_m)
  std::vector<WidthSample> width_samples;
};

CameraModel fit_calibration(const CalibrationInput& input,
                            FitDiagnostics* depth_diagnostics = nullptr,
                            FitDiagnostics* width_diagnostics = nullptr);

CameraPoint pixel_to_camera(PixelPoint p, const CameraModel& cam);
WorldPoint camera_to_world(CameraPoint c, const CameraPose& pose);
CameraPoint world_to_camera(WorldPoint w, const CameraPose& pose);

struct StitchOptions {
  double max_conflict_m = 1.0;  // simultaneous observations further apart are an error
  bool fill_interior_gaps = true;
};

/// Merges per-camera track segments into one track on the common sampling
/// grid. Samples observed by several cameras at the same instant are averaged;
/// interior grid points no camera covered are linearly interpolated so the
/// result is uniformly sampled.
WorldTrack stitch_tracks(std::span<const WorldTrack> segments, StitchOptions options = {});

/// Crops two uniformly sampled tracks to their common time span so they pair
/// sample-for-sample. Throws MisalignedTracks when the spans do not overlap.
std::pair<WorldTrack, WorldTrack> align_tracks(const WorldTrack& a, const WorldTrack& b);

}  // namespace evactrack::geometry
