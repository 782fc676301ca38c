#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "evactrack/geometry.hpp"

namespace evactrack::ingest {

struct Keypoint {
  double u = 0.0;
  double v = 0.0;
  double confidence = 0.0;
};

inline constexpr int kKeypointCount = 17;
inline constexpr int kLeftAnkle = 15;   // COCO keypoint order
inline constexpr int kRightAnkle = 16;

/// One detected person in one video frame: 17 keypoints in COCO order plus
/// the detector's person score.
struct PoseFrame {
  std::int64_t frame_index = 0;
  std::array<Keypoint, kKeypointCount> keypoints{};
  double person_score = 0.0;
};

struct PixelSample {
  std::int64_t frame_index = 0;
  double u = 0.0;
  double v = 0.0;
  geometry::SampleSource source = geometry::SampleSource::Observed;
};

/// Per-camera pixel-space track of one agent, indexed by frame. After
/// fill_gaps, frame indices are dense (consecutive indices differ by 1).
struct PixelTrack {
  geometry::Agent agent = geometry::Agent::Subject;
  std::string camera_id;
  double fps = 40.0;
  std::vector<PixelSample> samples;
};

struct BBox {
  double u_min = 0.0;
  double v_min = 0.0;
  double u_max = 0.0;
  double v_max = 0.0;
};

struct RobotDetection {
  std::int64_t frame_index = 0;
  BBox box;
  double confidence = 0.0;
};

/// Parses newline-delimited keypoint records
/// `{frame: int, person_score: real, keypoints: [u1,v1,c1, ..., u17,v17,c17]}`
/// (flat 51-value list, COCO order). Lines that are empty or whitespace are
/// skipped; anything else malformed is an error. Output ordered by frame.
std::vector<PoseFrame> parse_pose_frames(std::istream& in);
std::vector<PoseFrame> parse_pose_frames_file(const std::string& path);
void write_pose_frames(std::ostream& out, std::span<const PoseFrame> frames);

/// Parses `frame,u_min,v_min,u_max,v_max,confidence` CSV robot detections.
std::vector<RobotDetection> parse_robot_detections(std::istream& in);
std::vector<RobotDetection> parse_robot_detections_file(const std::string& path);
void write_robot_detections(std::ostream& out, std::span<const RobotDetection> detections);

struct ExtractConfig {
  double confidence_threshold = 0.5;
};

/// Builds the subject's pixel track from pose frames: left ankle when its
/// confidence clears the threshold, right ankle as fallback, otherwise a gap.
/// When one frame holds several persons, picks the one whose chosen ankle is
/// nearest the previously accepted sample (highest person_score on the first
/// accepted frame).
PixelTrack extract_subject_track(std::span<const PoseFrame> frames, const ExtractConfig& cfg,
                                 std::string camera_id = {}, double fps = 40.0);

/// Robot ground-contact point: bottom-center of the bounding box.
geometry::PixelPoint robot_point_from_bbox(const BBox& b);

PixelTrack extract_robot_track(std::span<const RobotDetection> detections,
                               double confidence_threshold, std::string camera_id = {},
                               double fps = 40.0);

/// Fills every missing interior frame index by linear interpolation between
/// the bounding observed samples (marked interpolated). Leading and trailing
/// gaps are not extrapolated; the track is trimmed to the observed span.
PixelTrack fill_gaps(const PixelTrack& track);

/// Converts a gap-free pixel track to a world track through the camera model.
/// Samples outside the calibrated pixel range are rejected (the caller is
/// expected to have split tracks per camera coverage upstream).
geometry::WorldTrack pixel_track_to_world(const PixelTrack& track, const geometry::CameraModel& cam);

}  // namespace evactrack::ingest
