#include "evactrack/ingest.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include <json.hpp>

namespace evactrack::ingest {

namespace {

using nlohmann::json;

bool blank(const std::string& line) {
  return std::all_of(line.begin(), line.end(), [](unsigned char c) { return std::isspace(c); });
}

std::ifstream open_input(const std::string& path) {
  std::ifstream in(path);
  if (!in) raise(ErrorCode::IoError, "cannot open " + path);
  return in;
}

}  // namespace

std::vector<PoseFrame> parse_pose_frames(std::istream& in) {
  std::vector<PoseFrame> frames;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (blank(line)) continue;
    json rec;
    try {
      rec = json::parse(line);
    } catch (const json::exception& e) {
      raise(ErrorCode::MalformedRecord,
            "keypoint record line " + std::to_string(line_no) + ": " + e.what());
    }
    if (!rec.is_object() || !rec.contains("frame") || !rec.contains("keypoints"))
      raise(ErrorCode::MalformedRecord,
            "keypoint record line " + std::to_string(line_no) +
                ": expected object with frame and keypoints");
    PoseFrame frame;
    try {
      frame.frame_index = rec.at("frame").get<std::int64_t>();
      frame.person_score = rec.value("person_score", 0.0);
      const auto& kp = rec.at("keypoints");
      if (!kp.is_array() || kp.size() != 3 * kKeypointCount)
        raise(ErrorCode::MalformedRecord,
              "keypoint record line " + std::to_string(line_no) + ": expected " +
                  std::to_string(3 * kKeypointCount) + " keypoint values, got " +
                  std::to_string(kp.size()));
      for (int i = 0; i < kKeypointCount; ++i) {
        Keypoint& k = frame.keypoints[static_cast<std::size_t>(i)];
        k.u = kp.at(3 * i).get<double>();
        k.v = kp.at(3 * i + 1).get<double>();
        k.confidence = kp.at(3 * i + 2).get<double>();
        if (k.confidence < 0.0 || k.confidence > 1.0)
          raise(ErrorCode::MalformedRecord,
                "keypoint record line " + std::to_string(line_no) + ": confidence " +
                    std::to_string(k.confidence) + " outside [0,1]");
      }
    } catch (const json::exception& e) {
      raise(ErrorCode::MalformedRecord,
            "keypoint record line " + std::to_string(line_no) + ": " + e.what());
    }
    frames.push_back(std::move(frame));
  }
  std::stable_sort(frames.begin(), frames.end(),
                   [](const PoseFrame& a, const PoseFrame& b) { return a.frame_index < b.frame_index; });
  return frames;
}

std::vector<PoseFrame> parse_pose_frames_file(const std::string& path) {
  auto in = open_input(path);
  return parse_pose_frames(in);
}

void write_pose_frames(std::ostream& out, std::span<const PoseFrame> frames) {
  for (const auto& f : frames) {
    json rec;
    rec["frame"] = f.frame_index;
    rec["person_score"] = f.person_score;
    json kp = json::array();
    for (const auto& k : f.keypoints) {
      kp.push_back(k.u);
      kp.push_back(k.v);
      kp.push_back(k.confidence);
    }
    rec["keypoints"] = std::move(kp);
    out << rec.dump() << '\n';
  }
}

std::vector<RobotDetection> parse_robot_detections(std::istream& in) {
  std::vector<RobotDetection> detections;
  std::string line;
  std::size_t line_no = 0;
  bool header_seen = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (blank(line)) continue;
    if (!header_seen) {
      header_seen = true;
      if (line.rfind("frame", 0) == 0) continue;  // header row optional
    }
    RobotDetection det;
    double frame_val = 0.0;
    char trailing = 0;
    const int got = std::sscanf(line.c_str(), "%lf,%lf,%lf,%lf,%lf,%lf %c", &frame_val,
                                &det.box.u_min, &det.box.v_min, &det.box.u_max, &det.box.v_max,
                                &det.confidence, &trailing);
    if (got != 6)
      raise(ErrorCode::MalformedRecord,
            "robot detection line " + std::to_string(line_no) + ": expected "
            "frame,u_min,v_min,u_max,v_max,confidence");
    det.frame_index = static_cast<std::int64_t>(std::llround(frame_val));
    if (!(det.box.u_min < det.box.u_max) || !(det.box.v_min < det.box.v_max))
      raise(ErrorCode::MalformedRecord,
            "robot detection line " + std::to_string(line_no) + ": degenerate bounding box");
    detections.push_back(det);
  }
  std::stable_sort(detections.begin(), detections.end(),
                   [](const RobotDetection& a, const RobotDetection& b) {
                     return a.frame_index < b.frame_index;
                   });
  return detections;
}

std::vector<RobotDetection> parse_robot_detections_file(const std::string& path) {
  auto in = open_input(path);
  return parse_robot_detections(in);
}

void write_robot_detections(std::ostream& out, std::span<const RobotDetection> detections) {
  out << "frame,u_min,v_min,u_max,v_max,confidence\n";
  char buf[192];
  for (const auto& d : detections) {
    std::snprintf(buf, sizeof buf, "%lld,%.3f,%.3f,%.3f,%.3f,%.4f\n",
                  static_cast<long long>(d.frame_index), d.box.u_min, d.box.v_min, d.box.u_max,
                  d.box.v_max, d.confidence);
    out << buf;
  }
}

PixelTrack extract_subject_track(std::span<const PoseFrame> frames, const ExtractConfig& cfg,
                                 std::string camera_id, double fps) {
  PixelTrack track;
  track.agent = geometry::Agent::Subject;
  track.camera_id = std::move(camera_id);
  track.fps = fps;

  // Candidate ankle per person: left if confident enough, else right.
  auto choose_ankle = [&cfg](const PoseFrame& f) -> const Keypoint* {
    const Keypoint& left = f.keypoints[kLeftAnkle];
    if (left.confidence >= cfg.confidence_threshold) return &left;
    const Keypoint& right = f.keypoints[kRightAnkle];
    if (right.confidence >= cfg.confidence_threshold) return &right;
    return nullptr;
  };

  bool have_prev = false;
  double prev_u = 0.0;
  double prev_v = 0.0;
  std::size_t i = 0;
  while (i < frames.size()) {
    std::size_t j = i;
    while (j < frames.size() && frames[j].frame_index == frames[i].frame_index) ++j;

    const Keypoint* best = nullptr;
    double best_key = 0.0;
    for (std::size_t p = i; p < j; ++p) {
      const Keypoint* ankle = choose_ankle(frames[p]);
      if (!ankle) continue;
      // Nearest to the previous accepted sample; highest person score before
      // any sample exists.
      const double key = have_prev ? -std::hypot(ankle->u - prev_u, ankle->v - prev_v)
                                   : frames[p].person_score;
      if (!best || key > best_key) {
        best = ankle;
        best_key = key;
      }
    }
    if (best) {
      track.samples.push_back({frames[i].frame_index, best->u, best->v,
                               geometry::SampleSource::Observed});
      have_prev = true;
      prev_u = best->u;
      prev_v = best->v;
    }
    i = j;
  }
  if (track.samples.empty())
    raise(ErrorCode::NoUsableKeypoints, "no ankle keypoint reached the confidence threshold");
  return track;
}

geometry::PixelPoint robot_point_from_bbox(const BBox& b) {
  return {0.5 * (b.u_min + b.u_max), b.v_max};
}

PixelTrack extract_robot_track(std::span<const RobotDetection> detections,
                               double confidence_threshold, std::string camera_id, double fps) {
  PixelTrack track;
  track.agent = geometry::Agent::Robot;
  track.camera_id = std::move(camera_id);
  track.fps = fps;
  for (const auto& det : detections) {
    if (det.confidence < confidence_threshold) continue;
    if (!track.samples.empty() && track.samples.back().frame_index == det.frame_index) continue;
    const auto p = robot_point_from_bbox(det.box);
    track.samples.push_back({det.frame_index, p.u, p.v, geometry::SampleSource::Observed});
  }
  if (track.samples.empty())
    raise(ErrorCode::NoUsableKeypoints, "no robot detection reached the confidence threshold");
  return track;
}

PixelTrack fill_gaps(const PixelTrack& track) {
  std::size_t observed = 0;
  for (const auto& s : track.samples)
    if (s.source == geometry::SampleSource::Observed) ++observed;
  if (observed < 2)
    raise(ErrorCode::TooFewObservations, "gap filling needs at least 2 observed samples");

  PixelTrack out;
  out.agent = track.agent;
  out.camera_id = track.camera_id;
  out.fps = track.fps;
  for (std::size_t i = 0; i < track.samples.size(); ++i) {
    const PixelSample& cur = track.samples[i];
    if (i > 0) {
      const PixelSample& prev = out.samples.back();
      if (cur.frame_index <= prev.frame_index)
        raise(ErrorCode::InvalidInput, "pixel track frame indices must be strictly increasing");
      for (std::int64_t f = prev.frame_index + 1; f < cur.frame_index; ++f) {
        const double w = static_cast<double>(f - prev.frame_index) /
                         static_cast<double>(cur.frame_index - prev.frame_index);
        out.samples.push_back({f, prev.u + w * (cur.u - prev.u), prev.v + w * (cur.v - prev.v),
                               geometry::SampleSource::Interpolated});
      }
    }
    out.samples.push_back(cur);
  }
  return out;
}

geometry::WorldTrack pixel_track_to_world(const PixelTrack& track,
                                          const geometry::CameraModel& cam) {
  geometry::WorldTrack out;
  out.agent = track.agent;
  out.sample_rate_hz = track.fps;
  out.samples.reserve(track.samples.size());
  for (const auto& s : track.samples) {
    const auto c = geometry::pixel_to_camera({s.u, s.v}, cam);
    geometry::TrackSample sample;
    sample.t = static_cast<double>(s.frame_index) / track.fps;
    sample.point = geometry::camera_to_world(c, cam.pose);
    sample.source = s.source;
    sample.camera_id = cam.pose.camera_id;
    out.samples.push_back(std::move(sample));
  }
  return out;
}

}  // namespace evactrack::ingest
