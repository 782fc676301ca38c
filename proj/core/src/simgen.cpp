#include "evactrack/simgen.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace evactrack::simgen {

namespace {

constexpr double kSaturationFactor = 1.4;
constexpr double kRobotWidthM = 0.4;   // synthesized detection box, unscaled units
constexpr double kRobotHeightM = 0.3;

/// Constant-speed position along a polyline, clamped to the endpoints.
class PathWalker {
 public:
  explicit PathWalker(std::span<const geometry::WorldPoint> waypoints) {
    cumulative_.push_back(0.0);
    for (std::size_t i = 1; i < waypoints.size(); ++i) {
      const double seg = geometry::distance(waypoints[i], waypoints[i - 1]);
      cumulative_.push_back(cumulative_.back() + seg);
    }
    points_.assign(waypoints.begin(), waypoints.end());
  }

  double length() const { return cumulative_.back(); }

  geometry::WorldPoint at(double arc) const {
    if (arc <= 0.0) return points_.front();
    if (arc >= length()) return points_.back();
    const auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), arc);
    const auto i = static_cast<std::size_t>(it - cumulative_.begin());
    const double seg = cumulative_[i] - cumulative_[i - 1];
    const double w = seg > 0.0 ? (arc - cumulative_[i - 1]) / seg : 0.0;
    return points_[i - 1] + w * (points_[i] - points_[i - 1]);
  }

  geometry::WorldPoint initial_direction() const {
    for (std::size_t i = 1; i < points_.size(); ++i) {
      const auto d = points_[i] - points_[0];
      const double n = geometry::norm(d);
      if (n > 0.0) return {d.x / n, d.y / n};
    }
    return {1.0, 0.0};
  }

 private:
  std::vector<geometry::WorldPoint> points_;
  std::vector<double> cumulative_;
};

ScenarioConfig scaled_config(const ScenarioConfig& cfg) {
  ScenarioConfig s = cfg;
  const double k = cfg.environment_scale;
  if (k == 1.0) return s;
  for (auto& w : s.waypoints) w = k * w;
  s.robot_speed *= k;
  s.follow_distance *= k;
  s.world_noise_sigma *= k;
  for (auto& cam : s.cameras) {
    geometry::CameraPose pose = cam.pose;
    pose.world_position = k * pose.world_position;
    std::vector<double> depth_coeffs = cam.depth.coefficients();
    for (auto& c : depth_coeffs) c *= k;
    std::vector<double> width_coeffs = cam.width.coefficients();
    for (auto& c : width_coeffs) c *= k;
    cam = geometry::make_camera_model(
        std::move(pose), geometry::DepthModel(std::move(depth_coeffs), cam.depth.valid_pixel_range()),
        geometry::WidthModel(std::move(width_coeffs), cam.width.valid_pixel_range()));
  }
  return s;
}

geometry::WorldTrack make_track(geometry::Agent agent, double rate,
                                std::span<const geometry::WorldPoint> points) {
  geometry::WorldTrack track;
  track.agent = agent;
  track.sample_rate_hz = rate;
  track.samples.reserve(points.size());
  for (std::size_t k = 0; k < points.size(); ++k) {
    geometry::TrackSample s;
    s.t = static_cast<double>(k) / rate;
    s.point = points[k];
    s.source = geometry::SampleSource::Observed;
    track.samples.push_back(std::move(s));
  }
  return track;
}

}  // namespace

double GaussianRng::uniform() {
  return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

double GaussianRng::gaussian() {
  const double u1 = 1.0 - uniform();  // (0, 1]
  const double u2 = uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream, std::uint64_t index) {
  // splitmix64 over the tagged mix; cheap, well-spread, reproducible.
  std::uint64_t z = base + 0x9e3779b97f4a7c15ULL * (stream + 1) + 0xbf58476d1ce4e5b9ULL * (index + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

void validate(const ScenarioConfig& cfg) {
  if (cfg.waypoints.size() < 2) raise(ErrorCode::DegeneratePath, "need at least 2 waypoints");
  double length = 0.0;
  for (std::size_t i = 1; i < cfg.waypoints.size(); ++i)
    length += geometry::distance(cfg.waypoints[i], cfg.waypoints[i - 1]);
  if (!(length > 0.0)) raise(ErrorCode::DegeneratePath, "waypoint polyline has zero length");
  if (!(cfg.robot_speed > 0.0)) raise(ErrorCode::InvalidConfig, "robot_speed must be positive");
  if (!(cfg.sample_rate_hz > 0.0)) raise(ErrorCode::InvalidConfig, "sample rate must be positive");
  if (cfg.follow_distance < 0.0) raise(ErrorCode::InvalidConfig, "follow_distance must be >= 0");
  if (!(cfg.follower_gain > 0.0)) raise(ErrorCode::InvalidConfig, "follower_gain must be positive");
  if (cfg.follower_delay < 0.0) raise(ErrorCode::InvalidConfig, "follower_delay must be >= 0");
  if (cfg.world_noise_sigma < 0.0 || cfg.pixel_noise_sigma < 0.0)
    raise(ErrorCode::InvalidConfig, "noise sigmas must be >= 0");
  if (!(cfg.environment_scale > 0.0))
    raise(ErrorCode::InvalidConfig, "environment_scale must be positive");
}

std::vector<PixelObservation> project_to_camera(const geometry::WorldTrack& track,
                                                const geometry::CameraModel& cam,
                                                double pixel_noise_sigma, std::uint64_t seed) {
  GaussianRng rng(seed);
  const auto [depth_lo, depth_hi] = cam.depth.depth_span();
  const geometry::PixelRange range = cam.valid_range();
  std::vector<PixelObservation> out;
  for (std::size_t k = 0; k < track.samples.size(); ++k) {
    // Consume noise deterministically per frame so omitted frames do not
    // shift later draws.
    const double noise_u = rng.gaussian();
    const double noise_v = rng.gaussian();
    const auto c = geometry::world_to_camera(track.samples[k].point, cam.pose);
    if (c.depth < depth_lo || c.depth > depth_hi) continue;
    const double v = cam.depth.invert(c.depth);
    if (!range.contains(v)) continue;
    const double u = cam.pose.principal_pixel_u + c.lateral / cam.width.evaluate_unchecked(v);
    PixelObservation obs;
    obs.frame_index = static_cast<std::int64_t>(k);
    obs.pixel = {u + pixel_noise_sigma * noise_u, v + pixel_noise_sigma * noise_v};
    if (!range.contains(obs.pixel.v)) continue;  // noise pushed it off range
    out.push_back(obs);
  }
  return out;
}

std::vector<geometry::CameraModel> effective_cameras(const ScenarioConfig& cfg) {
  return scaled_config(cfg).cameras;
}

Scenario generate_scenario(const ScenarioConfig& raw_cfg) {
  validate(raw_cfg);
  const ScenarioConfig cfg = scaled_config(raw_cfg);
  const PathWalker path(cfg.waypoints);
  const double duration = path.length() / cfg.robot_speed;
  const auto n = static_cast<std::size_t>(std::floor(duration * cfg.sample_rate_hz + 1e-9));
  if (n < 2) raise(ErrorCode::DegeneratePath, "path too short for even 2 samples");
  const double dt = 1.0 / cfg.sample_rate_hz;

  std::vector<geometry::WorldPoint> robot_points(n);
  for (std::size_t k = 0; k < n; ++k)
    robot_points[k] = path.at(cfg.robot_speed * (static_cast<double>(k) * dt));

  // Subject pursuit integrated on a fine grid so the truth dynamics do not
  // depend on the observation sample rate.
  const double dt_sub = std::min({0.01, 0.2 / cfg.follower_gain, dt});
  const auto substeps = static_cast<std::size_t>(std::ceil(dt / dt_sub - 1e-9));
  const double h = dt / static_cast<double>(substeps);
  const double max_speed = kSaturationFactor * cfg.robot_speed;

  const auto dir0 = path.initial_direction();
  geometry::WorldPoint subject = cfg.waypoints.front() - cfg.follow_distance * dir0;
  std::vector<geometry::WorldPoint> subject_points(n);
  subject_points[0] = subject;
  for (std::size_t k = 1; k < n; ++k) {
    const double t_base = static_cast<double>(k - 1) * dt;
    for (std::size_t s = 0; s < substeps; ++s) {
      const double t = t_base + static_cast<double>(s) * h;
      const double delayed = cfg.robot_speed * (t - cfg.follower_delay);
      const auto target = path.at(delayed);
      const auto e = target - subject;
      const double dist = geometry::norm(e);
      if (dist > 1e-12) {
        double speed = cfg.follower_gain * (dist - cfg.follow_distance);
        speed = std::clamp(speed, -max_speed, max_speed);
        subject = subject + (h * speed / dist) * e;
      }
    }
    subject_points[k] = subject;
  }

  Scenario scenario;
  scenario.robot_truth = make_track(geometry::Agent::Robot, cfg.sample_rate_hz, robot_points);
  scenario.subject_truth = make_track(geometry::Agent::Subject, cfg.sample_rate_hz, subject_points);

  for (std::size_t ci = 0; ci < cfg.cameras.size(); ++ci) {
    const auto& cam = cfg.cameras[ci];
    CameraObservations obs;
    obs.camera_id = cam.pose.camera_id;

    auto observed = [&](const geometry::WorldTrack& truth, std::uint64_t stream) {
      geometry::WorldTrack noisy = truth;
      if (cfg.world_noise_sigma > 0.0) {
        GaussianRng rng(derive_seed(cfg.seed, stream + 100, ci));
        for (auto& s : noisy.samples) {
          s.point.x += cfg.world_noise_sigma * rng.gaussian();
          s.point.y += cfg.world_noise_sigma * rng.gaussian();
        }
      }
      return project_to_camera(noisy, cam, cfg.pixel_noise_sigma,
                               derive_seed(cfg.seed, stream, ci));
    };

    for (const auto& p : observed(scenario.subject_truth, 1)) {
      ingest::PoseFrame frame;
      frame.frame_index = p.frame_index;
      frame.person_score = 1.0;
      frame.keypoints[ingest::kLeftAnkle] = {p.pixel.u, p.pixel.v, 1.0};
      frame.keypoints[ingest::kRightAnkle] = {p.pixel.u, p.pixel.v, 1.0};
      obs.subject_frames.push_back(std::move(frame));
    }
    for (const auto& p : observed(scenario.robot_truth, 2)) {
      const double scale = cam.width.evaluate_unchecked(p.pixel.v);
      const double w_px = kRobotWidthM * cfg.environment_scale / scale;
      const double h_px = kRobotHeightM * cfg.environment_scale / scale;
      ingest::RobotDetection det;
      det.frame_index = p.frame_index;
      det.box = {p.pixel.u - 0.5 * w_px, p.pixel.v - h_px, p.pixel.u + 0.5 * w_px, p.pixel.v};
      det.confidence = 1.0;
      obs.robot_detections.push_back(det);
    }
    scenario.observations.push_back(std::move(obs));
  }
  return scenario;
}

geometry::CalibrationInput export_calibration(const geometry::CameraModel& cam, int n_points,
                                              double object_width_m) {
  if (n_points < 2) raise(ErrorCode::InvalidInput, "need at least 2 calibration points");
  geometry::CalibrationInput input;
  input.camera_id = cam.pose.camera_id;
  input.world_position = cam.pose.world_position;
  input.axis_mapping = cam.pose.axis_mapping;
  input.principal_pixel_u = cam.pose.principal_pixel_u;
  input.depth_degree = cam.depth.degree();
  input.width_degree = cam.width.degree();
  const geometry::PixelRange range = cam.valid_range();
  const double step = range.width() / static_cast<double>(n_points - 1);
  for (int i = 0; i < n_points; ++i) {
    const double v = range.min_v + step * i;
    input.depth_pairs.emplace_back(v, cam.depth.evaluate_unchecked(v));
    const double scale = cam.width.evaluate_unchecked(v);
    input.width_samples.push_back({v, object_width_m / scale, object_width_m});
  }
  return input;
}

std::vector<Scenario> make_cohort(const ScenarioConfig& cfg, int n_subjects, double jitter) {
  validate(cfg);
  if (n_subjects < 2) raise(ErrorCode::InvalidConfig, "cohort needs at least 2 subjects");
  if (jitter < 0.0) raise(ErrorCode::InvalidConfig, "jitter must be >= 0");

  std::vector<Scenario> cohort;
  cohort.reserve(static_cast<std::size_t>(n_subjects));
  for (int i = 1; i <= n_subjects; ++i) {
    ScenarioConfig sub = cfg;
    sub.seed = derive_seed(cfg.seed, 0, static_cast<std::uint64_t>(i));
    if (jitter > 0.0) {
      GaussianRng rng(derive_seed(cfg.seed, 3, static_cast<std::uint64_t>(i)));
      auto vary = [&rng, jitter](double v) {
        const double factor = 1.0 + jitter * std::clamp(rng.gaussian(), -2.0, 2.0);
        return v * std::max(factor, 0.2);
      };
      sub.follower_gain = vary(cfg.follower_gain);
      sub.follower_delay = vary(cfg.follower_delay);
      sub.follow_distance = vary(cfg.follow_distance);
    }
    Scenario scenario = generate_scenario(sub);
    scenario.subject_id = std::to_string(i);
    cohort.push_back(std::move(scenario));
  }
  return cohort;
}

}  // namespace evactrack::simgen
