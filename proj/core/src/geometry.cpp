#include "evactrack/geometry.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

namespace evactrack::geometry {

namespace {

constexpr int kValidationSamples = 100;
constexpr double kMaxConditionNumber = 1e12;
constexpr double kGridTolerance = 1e-9;

double eval_poly(const std::vector<double>& coeffs, double x) {
  double acc = 0.0;
  for (std::size_t i = coeffs.size(); i-- > 0;) acc = acc * x + coeffs[i];
  return acc;
}

/// Least squares in the monomial basis via SVD; reports the design-matrix
/// condition number so callers can reject ill-posed fits.
std::vector<double> polyfit(std::span<const double> xs, std::span<const double> ys, int degree,
                            FitDiagnostics* diagnostics) {
  if (degree < 0) raise(ErrorCode::InvalidInput, "polynomial degree must be non-negative");
  const auto n = static_cast<Eigen::Index>(xs.size());
  if (n < degree + 1)
    raise(ErrorCode::InsufficientPoints,
          "need at least " + std::to_string(degree + 1) + " points for a degree-" +
              std::to_string(degree) + " fit, got " + std::to_string(xs.size()));

  Eigen::MatrixXd design(n, degree + 1);
  Eigen::VectorXd rhs(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    double p = 1.0;
    for (int j = 0; j <= degree; ++j) {
      design(i, j) = p;
      p *= xs[static_cast<std::size_t>(i)];
    }
    rhs(i) = ys[static_cast<std::size_t>(i)];
  }

  Eigen::JacobiSVD<Eigen::MatrixXd> svd(design, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const double smin = svd.singularValues().minCoeff();
  const double smax = svd.singularValues().maxCoeff();
  const double cond = smin > 0.0 ? smax / smin : std::numeric_limits<double>::infinity();
  if (!(cond < kMaxConditionNumber))
    raise(ErrorCode::IllConditioned,
          "fit design matrix condition number " + std::to_string(cond) + " exceeds 1e12");

  Eigen::VectorXd sol = svd.solve(rhs);
  const double rms = std::sqrt((design * sol - rhs).squaredNorm() / static_cast<double>(n));
  if (diagnostics) {
    diagnostics->rms = rms;
    diagnostics->condition_number = cond;
  }
  return {sol.data(), sol.data() + sol.size()};
}

void require_range(const PixelRange& range) {
  if (!(range.max_v > range.min_v))
    raise(ErrorCode::InvalidInput, "pixel range must have max_v > min_v");
}

}  // namespace

AxisMapping axis_mapping_from_token(const std::string& token) {
  if (token == "+x+y") return AxisMapping::PlusXPlusY;
  if (token == "+x-y") return AxisMapping::PlusXMinusY;
  if (token == "swap+-") return AxisMapping::SwapPlusMinus;
  if (token == "swap-+") return AxisMapping::SwapMinusPlus;
  raise(ErrorCode::InvalidInput, "unknown axis mapping token: " + token);
}

const char* to_token(AxisMapping mapping) noexcept {
  switch (mapping) {
    case AxisMapping::PlusXPlusY: return "+x+y";
    case AxisMapping::PlusXMinusY: return "+x-y";
    case AxisMapping::SwapPlusMinus: return "swap+-";
    case AxisMapping::SwapMinusPlus: return "swap-+";
  }
  return "+x+y";
}

WorldPoint apply_axis_mapping(AxisMapping mapping, CameraPoint c) {
  switch (mapping) {
    case AxisMapping::PlusXPlusY: return {c.lateral, c.depth};
    case AxisMapping::PlusXMinusY: return {c.lateral, -c.depth};
    case AxisMapping::SwapPlusMinus: return {c.depth, -c.lateral};
    case AxisMapping::SwapMinusPlus: return {-c.depth, c.lateral};
  }
  return {c.lateral, c.depth};
}

CameraPoint invert_axis_mapping(AxisMapping mapping, WorldPoint d) {
  switch (mapping) {
    case AxisMapping::PlusXPlusY: return {d.x, d.y};
    case AxisMapping::PlusXMinusY: return {d.x, -d.y};
    case AxisMapping::SwapPlusMinus: return {-d.y, d.x};
    case AxisMapping::SwapMinusPlus: return {d.y, -d.x};
  }
  return {d.x, d.y};
}

DepthModel::DepthModel(std::vector<double> coefficients, PixelRange valid_pixel_range)
    : coeffs_(std::move(coefficients)), range_(valid_pixel_range) {
  require_range(range_);
  if (coeffs_.size() < 2)
    raise(ErrorCode::InvalidInput, "depth model must have degree >= 1");
  const double step = range_.width() / (kValidationSamples - 1);
  double prev = eval_poly(coeffs_, range_.min_v);
  int direction = 0;
  for (int i = 1; i < kValidationSamples; ++i) {
    const double cur = eval_poly(coeffs_, range_.min_v + step * i);
    const int sign = cur > prev ? 1 : (cur < prev ? -1 : 0);
    if (sign == 0 || (direction != 0 && sign != direction))
      raise(ErrorCode::NonMonotoneFit,
            "depth polynomial is not strictly monotone over the valid pixel range");
    direction = sign;
    prev = cur;
  }
  increasing_ = direction > 0;
}

double DepthModel::operator()(double pixel_v) const {
  if (!range_.contains(pixel_v))
    raise(ErrorCode::OutOfCalibratedRange,
          "pixel v=" + std::to_string(pixel_v) + " outside calibrated range [" +
              std::to_string(range_.min_v) + ", " + std::to_string(range_.max_v) + "]");
  return eval_poly(coeffs_, pixel_v);
}

double DepthModel::evaluate_unchecked(double pixel_v) const { return eval_poly(coeffs_, pixel_v); }

std::pair<double, double> DepthModel::depth_span() const {
  const double a = eval_poly(coeffs_, range_.min_v);
  const double b = eval_poly(coeffs_, range_.max_v);
  return {std::min(a, b), std::max(a, b)};
}

double DepthModel::invert(double distance_m) const {
  const auto [lo, hi] = depth_span();
  if (distance_m < lo || distance_m > hi)
    raise(ErrorCode::NotInvertible,
          "distance " + std::to_string(distance_m) + " m outside the calibrated span [" +
              std::to_string(lo) + ", " + std::to_string(hi) + "]");
  double a = range_.min_v;
  double b = range_.max_v;
  // Bisection on a strictly monotone function; 200 halvings take the bracket
  // far below any meaningful pixel resolution.
  for (int i = 0; i < 200 && (b - a) > 1e-9; ++i) {
    const double mid = 0.5 * (a + b);
    const double val = eval_poly(coeffs_, mid);
    const bool go_right = increasing_ ? (val < distance_m) : (val > distance_m);
    if (go_right)
      a = mid;
    else
      b = mid;
  }
  return 0.5 * (a + b);
}

WidthModel::WidthModel(std::vector<double> coefficients, PixelRange valid_pixel_range)
    : coeffs_(std::move(coefficients)), range_(valid_pixel_range) {
  require_range(range_);
  if (coeffs_.empty()) raise(ErrorCode::InvalidInput, "width model needs coefficients");
  const double step = range_.width() / (kValidationSamples - 1);
  for (int i = 0; i < kValidationSamples; ++i) {
    if (!(eval_poly(coeffs_, range_.min_v + step * i) > 0.0))
      raise(ErrorCode::NonPositiveScale,
            "width polynomial is not strictly positive over the valid pixel range");
  }
}

double WidthModel::operator()(double pixel_v) const {
  if (!range_.contains(pixel_v))
    raise(ErrorCode::OutOfCalibratedRange,
          "pixel v=" + std::to_string(pixel_v) + " outside calibrated range [" +
              std::to_string(range_.min_v) + ", " + std::to_string(range_.max_v) + "]");
  return eval_poly(coeffs_, pixel_v);
}

double WidthModel::evaluate_unchecked(double pixel_v) const { return eval_poly(coeffs_, pixel_v); }

PixelRange CameraModel::valid_range() const {
  return {std::max(depth.valid_pixel_range().min_v, width.valid_pixel_range().min_v),
          std::min(depth.valid_pixel_range().max_v, width.valid_pixel_range().max_v)};
}

CameraModel make_camera_model(CameraPose pose, DepthModel depth, WidthModel width) {
  CameraModel cam{std::move(pose), std::move(depth), std::move(width)};
  const PixelRange r = cam.valid_range();
  if (!(r.max_v > r.min_v))
    raise(ErrorCode::InvalidConfig,
          "camera " + cam.pose.camera_id + ": depth and width pixel ranges do not overlap");
  if (!(cam.depth.depth_span().first > 0.0))
    raise(ErrorCode::InvalidConfig,
          "camera " + cam.pose.camera_id + ": depth model reaches non-positive distances");
  return cam;
}

const char* to_token(Agent agent) noexcept {
  return agent == Agent::Robot ? "robot" : "subject";
}

const char* to_token(SampleSource source) noexcept {
  return source == SampleSource::Interpolated ? "interpolated" : "observed";
}

Agent agent_from_token(const std::string& token) {
  if (token == "subject") return Agent::Subject;
  if (token == "robot") return Agent::Robot;
  raise(ErrorCode::InvalidInput, "unknown agent token: " + token);
}

SampleSource sample_source_from_token(const std::string& token) {
  if (token == "observed") return SampleSource::Observed;
  if (token == "interpolated") return SampleSource::Interpolated;
  raise(ErrorCode::InvalidInput, "unknown sample source token: " + token);
}

void validate_track(const WorldTrack& track) {
  if (!(track.sample_rate_hz > 0.0))
    raise(ErrorCode::InvalidInput, "track sample rate must be positive");
  for (std::size_t i = 1; i < track.samples.size(); ++i) {
    if (!(track.samples[i].t > track.samples[i - 1].t))
      raise(ErrorCode::InvalidInput,
            "track timestamps must be strictly increasing (index " + std::to_string(i) + ")");
  }
}

void validate_uniform_sampling(const WorldTrack& track) {
  validate_track(track);
  const double dt = 1.0 / track.sample_rate_hz;
  for (std::size_t i = 1; i < track.samples.size(); ++i) {
    const double gap = track.samples[i].t - track.samples[i - 1].t;
    if (std::abs(gap - dt) > kGridTolerance)
      raise(ErrorCode::NonUniformSampling,
            "gap of " + std::to_string(gap) + " s at index " + std::to_string(i) +
                " differs from expected " + std::to_string(dt) + " s");
  }
}

DepthModel fit_depth_model(std::span<const std::pair<double, double>> pixel_distance_pairs,
                           int degree, FitDiagnostics* diagnostics) {
  std::vector<double> xs, ys;
  xs.reserve(pixel_distance_pairs.size());
  ys.reserve(pixel_distance_pairs.size());
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  for (const auto& [v, d] : pixel_distance_pairs) {
    xs.push_back(v);
    ys.push_back(d);
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  auto coeffs = polyfit(xs, ys, degree, diagnostics);
  return DepthModel(std::move(coeffs), {lo, hi});
}

WidthModel fit_width_model(std::span<const WidthSample> samples, int degree,
                           FitDiagnostics* diagnostics) {
  std::vector<double> xs, ys;
  xs.reserve(samples.size());
  ys.reserve(samples.size());
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  for (const auto& s : samples) {
    if (!(s.width_px > 0.0))
      raise(ErrorCode::InvalidInput, "width sample has non-positive pixel width");
    xs.push_back(s.pixel_v);
    ys.push_back(s.width_m / s.width_px);
    lo = std::min(lo, s.pixel_v);
    hi = std::max(hi, s.pixel_v);
  }
  auto coeffs = polyfit(xs, ys, degree, diagnostics);
  return WidthModel(std::move(coeffs), {lo, hi});
}

CameraModel fit_calibration(const CalibrationInput& input, FitDiagnostics* depth_diagnostics,
                            FitDiagnostics* width_diagnostics) {
  DepthModel depth = fit_depth_model(input.depth_pairs, input.depth_degree, depth_diagnostics);
  WidthModel width = fit_width_model(input.width_samples, input.width_degree, width_diagnostics);
  CameraPose pose{input.camera_id, input.world_position, input.axis_mapping,
                  input.principal_pixel_u};
  return make_camera_model(std::move(pose), std::move(depth), std::move(width));
}

CameraPoint pixel_to_camera(PixelPoint p, const CameraModel& cam) {
  const double depth = cam.depth(p.v);
  const double scale = cam.width(p.v);
  return {(p.u - cam.pose.principal_pixel_u) * scale, depth};
}

WorldPoint camera_to_world(CameraPoint c, const CameraPose& pose) {
  return pose.world_position + apply_axis_mapping(pose.axis_mapping, c);
}

CameraPoint world_to_camera(WorldPoint w, const CameraPose& pose) {
  return invert_axis_mapping(pose.axis_mapping, w - pose.world_position);
}

WorldTrack stitch_tracks(std::span<const WorldTrack> segments, StitchOptions options) {
  if (segments.empty()) raise(ErrorCode::EmptyInput, "no track segments to stitch");
  const Agent agent = segments.front().agent;
  const double rate = segments.front().sample_rate_hz;
  const double dt = 1.0 / rate;
  for (const auto& seg : segments) {
    if (seg.agent != agent)
      raise(ErrorCode::MisalignedTracks, "cannot stitch segments for different agents");
    if (std::abs(seg.sample_rate_hz - rate) > kGridTolerance)
      raise(ErrorCode::MisalignedTracks, "cannot stitch segments with different sample rates");
    validate_track(seg);
  }

  // All timestamps must sit on one grid anchored at the earliest sample.
  double t0 = std::numeric_limits<double>::infinity();
  for (const auto& seg : segments)
    for (const auto& s : seg.samples) t0 = std::min(t0, s.t);
  if (!std::isfinite(t0)) raise(ErrorCode::EmptyInput, "all track segments are empty");

  struct Slot {
    double t_sum = 0.0;
    double x_sum = 0.0;
    double y_sum = 0.0;
    int count = 0;
    std::string camera_id;
  };
  std::map<long long, Slot> grid;
  for (const auto& seg : segments) {
    for (const auto& s : seg.samples) {
      const double offset = (s.t - t0) * rate;
      const double nearest = std::round(offset);
      if (std::abs(offset - nearest) > 1e-6)
        raise(ErrorCode::MisalignedTracks,
              "sample at t=" + std::to_string(s.t) + " is off the common sampling grid");
      auto& slot = grid[static_cast<long long>(nearest)];
      if (slot.count > 0) {
        const WorldPoint mean{slot.x_sum / slot.count, slot.y_sum / slot.count};
        if (distance(mean, s.point) > options.max_conflict_m)
          raise(ErrorCode::ConflictingObservations,
                "cameras disagree by more than " + std::to_string(options.max_conflict_m) +
                    " m at t=" + std::to_string(s.t));
        slot.camera_id = "merged";
      } else {
        slot.camera_id = s.camera_id;
      }
      slot.t_sum += s.t;
      slot.x_sum += s.point.x;
      slot.y_sum += s.point.y;
      slot.count += 1;
    }
  }

  WorldTrack out;
  out.agent = agent;
  out.sample_rate_hz = rate;
  out.samples.reserve(grid.size());

  // Walk the grid span; observed slots average their contributions, interior
  // holes are linearly interpolated between the neighbouring observations.
  long long prev_key = -1;
  for (auto it = grid.begin(); it != grid.end(); ++it) {
    const auto [key, slot] = *it;
    if (options.fill_interior_gaps && prev_key >= 0 && key > prev_key + 1) {
      const TrackSample& a = out.samples.back();
      const WorldPoint b{slot.x_sum / slot.count, slot.y_sum / slot.count};
      const double tb = slot.t_sum / slot.count;
      for (long long k = prev_key + 1; k < key; ++k) {
        const double w = static_cast<double>(k - prev_key) / static_cast<double>(key - prev_key);
        TrackSample fill;
        fill.t = a.t + w * (tb - a.t);
        fill.point = {a.point.x + w * (b.x - a.point.x), a.point.y + w * (b.y - a.point.y)};
        fill.source = SampleSource::Interpolated;
        out.samples.push_back(std::move(fill));
      }
    } else if (!options.fill_interior_gaps && prev_key >= 0 && key > prev_key + 1) {
      raise(ErrorCode::NonUniformSampling,
            "stitched track has an interior gap and gap filling is disabled");
    }
    TrackSample merged;
    merged.t = slot.count == 1 ? slot.t_sum : t0 + dt * static_cast<double>(key);
    merged.point = {slot.x_sum / slot.count, slot.y_sum / slot.count};
    merged.source = SampleSource::Observed;
    merged.camera_id = slot.camera_id;
    out.samples.push_back(std::move(merged));
    prev_key = key;
  }
  validate_uniform_sampling(out);
  return out;
}

std::pair<WorldTrack, WorldTrack> align_tracks(const WorldTrack& a, const WorldTrack& b) {
  validate_uniform_sampling(a);
  validate_uniform_sampling(b);
  if (std::abs(a.sample_rate_hz - b.sample_rate_hz) > kGridTolerance)
    raise(ErrorCode::MisalignedTracks, "cannot align tracks with different sample rates");
  if (a.samples.empty() || b.samples.empty())
    raise(ErrorCode::EmptyInput, "cannot align an empty track");
  const double t0 = std::max(a.samples.front().t, b.samples.front().t);
  const double t1 = std::min(a.samples.back().t, b.samples.back().t);
  if (t1 < t0 - kGridTolerance)
    raise(ErrorCode::MisalignedTracks, "tracks do not overlap in time");

  auto crop = [t0, t1](const WorldTrack& track) {
    WorldTrack out;
    out.agent = track.agent;
    out.sample_rate_hz = track.sample_rate_hz;
    for (const auto& s : track.samples)
      if (s.t >= t0 - kGridTolerance && s.t <= t1 + kGridTolerance) out.samples.push_back(s);
    return out;
  };
  auto ca = crop(a);
  auto cb = crop(b);
  if (ca.samples.size() != cb.samples.size())
    raise(ErrorCode::MisalignedTracks, "tracks sample different instants over the common span");
  for (std::size_t i = 0; i < ca.samples.size(); ++i) {
    if (std::abs(ca.samples[i].t - cb.samples[i].t) > kGridTolerance)
      raise(ErrorCode::MisalignedTracks,
            "tracks sample different instants at index " + std::to_string(i));
  }
  return {std::move(ca), std::move(cb)};
}

}  // namespace evactrack::geometry
