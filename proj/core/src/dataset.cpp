#include "evactrack/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace evactrack::dataset {

namespace {
constexpr double kDegenerateRange = 1e-12;
constexpr double kAlignTolerance = 1e-9;
}  // namespace

void validate(const LagConfig& cfg) {
  if (cfg.lag_frames < 1) raise(ErrorCode::InvalidConfig, "lag_frames must be >= 1");
  if (!(cfg.sample_rate_hz > 0.0)) raise(ErrorCode::InvalidConfig, "sample rate must be positive");
}

double MinMaxScaler::Bounds::denominator() const {
  const double range = max - min;
  return range < kDegenerateRange ? 1.0 : range;
}

MinMaxScaler::MinMaxScaler(Bounds x, Bounds y, Bounds rel, bool has_rel)
    : x_(x), y_(y), rel_(rel), has_rel_(has_rel), fitted_(true) {
  if (x_.max < x_.min || y_.max < y_.min || (has_rel_ && rel_.max < rel_.min))
    raise(ErrorCode::InvalidInput, "scaler bounds require max >= min");
}

double MinMaxScaler::scale_rel(double v) const {
  if (!has_rel_) raise(ErrorCode::DimensionMismatch, "scaler has no relative-distance bounds");
  return (v - rel_.min) / rel_.denominator();
}

std::vector<FeatureRow> build_lagged_rows(const geometry::WorldTrack& subject,
                                          const geometry::WorldTrack& robot,
                                          const LagConfig& cfg, const std::string& subject_id) {
  validate(cfg);
  geometry::validate_uniform_sampling(subject);
  geometry::validate_uniform_sampling(robot);
  if (subject.samples.size() != robot.samples.size())
    raise(ErrorCode::MisalignedTracks,
          "subject has " + std::to_string(subject.samples.size()) + " samples, robot " +
              std::to_string(robot.samples.size()));
  for (std::size_t i = 0; i < subject.samples.size(); ++i) {
    if (std::abs(subject.samples[i].t - robot.samples[i].t) > kAlignTolerance)
      raise(ErrorCode::MisalignedTracks,
            "subject and robot timestamps diverge at index " + std::to_string(i));
  }
  const auto m = static_cast<std::size_t>(cfg.lag_frames);
  if (subject.samples.size() <= m)
    raise(ErrorCode::TrackShorterThanLag,
          "track of " + std::to_string(subject.samples.size()) +
              " samples cannot support lag " + std::to_string(cfg.lag_frames));

  std::vector<FeatureRow> rows;
  rows.reserve(subject.samples.size() - m);
  for (std::size_t k = m; k < subject.samples.size(); ++k) {
    const auto& s_lag = subject.samples[k - m];
    const auto& r_lag = robot.samples[k - m];
    const auto& s_now = subject.samples[k];
    FeatureRow row;
    row.subject_id = subject_id;
    row.t_k = s_now.t;
    row.t_lag = s_lag.t;
    row.xs_lag = s_lag.point.x;
    row.ys_lag = s_lag.point.y;
    row.xr_lag = r_lag.point.x;
    row.yr_lag = r_lag.point.y;
    if (cfg.include_relative_distance)
      row.rel_dist_lag = geometry::distance(s_lag.point, r_lag.point);
    row.target_x = s_now.point.x;
    row.target_y = s_now.point.y;
    rows.push_back(std::move(row));
  }
  return rows;
}

MinMaxScaler fit_minmax_scaler(std::span<const FeatureRow> rows,
                               bool include_relative_distance) {
  if (rows.empty()) raise(ErrorCode::EmptyInput, "cannot fit a scaler on zero rows");
  const double inf = std::numeric_limits<double>::infinity();
  MinMaxScaler::Bounds x{inf, -inf}, y{inf, -inf}, rel{inf, -inf};
  for (const auto& r : rows) {
    for (double v : {r.xs_lag, r.xr_lag, r.target_x}) {
      x.min = std::min(x.min, v);
      x.max = std::max(x.max, v);
    }
    for (double v : {r.ys_lag, r.yr_lag, r.target_y}) {
      y.min = std::min(y.min, v);
      y.max = std::max(y.max, v);
    }
    if (include_relative_distance) {
      rel.min = std::min(rel.min, r.rel_dist_lag);
      rel.max = std::max(rel.max, r.rel_dist_lag);
    }
  }
  if (!include_relative_distance) rel = {0.0, 0.0};
  return MinMaxScaler(x, y, rel, include_relative_distance);
}

std::vector<FeatureRow> apply_scaler(std::span<const FeatureRow> rows, const MinMaxScaler& scaler,
                                     bool include_relative_distance) {
  if (!scaler.fitted()) raise(ErrorCode::InvalidInput, "scaler is not fitted");
  if (include_relative_distance && !scaler.has_rel())
    raise(ErrorCode::DimensionMismatch,
          "rows carry relative distance but the scaler has no bounds for it");
  std::vector<FeatureRow> out;
  out.reserve(rows.size());
  for (const auto& r : rows) {
    FeatureRow s = r;
    s.xs_lag = scaler.scale_x(r.xs_lag);
    s.xr_lag = scaler.scale_x(r.xr_lag);
    s.target_x = scaler.scale_x(r.target_x);
    s.ys_lag = scaler.scale_y(r.ys_lag);
    s.yr_lag = scaler.scale_y(r.yr_lag);
    s.target_y = scaler.scale_y(r.target_y);
    s.rel_dist_lag = include_relative_distance ? scaler.scale_rel(r.rel_dist_lag) : 0.0;
    const double lo = -1e-12;
    const double hi = 1.0 + 1e-12;
    auto in_range = [lo, hi](double v) { return v >= lo && v <= hi; };
    s.out_of_range = !(in_range(s.xs_lag) && in_range(s.xr_lag) && in_range(s.target_x) &&
                       in_range(s.ys_lag) && in_range(s.yr_lag) && in_range(s.target_y) &&
                       (!include_relative_distance || in_range(s.rel_dist_lag)));
    out.push_back(std::move(s));
  }
  return out;
}

std::vector<geometry::WorldPoint> invert_scaler(std::span<const geometry::WorldPoint> scaled,
                                                const MinMaxScaler& scaler) {
  if (!scaler.fitted()) raise(ErrorCode::InvalidInput, "scaler is not fitted");
  std::vector<geometry::WorldPoint> out;
  out.reserve(scaled.size());
  for (const auto& p : scaled) out.push_back({scaler.invert_x(p.x), scaler.invert_y(p.y)});
  return out;
}

void check_no_leakage(std::span<const FeatureRow> rows) {
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (!(rows[i].t_lag < rows[i].t_k))
      raise(ErrorCode::InvariantViolation,
            "row " + std::to_string(i) + " has feature timestamp " +
                std::to_string(rows[i].t_lag) + " not earlier than target timestamp " +
                std::to_string(rows[i].t_k));
  }
}

std::vector<std::string> feature_names(const LagConfig& cfg) {
  const std::string m = std::to_string(cfg.lag_frames);
  std::vector<std::string> names{"xs_l" + m, "ys_l" + m, "xr_l" + m, "yr_l" + m};
  if (cfg.include_relative_distance) names.push_back("rel_l" + m);
  return names;
}

std::vector<std::vector<double>> feature_matrix(std::span<const FeatureRow> rows,
                                                bool include_relative_distance) {
  std::vector<std::vector<double>> out;
  out.reserve(rows.size());
  for (const auto& r : rows) {
    std::vector<double> f{r.xs_lag, r.ys_lag, r.xr_lag, r.yr_lag};
    if (include_relative_distance) f.push_back(r.rel_dist_lag);
    out.push_back(std::move(f));
  }
  return out;
}

}  // namespace evactrack::dataset
