#pragma once

#include <span>
#include <string>
#include <vector>

#include "evactrack/geometry.hpp"

namespace evactrack::dataset {

struct LagConfig {
  int lag_frames = 10;
  bool include_relative_distance = true;
  double sample_rate_hz = 40.0;
};

void validate(const LagConfig& cfg);

/// One supervised sample: subject and robot positions m frames in the past as
/// features, subject position now as target. Values are meters until
/// apply_scaler maps them to [0,1].
struct FeatureRow {
  std::string subject_id;
  double t_k = 0.0;      // target timestamp, seconds
  double t_lag = 0.0;    // feature timestamp, seconds (t_k - m/rate)
  double xs_lag = 0.0;
  double ys_lag = 0.0;
  double xr_lag = 0.0;
  double yr_lag = 0.0;
  double rel_dist_lag = 0.0;  // meaningful only when the lag config includes it
  double target_x = 0.0;
  double target_y = 0.0;
  bool out_of_range = false;  // set by apply_scaler when a foreign scaler maps outside [0,1]
};

/// Min-max normalization with bounds shared per world coordinate: all x-valued
/// columns (subject lag, robot lag, target) use one (min,max), likewise y, so
/// scaled predictions invert back to meters consistently. Relative distance
/// has its own bounds. Constant features fall back to an epsilon-guarded unit
/// denominator and scale to 0.
class MinMaxScaler {
 public:
  struct Bounds {
    double min = 0.0;
    double max = 0.0;
    double denominator() const;
  };

  MinMaxScaler() = default;
  MinMaxScaler(Bounds x, Bounds y, Bounds rel, bool has_rel);

  double scale_x(double v) const { return (v - x_.min) / x_.denominator(); }
  double scale_y(double v) const { return (v - y_.min) / y_.denominator(); }
  double scale_rel(double v) const;
  double invert_x(double s) const { return x_.min + s * x_.denominator(); }
  double invert_y(double s) const { return y_.min + s * y_.denominator(); }

  Bounds x_bounds() const { return x_; }
  Bounds y_bounds() const { return y_; }
  Bounds rel_bounds() const { return rel_; }
  bool has_rel() const { return has_rel_; }
  bool fitted() const { return fitted_; }

 private:
  Bounds x_, y_, rel_;
  bool has_rel_ = false;
  bool fitted_ = false;
};

struct SupervisedDataset {
  std::string environment_id;
  LagConfig lag;
  MinMaxScaler scaler;
  std::vector<FeatureRow> rows;  // scaled
};

/// Emits one unscaled row per index k >= m: features from index k-m, target =
/// subject position at k. Tracks must be sample-aligned (same count, rate, and
/// timestamps).
std::vector<FeatureRow> build_lagged_rows(const geometry::WorldTrack& subject,
                                          const geometry::WorldTrack& robot,
                                          const LagConfig& cfg,
                                          const std::string& subject_id = {});

MinMaxScaler fit_minmax_scaler(std::span<const FeatureRow> rows, bool include_relative_distance);

std::vector<FeatureRow> apply_scaler(std::span<const FeatureRow> rows, const MinMaxScaler& scaler,
                                     bool include_relative_distance);

/// Inverse transform of scaled (x, y) predictions back to meters.
std::vector<geometry::WorldPoint> invert_scaler(std::span<const geometry::WorldPoint> scaled,
                                                const MinMaxScaler& scaler);

/// Asserts the no-leakage invariant (every feature timestamp strictly earlier
/// than its target timestamp) over all rows; throws InvariantViolation.
void check_no_leakage(std::span<const FeatureRow> rows);

/// Feature matrix in training column order:
/// xs_lag, ys_lag, xr_lag, yr_lag[, rel_dist_lag].
std::vector<std::string> feature_names(const LagConfig& cfg);
std::vector<std::vector<double>> feature_matrix(std::span<const FeatureRow> rows,
                                                bool include_relative_distance);

}  // namespace evactrack::dataset
