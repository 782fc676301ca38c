#include "evactrack/filter.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <string>

namespace evactrack::filter {

void validate(const SgConfig& cfg) {
  if (cfg.window < 3 || cfg.window % 2 == 0)
    raise(ErrorCode::InvalidConfig,
          "Savitzky-Golay window must be odd and >= 3, got " + std::to_string(cfg.window));
  if (cfg.order < 0 || cfg.order >= cfg.window)
    raise(ErrorCode::InvalidConfig, "Savitzky-Golay order must satisfy 0 <= order < window");
  if (cfg.derivative < 0 || cfg.derivative > cfg.order)
    raise(ErrorCode::InvalidConfig,
          "Savitzky-Golay derivative must satisfy 0 <= derivative <= order");
}

std::vector<double> sg_coefficients_at(const SgConfig& cfg, double eval_offset) {
  validate(cfg);
  const int half = cfg.window / 2;
  const int m = cfg.order + 1;
  const int d = cfg.derivative;
  Eigen::MatrixXd design(cfg.window, m);
  for (int i = 0; i < cfg.window; ++i) {
    const double x = static_cast<double>(i - half);
    double p = 1.0;
    for (int j = 0; j < m; ++j) {
      design(i, j) = p;
      p *= x;
    }
  }

  // Row evaluating the d-th derivative of the fitted polynomial at the offset:
  // row_j = j!/(j-d)! * offset^(j-d).
  Eigen::VectorXd eval_row = Eigen::VectorXd::Zero(m);
  for (int j = d; j < m; ++j) {
    double factor = 1.0;
    for (int k = 0; k < d; ++k) factor *= static_cast<double>(j - k);
    eval_row(j) = factor * std::pow(eval_offset, j - d);
  }

  // weights = A (A^T A)^{-1} eval_row, so that w . y = p_fit^(d)(offset).
  Eigen::MatrixXd gram = design.transpose() * design;
  Eigen::VectorXd coeffs = gram.ldlt().solve(eval_row);
  Eigen::VectorXd weights = design * coeffs;
  return {weights.data(), weights.data() + weights.size()};
}

std::vector<double> sg_coefficients(const SgConfig& cfg) { return sg_coefficients_at(cfg, 0.0); }

std::vector<double> apply_series(std::span<const double> values, const SgConfig& cfg) {
  validate(cfg);
  const int n = static_cast<int>(values.size());
  if (n < cfg.window)
    raise(ErrorCode::TrackTooShort, "series of " + std::to_string(n) +
                                        " samples is shorter than the window of " +
                                        std::to_string(cfg.window));
  const int half = cfg.window / 2;

  // One weight vector per evaluation offset; interior points share the
  // centered one.
  std::vector<std::vector<double>> table(static_cast<std::size_t>(cfg.window));
  for (int off = -half; off <= half; ++off)
    table[static_cast<std::size_t>(off + half)] = sg_coefficients_at(cfg, off);

  std::vector<double> out(values.size());
  for (int i = 0; i < n; ++i) {
    int center = i;
    if (center < half) center = half;
    if (center > n - 1 - half) center = n - 1 - half;
    const auto& w = table[static_cast<std::size_t>(i - center + half)];
    double acc = 0.0;
    for (int j = 0; j < cfg.window; ++j)
      acc += w[static_cast<std::size_t>(j)] * values[static_cast<std::size_t>(center - half + j)];
    out[static_cast<std::size_t>(i)] = acc;
  }
  return out;
}

std::vector<double> smooth_series(std::span<const double> values, SgConfig cfg) {
  cfg.derivative = 0;
  return apply_series(values, cfg);
}

geometry::WorldTrack smooth_track(const geometry::WorldTrack& track, const SgConfig& cfg) {
  geometry::validate_uniform_sampling(track);
  std::vector<double> xs(track.samples.size());
  std::vector<double> ys(track.samples.size());
  for (std::size_t i = 0; i < track.samples.size(); ++i) {
    xs[i] = track.samples[i].point.x;
    ys[i] = track.samples[i].point.y;
  }
  const auto sx = apply_series(xs, cfg);
  const auto sy = apply_series(ys, cfg);
  geometry::WorldTrack out = track;
  for (std::size_t i = 0; i < out.samples.size(); ++i) out.samples[i].point = {sx[i], sy[i]};
  return out;
}

}  // namespace evactrack::filter
