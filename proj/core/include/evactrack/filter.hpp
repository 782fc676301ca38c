#pragma once

#include <span>
#include <vector>

#include "evactrack/geometry.hpp"

namespace evactrack::filter {

/// Savitzky-Golay configuration. The window must be odd and larger than the
/// polynomial order so the local least-squares fit is determined; derivative 0
/// means plain smoothing.
struct SgConfig {
  int window = 31;
  int order = 3;
  int derivative = 0;
};

void validate(const SgConfig& cfg);

/// Convolution weights producing the windowed least-squares fit's value (or
/// cfg.derivative-th derivative, unit sample step) at the window center.
/// Ordered oldest sample first.
std::vector<double> sg_coefficients(const SgConfig& cfg);

/// Weights evaluating the windowed fit at `eval_offset` samples from the
/// window center instead of at the center itself. Used near series edges
/// where a centered window would run out of data; polynomial inputs up to
/// cfg.order are still reproduced exactly.
std::vector<double> sg_coefficients_at(const SgConfig& cfg, double eval_offset);

/// Applies the filter with centered windows in the interior and edge-anchored
/// windows with shifted evaluation points near the boundaries. Output length
/// equals input length.
std::vector<double> apply_series(std::span<const double> values, const SgConfig& cfg);

/// apply_series with derivative forced to 0.
std::vector<double> smooth_series(std::span<const double> values, SgConfig cfg);

/// Applies the filter to the x and y coordinates of a uniformly sampled track
/// independently. Timestamps, agent, and sample sources are preserved.
geometry::WorldTrack smooth_track(const geometry::WorldTrack& track, const SgConfig& cfg);

}  // namespace evactrack::filter
