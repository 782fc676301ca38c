#include "evactrack/dataset.hpp"

#include <doctest.h>

#include "test_support.hpp"

using namespace evactrack;
using namespace evactrack::dataset;

namespace {

geometry::WorldTrack linear_track(geometry::Agent agent, double rate, std::size_t n, double x0,
                                  double dx, double y0, double dy) {
  geometry::WorldTrack track;
  track.agent = agent;
  track.sample_rate_hz = rate;
  for (std::size_t i = 0; i < n; ++i)
    track.samples.push_back({static_cast<double>(i) / rate, {x0 + dx * i, y0 + dy * i},
                             geometry::SampleSource::Observed, ""});
  return track;
}

FeatureRow raw_row(double xs, double ys, double xr, double yr, double rel, double tx, double ty) {
  FeatureRow r;
  r.t_k = 1.0;
  r.t_lag = 0.75;
  r.xs_lag = xs;
  r.ys_lag = ys;
  r.xr_lag = xr;
  r.yr_lag = yr;
  r.rel_dist_lag = rel;
  r.target_x = tx;
  r.target_y = ty;
  return r;
}

}  // namespace

TEST_CASE("lagged rows take features from k-m and targets from k") {
  const auto subject = linear_track(geometry::Agent::Subject, 40.0, 6, 0.0, 0.1, 0.0, 0.0);
  const auto robot = linear_track(geometry::Agent::Robot, 40.0, 6, 5.0, -0.1, 2.0, 0.0);
  const LagConfig cfg{2, true, 40.0};
  const auto rows = build_lagged_rows(subject, robot, cfg, "7");
  REQUIRE(rows.size() == 4);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const std::size_t k = i + 2;
    const auto& r = rows[i];
    CHECK(r.subject_id == "7");
    CHECK(r.t_k == doctest::Approx(k / 40.0));
    CHECK(r.t_lag == doctest::Approx((k - 2) / 40.0));
    CHECK(r.xs_lag == doctest::Approx(0.1 * (k - 2)));
    CHECK(r.ys_lag == doctest::Approx(0.0));
    CHECK(r.xr_lag == doctest::Approx(5.0 - 0.1 * (k - 2)));
    CHECK(r.yr_lag == doctest::Approx(2.0));
    const double dx = 0.1 * (k - 2) - (5.0 - 0.1 * (k - 2));
    CHECK(r.rel_dist_lag == doctest::Approx(std::hypot(dx, -2.0)));
    CHECK(r.target_x == doctest::Approx(0.1 * k));
    CHECK(r.target_y == doctest::Approx(0.0));
    CHECK(r.t_lag < r.t_k);
  }
  check_no_leakage(rows);
}

TEST_CASE("row construction rejects misaligned or short tracks") {
  const auto subject = linear_track(geometry::Agent::Subject, 40.0, 6, 0, 0.1, 0, 0);
  auto robot = linear_track(geometry::Agent::Robot, 40.0, 5, 5, -0.1, 2, 0);
  const LagConfig cfg{2, true, 40.0};
  CHECK_ERROR(build_lagged_rows(subject, robot, cfg), MisalignedTracks);

  auto shifted = linear_track(geometry::Agent::Robot, 40.0, 6, 5, -0.1, 2, 0);
  for (auto& s : shifted.samples) s.t += 0.003;
  CHECK_ERROR(build_lagged_rows(subject, shifted, cfg), MisalignedTracks);

  const auto tiny_s = linear_track(geometry::Agent::Subject, 40.0, 2, 0, 0.1, 0, 0);
  const auto tiny_r = linear_track(geometry::Agent::Robot, 40.0, 2, 5, -0.1, 2, 0);
  CHECK_ERROR(build_lagged_rows(tiny_s, tiny_r, cfg), TrackShorterThanLag);

  CHECK_ERROR(validate(LagConfig{0, true, 40.0}), InvalidConfig);
  CHECK_ERROR(validate(LagConfig{10, true, 0.0}), InvalidConfig);
}

TEST_CASE("scaler shares bounds across all x-valued columns") {
  // xs values {2}, xr {4}, target_x {6}: shared X bounds are [2, 6].
  std::vector<FeatureRow> rows{raw_row(2, 10, 4, 30, 1.0, 6, 20)};
  const auto scaler = fit_minmax_scaler(rows, true);
  CHECK(scaler.x_bounds().min == doctest::Approx(2.0));
  CHECK(scaler.x_bounds().max == doctest::Approx(6.0));
  CHECK(scaler.scale_x(2.0) == doctest::Approx(0.0));
  CHECK(scaler.scale_x(4.0) == doctest::Approx(0.5));
  CHECK(scaler.scale_x(6.0) == doctest::Approx(1.0));
  CHECK(scaler.y_bounds().min == doctest::Approx(10.0));
  CHECK(scaler.y_bounds().max == doctest::Approx(30.0));

  const auto scaled = apply_scaler(rows, scaler, true);
  REQUIRE(scaled.size() == 1);
  CHECK(scaled[0].xs_lag == doctest::Approx(0.0));
  CHECK(scaled[0].xr_lag == doctest::Approx(0.5));
  CHECK(scaled[0].target_x == doctest::Approx(1.0));
  CHECK(scaled[0].ys_lag == doctest::Approx(0.0));
  CHECK(scaled[0].target_y == doctest::Approx(0.5));
  CHECK_FALSE(scaled[0].out_of_range);
}

TEST_CASE("constant columns scale to zero with a unit denominator") {
  std::vector<FeatureRow> rows{raw_row(3, 3, 3, 3, 3, 3, 3), raw_row(3, 3, 3, 3, 3, 3, 3)};
  const auto scaler = fit_minmax_scaler(rows, true);
  CHECK(scaler.x_bounds().denominator() == doctest::Approx(1.0));
  const auto scaled = apply_scaler(rows, scaler, true);
  CHECK(scaled[0].xs_lag == doctest::Approx(0.0));
  CHECK(scaled[0].target_y == doctest::Approx(0.0));
  CHECK(scaler.invert_x(scaled[0].target_x) == doctest::Approx(3.0));
}

TEST_CASE("scale and invert round trip") {
  std::mt19937 rng(3);
  std::uniform_real_distribution<double> dist(-20.0, 20.0);
  std::vector<FeatureRow> rows;
  for (int i = 0; i < 40; ++i)
    rows.push_back(raw_row(dist(rng), dist(rng), dist(rng), dist(rng), std::abs(dist(rng)),
                           dist(rng), dist(rng)));
  const auto scaler = fit_minmax_scaler(rows, true);
  const auto scaled = apply_scaler(rows, scaler, true);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    CHECK(scaled[i].xs_lag >= -1e-12);
    CHECK(scaled[i].xs_lag <= 1.0 + 1e-12);
    CHECK_FALSE(scaled[i].out_of_range);
    CHECK(scaler.invert_x(scaled[i].target_x) == doctest::Approx(rows[i].target_x).epsilon(1e-10));
    CHECK(scaler.invert_y(scaled[i].target_y) == doctest::Approx(rows[i].target_y).epsilon(1e-10));
  }

  std::vector<geometry::WorldPoint> preds{{scaled[0].target_x, scaled[0].target_y}};
  const auto inverted = invert_scaler(preds, scaler);
  CHECK(inverted[0].x == doctest::Approx(rows[0].target_x).epsilon(1e-10));
  CHECK(inverted[0].y == doctest::Approx(rows[0].target_y).epsilon(1e-10));
}

TEST_CASE("foreign rows beyond the fitted bounds are flagged") {
  std::vector<FeatureRow> rows{raw_row(0, 0, 1, 1, 0.5, 2, 2), raw_row(1, 1, 2, 2, 1.0, 0, 0)};
  const auto scaler = fit_minmax_scaler(rows, true);

  std::vector<FeatureRow> outside{raw_row(5, 0, 1, 1, 0.5, 2, 2)};
  const auto scaled = apply_scaler(outside, scaler, true);
  CHECK(scaled[0].out_of_range);

  std::vector<FeatureRow> boundary{raw_row(2, 0, 1, 1, 0.5, 2, 2)};  // exactly max
  CHECK_FALSE(apply_scaler(boundary, scaler, true)[0].out_of_range);
}

TEST_CASE("relative-distance column handling") {
  std::vector<FeatureRow> rows{raw_row(0, 0, 1, 1, 0.5, 2, 2), raw_row(1, 1, 2, 2, 1.5, 0, 0)};
  const auto without = fit_minmax_scaler(rows, false);
  CHECK_FALSE(without.has_rel());
  CHECK_ERROR(without.scale_rel(0.5), DimensionMismatch);
  CHECK_ERROR(apply_scaler(rows, without, true), DimensionMismatch);

  const auto with = fit_minmax_scaler(rows, true);
  CHECK(with.scale_rel(0.5) == doctest::Approx(0.0));
  CHECK(with.scale_rel(1.5) == doctest::Approx(1.0));
}

TEST_CASE("scaler misuse errors") {
  CHECK_ERROR(fit_minmax_scaler(std::vector<FeatureRow>{}, true), EmptyInput);
  MinMaxScaler unfitted;
  CHECK_FALSE(unfitted.fitted());
  std::vector<FeatureRow> rows{raw_row(0, 0, 1, 1, 0.5, 2, 2)};
  CHECK_ERROR(apply_scaler(rows, unfitted, true), InvalidInput);
  CHECK_ERROR((MinMaxScaler{{1.0, 0.0}, {0.0, 1.0}, {0.0, 1.0}, true}), InvalidInput);
}

TEST_CASE("leakage check rejects rows whose features are not strictly older") {
  std::vector<FeatureRow> rows{raw_row(0, 0, 1, 1, 0.5, 2, 2)};
  check_no_leakage(rows);
  rows[0].t_lag = rows[0].t_k;
  CHECK_ERROR(check_no_leakage(rows), InvariantViolation);
  rows[0].t_lag = rows[0].t_k + 0.5;
  CHECK_ERROR(check_no_leakage(rows), InvariantViolation);
}

TEST_CASE("feature names and matrix layout") {
  const LagConfig with_rel{10, true, 40.0};
  CHECK(feature_names(with_rel) ==
        std::vector<std::string>{"xs_l10", "ys_l10", "xr_l10", "yr_l10", "rel_l10"});
  const LagConfig without{20, false, 40.0};
  CHECK(feature_names(without) == std::vector<std::string>{"xs_l20", "ys_l20", "xr_l20", "yr_l20"});

  std::vector<FeatureRow> rows{raw_row(1, 2, 3, 4, 5, 6, 7)};
  const auto m = feature_matrix(rows, true);
  REQUIRE(m.size() == 1);
  CHECK(m[0] == std::vector<double>{1, 2, 3, 4, 5});
  CHECK(feature_matrix(rows, false)[0] == std::vector<double>{1, 2, 3, 4});
}
