#include "evactrack/geometry.hpp"

#include <doctest.h>

#include "test_support.hpp"

using namespace evactrack;
using namespace evactrack::geometry;

namespace {

CameraModel simple_camera(AxisMapping mapping = AxisMapping::PlusXPlusY,
                          WorldPoint position = {0.0, 0.0}) {
  DepthModel depth({0.0, 0.03}, {50.0, 460.0});
  WidthModel width({0.01}, {50.0, 460.0});
  return make_camera_model({"cam", position, mapping, 320.0}, std::move(depth), std::move(width));
}

WorldTrack grid_track(double rate, std::vector<WorldPoint> points, double t0 = 0.0) {
  WorldTrack track;
  track.agent = Agent::Subject;
  track.sample_rate_hz = rate;
  for (std::size_t i = 0; i < points.size(); ++i)
    track.samples.push_back({t0 + static_cast<double>(i) / rate, points[i],
                             SampleSource::Observed, "cam"});
  return track;
}

}  // namespace

TEST_CASE("axis mapping tokens round trip") {
  for (const char* token : {"+x+y", "+x-y", "swap+-", "swap-+"}) {
    const AxisMapping m = axis_mapping_from_token(token);
    CHECK(std::string(to_token(m)) == token);
  }
  CHECK_ERROR(axis_mapping_from_token("+y+x"), InvalidInput);
}

TEST_CASE("axis mapping semantics") {
  const CameraPoint c{2.0, 3.0};  // lateral 2, depth 3

  auto w = apply_axis_mapping(AxisMapping::PlusXPlusY, c);
  CHECK(w.x == doctest::Approx(2.0));
  CHECK(w.y == doctest::Approx(3.0));

  w = apply_axis_mapping(AxisMapping::PlusXMinusY, c);
  CHECK(w.x == doctest::Approx(2.0));
  CHECK(w.y == doctest::Approx(-3.0));

  w = apply_axis_mapping(AxisMapping::SwapPlusMinus, c);
  CHECK(w.x == doctest::Approx(3.0));
  CHECK(w.y == doctest::Approx(-2.0));

  w = apply_axis_mapping(AxisMapping::SwapMinusPlus, c);
  CHECK(w.x == doctest::Approx(-3.0));
  CHECK(w.y == doctest::Approx(2.0));
}

TEST_CASE("axis mapping inversion is exact for all four mappings") {
  std::mt19937 rng(42);
  std::uniform_real_distribution<double> dist(-10.0, 10.0);
  for (const auto m : {AxisMapping::PlusXPlusY, AxisMapping::PlusXMinusY,
                       AxisMapping::SwapPlusMinus, AxisMapping::SwapMinusPlus}) {
    for (int i = 0; i < 50; ++i) {
      const CameraPoint c{dist(rng), dist(rng)};
      const CameraPoint back = invert_axis_mapping(m, apply_axis_mapping(m, c));
      CHECK(back.lateral == doctest::Approx(c.lateral).epsilon(1e-15));
      CHECK(back.depth == doctest::Approx(c.depth).epsilon(1e-15));
    }
  }
}

TEST_CASE("depth model evaluates and inverts") {
  const DepthModel depth({0.0, 0.03}, {50.0, 460.0});
  CHECK(depth(150.0) == doctest::Approx(4.5));
  CHECK(depth.increasing());
  CHECK(depth.invert(4.5) == doctest::Approx(150.0).epsilon(1e-9));
  CHECK_ERROR(depth(30.0), OutOfCalibratedRange);
  CHECK_ERROR(depth(470.0), OutOfCalibratedRange);
  CHECK_ERROR(depth.invert(100.0), NotInvertible);

  const auto [lo, hi] = depth.depth_span();
  CHECK(lo == doctest::Approx(1.5));
  CHECK(hi == doctest::Approx(13.8));
}

TEST_CASE("decreasing depth model accepted, inversion still works") {
  const DepthModel depth({14.3829, -0.035047, 1.2e-5}, {40.0, 460.0});
  CHECK_FALSE(depth.increasing());
  for (double v : {40.0, 123.0, 260.5, 460.0}) {
    const double d = depth(v);
    CHECK(depth.invert(d) == doctest::Approx(v).epsilon(1e-7));
  }
}

TEST_CASE("non-monotone or degenerate depth polynomials are rejected") {
  CHECK_ERROR(DepthModel({0.0, 0.03, -0.0001}, {0.0, 400.0}), NonMonotoneFit);
  CHECK_ERROR(DepthModel({5.0}, {0.0, 400.0}), InvalidInput);
  CHECK_ERROR(DepthModel({0.0, 1.0}, {400.0, 400.0}), InvalidInput);
}

TEST_CASE("width model must be strictly positive") {
  const WidthModel width({0.0257, -4.2857e-5}, {40.0, 460.0});
  CHECK(width(40.0) == doctest::Approx(0.0257 - 4.2857e-5 * 40.0));
  CHECK_ERROR(width(470.0), OutOfCalibratedRange);
  CHECK_ERROR(WidthModel({0.001, -1e-5}, {0.0, 460.0}), NonPositiveScale);
}

TEST_CASE("pixel to camera to world composition") {
  const auto cam = simple_camera();
  const CameraPoint c = pixel_to_camera({420.0, 150.0}, cam);
  CHECK(c.lateral == doctest::Approx(1.0));
  CHECK(c.depth == doctest::Approx(4.5));

  const WorldPoint w = camera_to_world(c, cam.pose);
  CHECK(w.x == doctest::Approx(1.0));
  CHECK(w.y == doctest::Approx(4.5));

  const CameraPoint back = world_to_camera(w, cam.pose);
  CHECK(back.lateral == doctest::Approx(1.0));
  CHECK(back.depth == doctest::Approx(4.5));

  CHECK_ERROR(pixel_to_camera({420.0, 30.0}, cam), OutOfCalibratedRange);
}

TEST_CASE("posed camera maps into world coordinates") {
  const auto cam = simple_camera(AxisMapping::SwapPlusMinus, {10.0, 5.0});
  const CameraPoint c = pixel_to_camera({520.0, 100.0}, cam);  // lateral 2, depth 3
  CHECK(c.lateral == doctest::Approx(2.0));
  CHECK(c.depth == doctest::Approx(3.0));
  const WorldPoint w = camera_to_world(c, cam.pose);
  CHECK(w.x == doctest::Approx(13.0));
  CHECK(w.y == doctest::Approx(3.0));
}

TEST_CASE("world-pixel round trip is tight across the calibrated range") {
  const auto cam = simple_camera(AxisMapping::PlusXMinusY, {3.0, 7.0});
  for (double v = 60.0; v <= 450.0; v += 13.0) {
    for (double u = 10.0; u <= 630.0; u += 62.0) {
      const CameraPoint c = pixel_to_camera({u, v}, cam);
      const WorldPoint w = camera_to_world(c, cam.pose);
      const CameraPoint c2 = world_to_camera(w, cam.pose);
      const double v2 = cam.depth.invert(c2.depth);
      const double u2 = cam.pose.principal_pixel_u + c2.lateral / cam.width(v2);
      CHECK(u2 == doctest::Approx(u).epsilon(1e-9));
      CHECK(v2 == doctest::Approx(v).epsilon(1e-9));
    }
  }
}

TEST_CASE("make_camera_model rejects mismatched ranges and non-positive depth") {
  DepthModel ok_depth({0.0, 0.03}, {50.0, 460.0});
  WidthModel other_range({0.01}, {0.0, 40.0});
  CHECK_ERROR(
      make_camera_model({"c", {0, 0}, AxisMapping::PlusXPlusY, 320.0}, ok_depth, other_range),
      InvalidConfig);

  DepthModel through_zero({-1.0, 0.03}, {0.0, 460.0});  // negative depth at low v
  WidthModel ok_width({0.01}, {0.0, 460.0});
  CHECK_ERROR(
      make_camera_model({"c", {0, 0}, AxisMapping::PlusXPlusY, 320.0}, through_zero, ok_width),
      InvalidConfig);
}

TEST_CASE("fit_depth_model matches a normal-equations reference") {
  std::mt19937 rng(7);
  std::uniform_real_distribution<double> v_dist(40.0, 460.0);
  std::uniform_real_distribution<double> noise(-0.01, 0.01);
  for (int trial = 0; trial < 10; ++trial) {
    std::vector<std::pair<double, double>> pairs;
    for (int i = 0; i < 25; ++i) {
      const double v = v_dist(rng);
      pairs.emplace_back(v, 1.0 + 0.028 * v + noise(rng));
    }
    const auto fitted = fit_depth_model(pairs, 2);
    const auto reference = testsupport::polyfit_normal(pairs, 2);
    for (double v = 40.0; v <= 460.0; v += 35.0)
      CHECK(fitted.evaluate_unchecked(v) ==
            doctest::Approx(testsupport::eval_poly(reference, v)).epsilon(1e-7));
  }
}

TEST_CASE("fit_depth_model recovers exact coefficients from clean samples") {
  const std::vector<double> truth{14.3829, -0.035047, 1.2e-5};
  std::vector<std::pair<double, double>> pairs;
  for (int i = 0; i < 12; ++i) {
    const double v = 40.0 + i * (420.0 / 11.0);
    pairs.emplace_back(v, testsupport::eval_poly(truth, v));
  }
  FitDiagnostics diag;
  const auto fitted = fit_depth_model(pairs, 2, &diag);
  for (int i = 0; i < 3; ++i) CHECK(fitted.coefficients()[i] == doctest::Approx(truth[i]).epsilon(1e-8));
  CHECK(diag.rms < 1e-9);
  CHECK(diag.condition_number > 0.0);
}

TEST_CASE("fit_depth_model error paths") {
  std::vector<std::pair<double, double>> two{{40.0, 1.0}, {400.0, 10.0}};
  CHECK_ERROR(fit_depth_model(two, 2), InsufficientPoints);

  std::vector<std::pair<double, double>> bumpy;
  for (int i = 0; i <= 10; ++i) {
    const double v = 40.0 + 40.0 * i;
    bumpy.emplace_back(v, (v - 240.0) * (v - 240.0) / 1e4);  // valley inside the range
  }
  CHECK_ERROR(fit_depth_model(bumpy, 2), NonMonotoneFit);
}

TEST_CASE("fit_width_model recovers scale and enforces positivity") {
  const std::vector<double> truth{0.0257, -4.2857e-5};
  std::vector<WidthSample> samples;
  for (int i = 0; i < 10; ++i) {
    const double v = 40.0 + i * (420.0 / 9.0);
    const double scale = testsupport::eval_poly(truth, v);
    samples.push_back({v, 0.5 / scale, 0.5});
  }
  const auto fitted = fit_width_model(samples, 1);
  CHECK(fitted.coefficients()[0] == doctest::Approx(truth[0]).epsilon(1e-9));
  CHECK(fitted.coefficients()[1] == doctest::Approx(truth[1]).epsilon(1e-9));
}

TEST_CASE("fit_calibration composes depth, width, and pose") {
  CalibrationInput input;
  input.camera_id = "room";
  input.world_position = {-0.5, 1.0};
  input.axis_mapping = AxisMapping::SwapPlusMinus;
  input.principal_pixel_u = 320.0;
  input.depth_degree = 1;
  input.width_degree = 0;
  for (int i = 0; i < 8; ++i) {
    const double v = 50.0 + 50.0 * i;
    input.depth_pairs.emplace_back(v, 0.03 * v);
    input.width_samples.push_back({v, 50.0, 0.5});
  }
  const auto cam = fit_calibration(input);
  CHECK(cam.pose.camera_id == "room");
  CHECK(cam.pose.axis_mapping == AxisMapping::SwapPlusMinus);
  CHECK(cam.depth(100.0) == doctest::Approx(3.0).epsilon(1e-9));
  CHECK(cam.width(100.0) == doctest::Approx(0.01).epsilon(1e-9));
}

TEST_CASE("validate_uniform_sampling accepts grids and rejects jitter") {
  auto track = grid_track(40.0, {{0, 0}, {1, 0}, {2, 0}, {3, 0}});
  validate_uniform_sampling(track);
  track.samples[2].t += 1e-3;
  CHECK_ERROR(validate_uniform_sampling(track), NonUniformSampling);
}

TEST_CASE("stitch merges overlapping segments by averaging") {
  auto a = grid_track(40.0, {{1.0, 1.0}, {1.1, 1.0}, {1.2, 1.0}});
  auto b = grid_track(40.0, {{1.3, 1.0}, {1.4, 1.0}}, 2.0 / 40.0);
  const std::vector<WorldTrack> segments{a, b};
  const auto merged = stitch_tracks(segments);
  REQUIRE(merged.samples.size() == 4);
  CHECK(merged.samples[0].point.x == doctest::Approx(1.0));
  CHECK(merged.samples[1].point.x == doctest::Approx(1.1));
  CHECK(merged.samples[2].point.x == doctest::Approx(1.25));  // (1.2 + 1.3) / 2
  CHECK(merged.samples[2].camera_id == "merged");
  CHECK(merged.samples[3].point.x == doctest::Approx(1.4));
  CHECK(merged.samples[3].t == doctest::Approx(3.0 / 40.0));
}

TEST_CASE("stitch rejects conflicting overlaps") {
  auto a = grid_track(40.0, {{1.0, 1.0}, {1.1, 1.0}, {1.2, 1.0}});
  auto b = grid_track(40.0, {{2.8, 1.0}, {2.9, 1.0}}, 2.0 / 40.0);  // 1.6 m away
  const std::vector<WorldTrack> segments{a, b};
  CHECK_ERROR(stitch_tracks(segments), ConflictingObservations);

  StitchOptions loose;
  loose.max_conflict_m = 5.0;
  CHECK(stitch_tracks(segments, loose).samples.size() == 4);
}

TEST_CASE("stitch fills interior holes by interpolation") {
  auto a = grid_track(40.0, {{0.0, 0.0}, {0.1, 0.0}});
  auto b = grid_track(40.0, {{0.4, 0.0}, {0.5, 0.0}}, 4.0 / 40.0);
  const std::vector<WorldTrack> segments{a, b};
  const auto merged = stitch_tracks(segments);
  REQUIRE(merged.samples.size() == 6);
  CHECK(merged.samples[2].point.x == doctest::Approx(0.2));
  CHECK(merged.samples[3].point.x == doctest::Approx(0.3));
  CHECK(merged.samples[2].source == SampleSource::Interpolated);
  validate_uniform_sampling(merged);

  StitchOptions strict;
  strict.fill_interior_gaps = false;
  CHECK_ERROR(stitch_tracks(segments, strict), NonUniformSampling);
}

TEST_CASE("stitch rejects mixed agents, rates, and off-grid samples") {
  auto a = grid_track(40.0, {{0.0, 0.0}, {0.1, 0.0}});
  auto b = a;
  b.agent = Agent::Robot;
  CHECK_ERROR(stitch_tracks(std::vector<WorldTrack>{a, b}), MisalignedTracks);

  auto c = a;
  c.sample_rate_hz = 30.0;
  CHECK_ERROR(stitch_tracks(std::vector<WorldTrack>{a, c}), MisalignedTracks);

  auto d = grid_track(40.0, {{0.2, 0.0}, {0.3, 0.0}}, 0.011);  // not on a's grid
  CHECK_ERROR(stitch_tracks(std::vector<WorldTrack>{a, d}), MisalignedTracks);

  CHECK_ERROR(stitch_tracks(std::vector<WorldTrack>{}), EmptyInput);
}

TEST_CASE("align_tracks crops to the common span") {
  auto a = grid_track(40.0, std::vector<WorldPoint>(41, {1.0, 1.0}));            // [0, 1]
  auto b = grid_track(40.0, std::vector<WorldPoint>(41, {2.0, 2.0}), 0.5);       // [0.5, 1.5]
  b.agent = Agent::Robot;
  const auto [ca, cb] = align_tracks(a, b);
  REQUIRE(ca.samples.size() == 21);
  REQUIRE(cb.samples.size() == 21);
  CHECK(ca.samples.front().t == doctest::Approx(0.5));
  CHECK(ca.samples.back().t == doctest::Approx(1.0));
  for (std::size_t i = 0; i < ca.samples.size(); ++i)
    CHECK(ca.samples[i].t == doctest::Approx(cb.samples[i].t).epsilon(1e-12));

  auto far = grid_track(40.0, std::vector<WorldPoint>(4, {0.0, 0.0}), 9.0);
  CHECK_ERROR(align_tracks(a, far), MisalignedTracks);
}

TEST_CASE("validate_track requires increasing timestamps and positive rate") {
  auto track = grid_track(40.0, {{0, 0}, {1, 0}});
  validate_track(track);
  track.samples[1].t = track.samples[0].t;
  CHECK_ERROR(validate_track(track), InvalidInput);
  auto bad_rate = grid_track(40.0, {{0, 0}, {1, 0}});
  bad_rate.sample_rate_hz = 0.0;
  CHECK_ERROR(validate_track(bad_rate), InvalidInput);
}
