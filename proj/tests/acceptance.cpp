// Acceptance suite: each test case checks one release criterion and prints a
// single [PASS]/[FAIL] line so the run reads as a checklist.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>
#include <vector>

#include <doctest.h>

#include "evactrack/dataset.hpp"
#include "evactrack/eval.hpp"
#include "evactrack/filter.hpp"
#include "evactrack/gbt.hpp"
#include "evactrack/geometry.hpp"
#include "evactrack/io.hpp"
#include "evactrack/pipeline.hpp"
#include "evactrack/simgen.hpp"
#include "gbt_reference.hpp"

using namespace evactrack;
namespace fs = std::filesystem;

namespace {

struct Criterion {
  bool ok = true;
  std::string notes;

  void expect(bool cond, const std::string& what) {
    if (cond) return;
    ok = false;
    if (!notes.empty()) notes += "; ";
    notes += what;
  }
};

void verdict(int number, const std::string& label, const Criterion& c) {
  std::printf("[%s] criterion %d: %s%s%s\n", c.ok ? "PASS" : "FAIL", number, label.c_str(),
              c.notes.empty() ? "" : " -- ", c.notes.c_str());
  std::fflush(stdout);
  CHECK_MESSAGE(c.ok, "criterion ", number, ": ", c.notes);
}

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

fs::path fresh_dir(const std::string& name) {
  const auto dir = fs::temp_directory_path() / "evactrack_acceptance" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path);
  if (!in.good()) return {};
  return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

const std::vector<eval::ErrorStats> kHoldoutFixture{
    {"1", 0.109, 0.067, 650},  {"2", 0.087, 0.074, 650}, {"3", 0.112, 0.070, 650},
    {"4", 0.095, 0.081, 650},  {"5", 0.090, 0.057, 650}, {"6", 0.077, 0.044, 650},
    {"7", 0.117, 0.079, 650},  {"8", 0.098, 0.064, 650}, {"9", 0.090, 0.095, 650},
    {"10", 0.109, 0.076, 650}, {"11", 0.108, 0.083, 650}, {"12", 0.103, 0.066, 650}};

const std::vector<eval::ErrorStats> kTransferFixture{{"1", 6.322, 1.654, 18},
                                                     {"2", 8.919, 2.173, 18},
                                                     {"3", 3.688, 2.834, 18},
                                                     {"4", 7.109, 2.574, 18},
                                                     {"5", 7.480, 2.015, 18}};

// The full in-domain experiment, run once and shared by criteria 6 to 9.
struct FullRun {
  pipeline::RunOptions options;
  pipeline::RunResult result;
  std::vector<simgen::Scenario> cohort;
  double seconds = 0.0;
};

const FullRun& full_run() {
  static const FullRun run = [] {
    FullRun r;
    r.options.spec = pipeline::physical_preset(7);
    r.options.stages.sg = pipeline::default_sg_for(r.options.spec);
    r.options.stages.lag = pipeline::default_lag_for(r.options.spec);
    r.options.out_dir = fresh_dir("full_a").string();
    const auto start = std::chrono::steady_clock::now();
    r.result = pipeline::run_pipeline(r.options);
    r.seconds = seconds_since(start);
    r.cohort = simgen::make_cohort(r.options.spec.scenario, r.options.spec.n_subjects,
                                   r.options.spec.jitter);
    return r;
  }();
  return run;
}

double rms_against_truth(const geometry::WorldTrack& reconstructed,
                         const geometry::WorldTrack& truth, Criterion& c) {
  if (reconstructed.samples.empty()) {
    c.expect(false, "empty reconstruction");
    return 1e9;
  }
  double acc = 0.0;
  for (const auto& s : reconstructed.samples) {
    const auto k = static_cast<std::size_t>(std::lround(s.t * truth.sample_rate_hz));
    if (k >= truth.samples.size()) {
      c.expect(false, "reconstructed sample outside the truth span");
      return 1e9;
    }
    const auto d = geometry::distance(s.point, truth.samples[k].point);
    acc += d * d;
  }
  return std::sqrt(acc / static_cast<double>(reconstructed.samples.size()));
}

eval::ErrorStats manual_fold(const std::vector<eval::SubjectDataset>& subjects,
                             std::size_t holdout, const dataset::LagConfig& lag,
                             const gbt::GbtHyperparams& hp) {
  std::vector<dataset::FeatureRow> train_rows;
  for (std::size_t j = 0; j < subjects.size(); ++j) {
    if (j == holdout) continue;
    train_rows.insert(train_rows.end(), subjects[j].rows.begin(), subjects[j].rows.end());
  }
  const auto scaler = dataset::fit_minmax_scaler(train_rows, lag.include_relative_distance);

  dataset::SupervisedDataset data;
  data.lag = lag;
  data.scaler = scaler;
  data.rows = dataset::apply_scaler(train_rows, scaler, lag.include_relative_distance);
  const auto model = gbt::train(data, hp);

  const auto scaled = dataset::apply_scaler(subjects[holdout].rows, scaler,
                                            lag.include_relative_distance);
  const auto features = dataset::feature_matrix(scaled, lag.include_relative_distance);
  std::vector<geometry::WorldPoint> predicted;
  for (const auto& f : features) {
    const auto [px, py] = model.predict(f);
    predicted.push_back({px, py});
  }
  const auto meters = dataset::invert_scaler(predicted, scaler);
  std::vector<geometry::WorldPoint> truth;
  for (const auto& r : subjects[holdout].rows) truth.push_back({r.target_x, r.target_y});
  return eval::l2_errors(meters, truth, subjects[holdout].subject_id);
}

}  // namespace

TEST_CASE("criterion 1") {
  Criterion c;
  const auto start = std::chrono::steady_clock::now();
  std::string mu;
  std::string sigma;
  try {
    const auto agg = eval::aggregate_report(kHoldoutFixture);
    mu = io::format_truncated3(agg.mu_e);
    sigma = io::format_truncated3(agg.sigma_e);
    c.expect(mu == "0.099", "mean rounded to " + mu);
    c.expect(sigma == "0.071", "sigma rounded to " + sigma);
    c.expect(agg.n_samples == 12 * 650, "sample count wrong");
  } catch (const std::exception& e) {
    c.expect(false, std::string("exception: ") + e.what());
  }
  const double elapsed = seconds_since(start);
  c.expect(elapsed < 1.0, "took " + io::format_fixed(elapsed, 3) + " s");
  verdict(1, "twelve-fold in-domain summary rounds to " + mu + "/" + sigma, c);
}

TEST_CASE("criterion 2") {
  Criterion c;
  std::string mu;
  std::string sigma;
  try {
    const auto agg = eval::aggregate_report(kTransferFixture);
    mu = io::format_truncated3(agg.mu_e);
    sigma = io::format_truncated3(agg.sigma_e);
    c.expect(mu == "6.703", "mean rounded to " + mu);
    c.expect(sigma == "2.250", "sigma rounded to " + sigma);
  } catch (const std::exception& e) {
    c.expect(false, std::string("exception: ") + e.what());
  }
  verdict(2, "five-run transfer summary rounds to " + mu + "/" + sigma, c);
}

TEST_CASE("criterion 3") {
  Criterion c;
  try {
    const std::vector<double> coeffs{0.7, -1.3, 0.9, 0.45};
    for (const auto& [window, order] : {std::pair{5, 2}, {11, 3}, {31, 3}}) {
      const filter::SgConfig cfg{window, order, 0};
      for (int degree = 0; degree <= order; ++degree) {
        std::vector<double> values(64);
        for (std::size_t i = 0; i < values.size(); ++i) {
          const double x = (static_cast<double>(i) - 32.0) / 64.0;
          double acc = 0.0;
          for (int j = degree; j >= 0; --j) acc = acc * x + coeffs[static_cast<std::size_t>(j)];
          values[i] = acc;
        }
        const auto smoothed = filter::smooth_series(values, cfg);
        for (std::size_t i = 0; i < values.size(); ++i)
          c.expect(std::abs(smoothed[i] - values[i]) <= 1e-9,
                   "window " + std::to_string(window) + " degree " + std::to_string(degree) +
                       " deviates at sample " + std::to_string(i));
      }
    }
    const auto kernel = filter::sg_coefficients({5, 2, 0});
    const std::vector<double> expected{-3.0 / 35, 12.0 / 35, 17.0 / 35, 12.0 / 35, -3.0 / 35};
    c.expect(kernel.size() == 5, "kernel size wrong");
    for (std::size_t i = 0; i < expected.size() && i < kernel.size(); ++i)
      c.expect(std::abs(kernel[i] - expected[i]) <= 1e-12,
               "kernel weight " + std::to_string(i) + " off");
  } catch (const std::exception& e) {
    c.expect(false, std::string("exception: ") + e.what());
  }
  verdict(3, "Savitzky-Golay reproduces polynomials through the stated orders", c);
}

TEST_CASE("criterion 4") {
  Criterion c;
  try {
    const auto spec = pipeline::physical_preset(1);
    for (const auto& cam : spec.scenario.cameras) {
      const auto input = simgen::export_calibration(cam, 12);
      const auto fitted = geometry::fit_calibration(input);

      const auto range = cam.valid_range();
      for (int i = 0; i <= 100; ++i) {
        const double v = range.min_v + (range.max_v - range.min_v) * i / 100.0;
        const double d_true = cam.depth(v);
        const double w_true = cam.width(v);
        c.expect(std::abs(fitted.depth(v) - d_true) <= 0.01 * std::abs(d_true),
                 cam.pose.camera_id + ": depth prediction off at v=" + io::format_fixed(v, 1));
        c.expect(std::abs(fitted.width(v) - w_true) <= 0.01 * std::abs(w_true),
                 cam.pose.camera_id + ": width prediction off at v=" + io::format_fixed(v, 1));
      }

      const auto span = cam.depth.depth_span();
      for (const double frac : {0.1, 0.3, 0.5, 0.7, 0.9}) {
        for (const double lateral : {-2.0, -0.5, 0.0, 1.5}) {
          const geometry::CameraPoint truth_point{lateral, span.first +
                                                  frac * (span.second - span.first)};
          const auto world = geometry::camera_to_world(truth_point, cam.pose);
          const double v = cam.depth.invert(truth_point.depth);
          const double u = cam.pose.principal_pixel_u + truth_point.lateral / cam.width(v);
          const auto back =
              geometry::camera_to_world(geometry::pixel_to_camera({u, v}, fitted), fitted.pose);
          c.expect(geometry::distance(world, back) <= 1e-6,
                   cam.pose.camera_id + ": round trip error above 1e-6 m");
        }
      }
    }
  } catch (const std::exception& e) {
    c.expect(false, std::string("exception: ") + e.what());
  }
  verdict(4, "calibration refit matches truth within 1%, round trip within 1e-6 m", c);
}

TEST_CASE("criterion 5") {
  Criterion c;
  const auto start = std::chrono::steady_clock::now();
  try {
    std::mt19937_64 rng(2026);
    std::uniform_real_distribution<double> value(-3.0, 3.0);
    for (int trial = 0; trial < 50; ++trial) {
      const std::size_t n = 2 + rng() % 63;
      const std::size_t n_features = 1 + rng() % 5;
      const bool quantized = trial % 2 == 0;
      gbtref::Matrix x(n, std::vector<double>(n_features));
      std::vector<double> y(n);
      for (std::size_t i = 0; i < n; ++i) {
        for (auto& v : x[i]) {
          v = value(rng);
          if (quantized) v = std::round(v * 4.0) / 4.0;
        }
        y[i] = value(rng);
        if (quantized) y[i] = std::round(y[i] * 8.0) / 8.0;
      }
      gbt::GbtHyperparams hp;
      hp.rounds = 1 + static_cast<int>(rng() % 8);
      hp.max_depth = 1 + static_cast<int>(rng() % 4);
      hp.learning_rate = 0.3;
      hp.lambda = std::vector<double>{0.0, 1.0, 2.5}[rng() % 3];
      hp.gamma = 0.0;
      hp.min_child_weight = rng() % 2 == 0 ? 1.0 : 2.0;

      std::vector<double> losses;
      const auto ensemble = gbt::train_single_target(x, y, hp, &losses);
      const auto reference = gbtref::ref_train(x, y, hp);

      for (std::size_t i = 0; i < n; ++i)
        c.expect(std::abs(gbt::predict_single(ensemble, x[i], hp.learning_rate) -
                          reference.predict(x[i])) <= 1e-9,
                 "trial " + std::to_string(trial) + ": row " + std::to_string(i) + " diverges");
      for (int p = 0; p < 20; ++p) {
        std::vector<double> probe(n_features);
        for (std::size_t f = 0; f < n_features; ++f) {
          probe[f] = value(rng);
          if (p % 4 == 0) probe[f] = x[rng() % n][f];
        }
        c.expect(std::abs(gbt::predict_single(ensemble, probe, hp.learning_rate) -
                          reference.predict(probe)) <= 1e-9,
                 "trial " + std::to_string(trial) + ": probe " + std::to_string(p) + " diverges");
      }

      c.expect(losses.size() == static_cast<std::size_t>(hp.rounds) + 1,
               "trial " + std::to_string(trial) + ": loss trace length wrong");
      for (std::size_t r = 1; r < losses.size(); ++r)
        c.expect(losses[r] <= losses[r - 1] + 1e-12,
                 "trial " + std::to_string(trial) + ": loss rose at round " + std::to_string(r));
    }
  } catch (const std::exception& e) {
    c.expect(false, std::string("exception: ") + e.what());
  }
  const double elapsed = seconds_since(start);
  c.expect(elapsed < 30.0, "took " + io::format_fixed(elapsed, 1) + " s");
  verdict(5, "boosting matches exhaustive split enumeration on 50 random datasets", c);
}

TEST_CASE("criterion 6") {
  Criterion c;
  std::string detail;
  const auto start = std::chrono::steady_clock::now();
  try {
    const auto& full = full_run();

    double worst_rms = 0.0;
    for (const auto& scenario : full.cohort) {
      const auto rec =
          pipeline::reconstruct(scenario, full.result.fitted_cameras, full.options.stages);
      const double rms_subject = rms_against_truth(rec.subject, scenario.subject_truth, c);
      const double rms_robot = rms_against_truth(rec.robot, scenario.robot_truth, c);
      worst_rms = std::max({worst_rms, rms_subject, rms_robot});
      c.expect(rms_subject <= 0.02,
               "subject " + scenario.subject_id + " reconstruction RMS " +
                   io::format_fixed(rms_subject, 4) + " m");
      c.expect(rms_robot <= 0.02, "subject " + scenario.subject_id + " robot RMS " +
                                      io::format_fixed(rms_robot, 4) + " m");
    }

    const auto& report = full.result.report;
    c.expect(report.folds.size() == 12, "expected 12 folds");
    double worst_fold = 0.0;
    for (const auto& fold : report.folds) {
      worst_fold = std::max(worst_fold, fold.mu_e);
      c.expect(fold.mu_e <= 0.25,
               "fold " + fold.holdout_id + " mean " + io::format_fixed(fold.mu_e, 3) + " m");
    }
    c.expect(report.aggregate.mu_e <= 0.15,
             "aggregate mean " + io::format_fixed(report.aggregate.mu_e, 3) + " m");

    const double elapsed = full.seconds + seconds_since(start);
    c.expect(elapsed < 300.0, "took " + io::format_fixed(elapsed, 1) + " s");
    detail = " (worst RMS " + io::format_fixed(worst_rms, 4) + " m, LOSO mean " +
             io::format_fixed(report.aggregate.mu_e, 4) + " m, worst fold " +
             io::format_fixed(worst_fold, 4) + " m, " + io::format_fixed(elapsed, 1) + " s)";
  } catch (const std::exception& e) {
    c.expect(false, std::string("exception: ") + e.what());
  }
  verdict(6, "in-domain cohort reconstructs to 2 cm and holds LOSO bounds" + detail, c);
}

TEST_CASE("criterion 7") {
  Criterion c;
  std::string detail;
  try {
    const auto& full = full_run();

    pipeline::TransferOptions opts;
    opts.train = full.options;
    opts.train.out_dir = fresh_dir("transfer_train").string();
    opts.test.spec = pipeline::sim1hz_preset(7);
    opts.test.stages.sg = pipeline::default_sg_for(opts.test.spec);
    opts.test.stages.lag = pipeline::default_lag_for(opts.test.spec);
    opts.test.stages.stitch = pipeline::default_stitch_for(opts.test.spec);
    opts.test.out_dir = fresh_dir("transfer_test").string();
    opts.out_dir = fresh_dir("transfer").string();

    const auto result = pipeline::run_transfer(opts);
    c.expect(result.report.folds.size() == 5, "expected 5 transfer runs");
    for (const auto& fold : result.report.folds) {
      c.expect(std::isfinite(fold.mu_e) && std::isfinite(fold.sigma_e),
               "run " + fold.holdout_id + " produced non-finite errors");
      c.expect(fold.mu_e > 0.0, "run " + fold.holdout_id + " mean not positive");
    }

    const double in_domain = full.result.report.aggregate.mu_e;
    const double transfer = result.report.aggregate.mu_e;
    c.expect(transfer > in_domain, "transfer mean " + io::format_fixed(transfer, 4) +
                                       " m not above in-domain " +
                                       io::format_fixed(in_domain, 4) + " m");

    const double diagonal = pipeline::bbox_diagonal(result.subjects);
    c.expect(transfer <= 0.15 * diagonal, "transfer mean " + io::format_fixed(transfer, 3) +
                                              " m above 15% of the " +
                                              io::format_fixed(diagonal, 1) + " m diagonal");
    detail = " (mean " + io::format_fixed(transfer, 3) + " m vs in-domain " +
             io::format_fixed(in_domain, 3) + " m, diagonal " + io::format_fixed(diagonal, 1) +
             " m)";
  } catch (const std::exception& e) {
    c.expect(false, std::string("exception: ") + e.what());
  }
  verdict(7, "transfer errors are finite, degraded, and bounded by the arena size" + detail, c);
}

TEST_CASE("criterion 8") {
  Criterion c;
  try {
    const auto& full = full_run();
    const auto report_a = slurp(fs::path(full.options.out_dir) / "report.csv");
    c.expect(!report_a.empty(), "first report missing");

#ifdef EVACTRACK_CLI_PATH
    const auto dir_b = fresh_dir("cli_b");
    const auto dir_c = fresh_dir("cli_c");
    for (const auto& dir : {dir_b, dir_c}) {
      const std::string cmd = std::string(EVACTRACK_CLI_PATH) +
                              " pipeline --preset physical-40hz --seed 7 --out \"" +
                              dir.string() + "\" > /dev/null 2>&1";
      c.expect(std::system(cmd.c_str()) == 0, "CLI run into " + dir.string() + " failed");
    }
    const auto report_b = slurp(dir_b / "report.csv");
    const auto report_c = slurp(dir_c / "report.csv");
    c.expect(!report_b.empty(), "second report missing");
    c.expect(report_a == report_b, "library and CLI reports differ");
    c.expect(report_b == report_c, "repeated CLI reports differ");
    c.expect(slurp(dir_b / "boxplot.csv") == slurp(dir_c / "boxplot.csv"),
             "repeated CLI boxplots differ");
#else
    c.expect(false, "CLI binary not available to this test");
#endif
  } catch (const std::exception& e) {
    c.expect(false, std::string("exception: ") + e.what());
  }
  verdict(8, "repeated runs with one seed produce byte-identical reports", c);
}

TEST_CASE("criterion 9") {
  Criterion c;
  try {
    const auto& full = full_run();
    const auto& subjects = full.result.subjects;
    const auto& lag = full.options.stages.lag;
    c.expect(subjects.size() == 12, "expected 12 subject datasets");

    const double lag_seconds = lag.lag_frames / lag.sample_rate_hz;
    for (const auto& subject : subjects) {
      c.expect(!subject.rows.empty(), "subject " + subject.subject_id + " has no rows");
      for (const auto& row : subject.rows) {
        c.expect(row.t_lag < row.t_k, "subject " + subject.subject_id + " has a feature at or "
                                      "after its target time");
        c.expect(std::abs((row.t_k - row.t_lag) - lag_seconds) <= 1e-9,
                 "subject " + subject.subject_id + " has a row off the configured lag");
        c.expect(row.subject_id == subject.subject_id,
                 "row attributed to the wrong subject in " + subject.subject_id);
      }
      dataset::check_no_leakage(subject.rows);
    }

    gbt::GbtHyperparams hp;
    hp.rounds = 40;
    const auto report =
        eval::leave_one_subject_out(subjects, lag, hp, std::vector<std::string>{});
    c.expect(report.folds.size() == subjects.size(), "fold count mismatch");
    for (std::size_t i = 0; i < subjects.size(); ++i) {
      const auto expected = manual_fold(subjects, i, lag, hp);
      const auto& got = report.folds[i];
      c.expect(got.holdout_id == subjects[i].subject_id, "fold order mismatch");
      c.expect(std::abs(got.mu_e - expected.mu_e) <= 1e-12,
               "fold " + got.holdout_id + " differs from the isolated re-run");
      c.expect(std::abs(got.sigma_e - expected.sigma_e) <= 1e-12,
               "fold " + got.holdout_id + " sigma differs from the isolated re-run");
      c.expect(got.n_samples == expected.n_samples, "fold " + got.holdout_id + " sample count");
      c.expect(got.n_samples == subjects[i].rows.size(),
               "fold " + got.holdout_id + " did not score exactly the holdout rows");
    }
  } catch (const std::exception& e) {
    c.expect(false, std::string("exception: ") + e.what());
  }
  verdict(9, "no fold sees its holdout and no feature postdates its target", c);
}
