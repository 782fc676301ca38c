#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "evactrack/dataset.hpp"
#include "evactrack/gbt.hpp"
#include "evactrack/geometry.hpp"

namespace evactrack::eval {

/// L2 prediction-error statistics for one holdout; sigma is the population
/// standard deviation.
struct ErrorStats {
  std::string holdout_id;
  double mu_e = 0.0;
  double sigma_e = 0.0;
  std::size_t n_samples = 0;
};

struct FoldReport {
  std::vector<ErrorStats> folds;
  ErrorStats aggregate;  // holdout_id "mean": unweighted means of mu_e and sigma_e
  std::vector<std::vector<double>> fold_distances;  // per fold, for box plots
};

std::vector<double> l2_distances(std::span<const geometry::WorldPoint> predicted,
                                 std::span<const geometry::WorldPoint> truth);

ErrorStats l2_errors(std::span<const geometry::WorldPoint> predicted,
                     std::span<const geometry::WorldPoint> truth, std::string holdout_id = {});

ErrorStats stats_from_distances(std::span<const double> distances, std::string holdout_id = {});

ErrorStats aggregate_report(std::span<const ErrorStats> stats);

/// Quantiles at p in [0,1] with linear interpolation between order statistics.
double quantile(std::span<const double> values, double p);

/// Unscaled (meter-unit) rows for one subject or one scenario run.
struct SubjectDataset {
  std::string subject_id;
  std::vector<dataset::FeatureRow> rows;
};

/// One fold per non-excluded subject: the model trains on every other
/// subject's rows with a scaler refit on those training rows only, then
/// predicts the holdout rows (scaled with the same scaler) and reports errors
/// in meters after inverse scaling.
FoldReport leave_one_subject_out(std::span<const SubjectDataset> subjects,
                                 const dataset::LagConfig& lag, const gbt::GbtHyperparams& hp,
                                 std::span<const std::string> exclusions);

/// Cross-environment protocol: train on all training-environment rows with
/// that environment's scaler, refit a scaler on the test environment's rows,
/// and report per-run errors in meters.
FoldReport evaluate_transfer(std::span<const SubjectDataset> train_subjects,
                             const dataset::LagConfig& train_lag,
                             std::span<const SubjectDataset> test_runs,
                             const dataset::LagConfig& test_lag, const gbt::GbtHyperparams& hp);

using Predictor = std::function<std::pair<double, double>(std::span<const double>)>;

/// One-step predictions at every index k >= lag, inverse-scaled to meters and
/// emitted as a track aligned with the subject's timestamps.
geometry::WorldTrack predict_track(const Predictor& predictor,
                                   const geometry::WorldTrack& subject,
                                   const geometry::WorldTrack& robot,
                                   const dataset::LagConfig& lag,
                                   const dataset::MinMaxScaler& scaler);

geometry::WorldTrack predict_track(const gbt::GbtModel& model, const geometry::WorldTrack& subject,
                                   const geometry::WorldTrack& robot,
                                   const dataset::LagConfig& lag,
                                   const dataset::MinMaxScaler& scaler);

}  // namespace evactrack::eval
