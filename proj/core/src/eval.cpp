#include "evactrack/eval.hpp"

#include <algorithm>
#include <cmath>

namespace evactrack::eval {

namespace {

std::vector<dataset::FeatureRow> concat_rows(std::span<const SubjectDataset> subjects,
                                             std::span<const std::string> skip = {}) {
  std::vector<dataset::FeatureRow> rows;
  for (const auto& s : subjects) {
    if (std::find(skip.begin(), skip.end(), s.subject_id) != skip.end()) continue;
    rows.insert(rows.end(), s.rows.begin(), s.rows.end());
  }
  return rows;
}

/// Predicts one scaled dataset and reports errors in meters against the
/// unscaled rows it came from.
std::vector<double> holdout_distances(const gbt::GbtModel& model,
                                      std::span<const dataset::FeatureRow> unscaled,
                                      const dataset::MinMaxScaler& scaler, bool with_rel) {
  const auto scaled = dataset::apply_scaler(unscaled, scaler, with_rel);
  const auto features = dataset::feature_matrix(scaled, with_rel);
  std::vector<geometry::WorldPoint> predicted;
  predicted.reserve(features.size());
  for (const auto& f : features) {
    const auto [px, py] = model.predict(f);
    predicted.push_back({px, py});
  }
  const auto meters = dataset::invert_scaler(predicted, scaler);
  std::vector<geometry::WorldPoint> truth;
  truth.reserve(unscaled.size());
  for (const auto& r : unscaled) truth.push_back({r.target_x, r.target_y});
  return l2_distances(meters, truth);
}

gbt::GbtModel train_on(std::span<const dataset::FeatureRow> unscaled,
                       const dataset::MinMaxScaler& scaler, const dataset::LagConfig& lag,
                       const gbt::GbtHyperparams& hp) {
  dataset::SupervisedDataset data;
  data.lag = lag;
  data.scaler = scaler;
  data.rows = dataset::apply_scaler(unscaled, scaler, lag.include_relative_distance);
  return gbt::train(data, hp);
}

}  // namespace

std::vector<double> l2_distances(std::span<const geometry::WorldPoint> predicted,
                                 std::span<const geometry::WorldPoint> truth) {
  if (predicted.size() != truth.size())
    raise(ErrorCode::LengthMismatch,
          "predicted " + std::to_string(predicted.size()) + " points, truth " +
              std::to_string(truth.size()));
  std::vector<double> out(predicted.size());
  for (std::size_t i = 0; i < predicted.size(); ++i)
    out[i] = geometry::distance(predicted[i], truth[i]);
  return out;
}

ErrorStats stats_from_distances(std::span<const double> distances, std::string holdout_id) {
  if (distances.empty()) raise(ErrorCode::EmptyInput, "no error samples");
  ErrorStats stats;
  stats.holdout_id = std::move(holdout_id);
  stats.n_samples = distances.size();
  const double n = static_cast<double>(distances.size());
  double acc = 0.0;
  for (double d : distances) acc += d;
  stats.mu_e = acc / n;
  double var = 0.0;
  for (double d : distances) var += (d - stats.mu_e) * (d - stats.mu_e);
  stats.sigma_e = std::sqrt(var / n);
  return stats;
}

ErrorStats l2_errors(std::span<const geometry::WorldPoint> predicted,
                     std::span<const geometry::WorldPoint> truth, std::string holdout_id) {
  return stats_from_distances(l2_distances(predicted, truth), std::move(holdout_id));
}

ErrorStats aggregate_report(std::span<const ErrorStats> stats) {
  if (stats.empty()) raise(ErrorCode::EmptyInput, "no folds to aggregate");
  ErrorStats agg;
  agg.holdout_id = "mean";
  for (const auto& s : stats) {
    agg.mu_e += s.mu_e;
    agg.sigma_e += s.sigma_e;
    agg.n_samples += s.n_samples;
  }
  agg.mu_e /= static_cast<double>(stats.size());
  agg.sigma_e /= static_cast<double>(stats.size());
  return agg;
}

double quantile(std::span<const double> values, double p) {
  if (values.empty()) raise(ErrorCode::EmptyInput, "quantile of empty set");
  if (p < 0.0 || p > 1.0) raise(ErrorCode::InvalidInput, "quantile p must be in [0,1]");
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  const double pos = p * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(pos);
  if (lo + 1 >= sorted.size()) return sorted.back();
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[lo + 1] - sorted[lo]);
}

FoldReport leave_one_subject_out(std::span<const SubjectDataset> subjects,
                                 const dataset::LagConfig& lag, const gbt::GbtHyperparams& hp,
                                 std::span<const std::string> exclusions) {
  std::vector<const SubjectDataset*> usable;
  for (const auto& s : subjects) {
    if (std::find(exclusions.begin(), exclusions.end(), s.subject_id) == exclusions.end())
      usable.push_back(&s);
  }
  if (usable.size() < 2)
    raise(ErrorCode::TooFewSubjects, "leave-one-subject-out needs at least 2 usable subjects, "
                                     "got " + std::to_string(usable.size()));

  const bool with_rel = lag.include_relative_distance;
  FoldReport report;
  for (const SubjectDataset* holdout : usable) {
    std::vector<dataset::FeatureRow> train_rows;
    for (const SubjectDataset* other : usable) {
      if (other == holdout) continue;
      train_rows.insert(train_rows.end(), other->rows.begin(), other->rows.end());
    }
    dataset::check_no_leakage(train_rows);
    dataset::check_no_leakage(holdout->rows);
    const auto scaler = dataset::fit_minmax_scaler(train_rows, with_rel);
    const auto model = train_on(train_rows, scaler, lag, hp);
    auto distances = holdout_distances(model, holdout->rows, scaler, with_rel);
    report.folds.push_back(stats_from_distances(distances, holdout->subject_id));
    report.fold_distances.push_back(std::move(distances));
  }
  report.aggregate = aggregate_report(report.folds);
  return report;
}

FoldReport evaluate_transfer(std::span<const SubjectDataset> train_subjects,
                             const dataset::LagConfig& train_lag,
                             std::span<const SubjectDataset> test_runs,
                             const dataset::LagConfig& test_lag, const gbt::GbtHyperparams& hp) {
  if (train_lag.include_relative_distance != test_lag.include_relative_distance)
    raise(ErrorCode::DimensionMismatch,
          "train and test environments disagree on the relative-distance feature");
  const bool with_rel = train_lag.include_relative_distance;

  const auto train_rows = concat_rows(train_subjects);
  if (train_rows.empty()) raise(ErrorCode::EmptyInput, "no training rows");
  dataset::check_no_leakage(train_rows);
  const auto train_scaler = dataset::fit_minmax_scaler(train_rows, with_rel);
  const auto model = train_on(train_rows, train_scaler, train_lag, hp);

  const auto all_test_rows = concat_rows(test_runs);
  if (all_test_rows.empty()) raise(ErrorCode::EmptyInput, "no test rows");
  dataset::check_no_leakage(all_test_rows);
  const auto test_scaler = dataset::fit_minmax_scaler(all_test_rows, with_rel);

  FoldReport report;
  for (const auto& run : test_runs) {
    auto distances = holdout_distances(model, run.rows, test_scaler, with_rel);
    report.folds.push_back(stats_from_distances(distances, run.subject_id));
    report.fold_distances.push_back(std::move(distances));
  }
  report.aggregate = aggregate_report(report.folds);
  return report;
}

geometry::WorldTrack predict_track(const Predictor& predictor,
                                   const geometry::WorldTrack& subject,
                                   const geometry::WorldTrack& robot,
                                   const dataset::LagConfig& lag,
                                   const dataset::MinMaxScaler& scaler) {
  const auto raw = dataset::build_lagged_rows(subject, robot, lag);
  const auto scaled = dataset::apply_scaler(raw, scaler, lag.include_relative_distance);
  const auto features = dataset::feature_matrix(scaled, lag.include_relative_distance);

  std::vector<geometry::WorldPoint> predictions;
  predictions.reserve(features.size());
  for (const auto& f : features) {
    const auto [px, py] = predictor(f);
    predictions.push_back({px, py});
  }
  const auto meters = dataset::invert_scaler(predictions, scaler);

  geometry::WorldTrack out;
  out.agent = subject.agent;
  out.sample_rate_hz = subject.sample_rate_hz;
  out.samples.reserve(meters.size());
  for (std::size_t i = 0; i < meters.size(); ++i) {
    geometry::TrackSample s;
    s.t = scaled[i].t_k;
    s.point = meters[i];
    s.source = geometry::SampleSource::Observed;
    out.samples.push_back(std::move(s));
  }
  return out;
}

geometry::WorldTrack predict_track(const gbt::GbtModel& model, const geometry::WorldTrack& subject,
                                   const geometry::WorldTrack& robot,
                                   const dataset::LagConfig& lag,
                                   const dataset::MinMaxScaler& scaler) {
  return predict_track(
      [&model](std::span<const double> f) { return model.predict(f); }, subject, robot, lag,
      scaler);
}

}  // namespace evactrack::eval
