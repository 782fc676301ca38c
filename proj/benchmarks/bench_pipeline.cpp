#include <random>
#include <vector>

#include <benchmark/benchmark.h>

#include "evactrack/dataset.hpp"
#include "evactrack/filter.hpp"
#include "evactrack/gbt.hpp"
#include "evactrack/geometry.hpp"
#include "evactrack/pipeline.hpp"
#include "evactrack/simgen.hpp"

using namespace evactrack;

namespace {

std::vector<double> noisy_series(std::size_t n) {
  std::mt19937 rng(42);
  std::normal_distribution<double> noise(0.0, 0.05);
  std::vector<double> values(n);
  for (std::size_t i = 0; i < n; ++i)
    values[i] = 0.001 * static_cast<double>(i) + noise(rng);
  return values;
}

geometry::WorldTrack line_track(geometry::Agent agent, std::size_t n, double x0) {
  geometry::WorldTrack t;
  t.agent = agent;
  t.sample_rate_hz = 40.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double s = static_cast<double>(i) / 40.0;
    t.samples.push_back({s, {x0 + s, 0.5 * s}, geometry::SampleSource::Observed, ""});
  }
  return t;
}

struct TrainingFixture {
  std::vector<std::vector<double>> x;
  std::vector<double> y;
};

TrainingFixture random_training(std::size_t rows, std::size_t features) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> value(0.0, 1.0);
  TrainingFixture f;
  f.x.assign(rows, std::vector<double>(features));
  f.y.resize(rows);
  for (std::size_t i = 0; i < rows; ++i) {
    for (auto& v : f.x[i]) v = value(rng);
    f.y[i] = f.x[i][0] + 0.3 * f.x[i].back() + 0.05 * value(rng);
  }
  return f;
}

void BM_SgCoefficients(benchmark::State& state) {
  const filter::SgConfig cfg{31, 3, 0};
  for (auto _ : state) benchmark::DoNotOptimize(filter::sg_coefficients(cfg));
}
BENCHMARK(BM_SgCoefficients);

void BM_SgSmoothSeries(benchmark::State& state) {
  const auto values = noisy_series(static_cast<std::size_t>(state.range(0)));
  const filter::SgConfig cfg{31, 3, 0};
  for (auto _ : state) benchmark::DoNotOptimize(filter::smooth_series(values, cfg));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_SgSmoothSeries)->Arg(1 << 10)->Arg(1 << 14);

void BM_DepthFit(benchmark::State& state) {
  const auto cam = pipeline::physical_preset(1).scenario.cameras.front();
  const auto input = simgen::export_calibration(cam, 24);
  for (auto _ : state)
    benchmark::DoNotOptimize(geometry::fit_depth_model(input.depth_pairs, input.depth_degree));
}
BENCHMARK(BM_DepthFit);

void BM_LagRows(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto subject = line_track(geometry::Agent::Subject, n, 0.0);
  const auto robot = line_track(geometry::Agent::Robot, n, 1.5);
  const dataset::LagConfig cfg{10, true, 40.0};
  for (auto _ : state)
    benchmark::DoNotOptimize(dataset::build_lagged_rows(subject, robot, cfg, "1"));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_LagRows)->Arg(1 << 12);

void BM_ScalerRoundTrip(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto subject = line_track(geometry::Agent::Subject, n, 0.0);
  const auto robot = line_track(geometry::Agent::Robot, n, 1.5);
  const auto rows = dataset::build_lagged_rows(subject, robot, {10, true, 40.0}, "1");
  for (auto _ : state) {
    const auto scaler = dataset::fit_minmax_scaler(rows, true);
    benchmark::DoNotOptimize(dataset::apply_scaler(rows, scaler, true));
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(rows.size()));
}
BENCHMARK(BM_ScalerRoundTrip)->Arg(1 << 12);

void BM_GbtTrain(benchmark::State& state) {
  const auto fixture = random_training(static_cast<std::size_t>(state.range(0)), 5);
  gbt::GbtHyperparams hp;
  hp.rounds = 20;
  for (auto _ : state)
    benchmark::DoNotOptimize(gbt::train_single_target(fixture.x, fixture.y, hp));
  state.SetItemsProcessed(state.iterations() * state.range(0) * hp.rounds);
}
BENCHMARK(BM_GbtTrain)->Arg(1 << 8)->Arg(1 << 10)->Arg(1 << 12)->Unit(benchmark::kMillisecond);

void BM_GbtPredict(benchmark::State& state) {
  const auto fixture = random_training(1 << 12, 5);
  gbt::GbtHyperparams hp;
  hp.rounds = 50;
  const auto ensemble = gbt::train_single_target(fixture.x, fixture.y, hp);
  for (auto _ : state)
    for (const auto& row : fixture.x)
      benchmark::DoNotOptimize(gbt::predict_single(ensemble, row, hp.learning_rate));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(fixture.x.size()));
}
BENCHMARK(BM_GbtPredict);

void BM_GenerateScenario(benchmark::State& state) {
  auto cfg = pipeline::physical_preset(7).scenario;
  for (auto _ : state) benchmark::DoNotOptimize(simgen::generate_scenario(cfg));
}
BENCHMARK(BM_GenerateScenario)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
