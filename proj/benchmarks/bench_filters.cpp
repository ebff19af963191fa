#include <benchmark/benchmark.h>

#include <random>

#include "random_models.hpp"
#include "rolf/experiment.hpp"
#include "rolf/filters.hpp"
#include "rolf/metrics.hpp"
#include "rolf/simulate.hpp"

using namespace rolf;
namespace ts = rolf::testsupport;

namespace {

ScenarioConfig bench_scenario(int horizon) {
  ScenarioConfig sc;
  sc.horizon = horizon;
  sc.seed = 1234;
  return sc;
}

LinearGaussianModel bench_model(const ScenarioConfig& sc) {
  const auto [F, H] = build_cv_model(sc.dt);
  LinearGaussianModel model;
  model.F = F;
  model.H = H;
  model.Q = nominal_process_noise(sc);
  model.R = sc.meas_noise;
  model.init.mean = Eigen::Vector4d::Zero();
  model.init.cov = Eigen::Matrix4d::Identity();
  return model;
}

void BM_KfUpdate(benchmark::State& state) {
  std::mt19937_64 rng(1);
  GaussianBelief prior;
  prior.mean = ts::random_vector(rng, 4);
  prior.cov = ts::random_spd(rng, 4, 0.3);
  const Eigen::MatrixXd H = ts::random_matrix(rng, 2, 4);
  const Eigen::MatrixXd R = ts::random_spd(rng, 2, 0.3);
  const Eigen::VectorXd y = ts::random_vector(rng, 2);
  for (auto _ : state) {
    auto result = kf_update_information(prior, H, R, y, 1.0);
    benchmark::DoNotOptimize(result.posterior.mean.data());
  }
}
BENCHMARK(BM_KfUpdate);

void BM_StfFadingFactor(benchmark::State& state) {
  std::mt19937_64 rng(2);
  const Eigen::MatrixXd sigma = ts::random_spd(rng, 4, 0.3);
  const Eigen::MatrixXd F = ts::random_matrix(rng, 4, 4);
  const Eigen::MatrixXd H = ts::random_matrix(rng, 2, 4);
  const Eigen::MatrixXd Q = ts::random_spd(rng, 4, 0.2);
  const Eigen::MatrixXd R = ts::random_spd(rng, 2, 0.2);
  const Eigen::VectorXd innovation = ts::random_vector(rng, 2);
  for (auto _ : state) {
    benchmark::DoNotOptimize(stf_fading_factor(innovation, sigma, F, H, Q, R, 0.95));
  }
}
BENCHMARK(BM_StfFadingFactor);

void BM_GenerateScenario(benchmark::State& state) {
  const auto sc = bench_scenario(static_cast<int>(state.range(0)));
  for (auto _ : state) {
    auto data = generate_scenario(sc);
    benchmark::DoNotOptimize(data.trajectory.states.data());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_GenerateScenario)->Arg(1000)->Arg(10000);

void BM_FilterRun(benchmark::State& state) {
  const auto sc = bench_scenario(static_cast<int>(state.range(0)));
  const auto data = generate_scenario(sc);
  const auto model = bench_model(sc);
  const auto cfg = make_rolf_config();
  for (auto _ : state) {
    auto traces = filter_run(model, data.trajectory.measurements, cfg);
    benchmark::DoNotOptimize(traces.data());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_FilterRun)->Arg(1000)->Arg(10000);

void BM_TailMeanLoss(benchmark::State& state) {
  std::mt19937_64 rng(3);
  std::exponential_distribution<double> expo(1.0);
  std::vector<double> losses(static_cast<std::size_t>(state.range(0)));
  for (auto& l : losses) l = expo(rng);
  for (auto _ : state) {
    benchmark::DoNotOptimize(tail_mean_loss(losses, kTailFraction));
  }
}
BENCHMARK(BM_TailMeanLoss)->Arg(1000)->Arg(100000);

}  // namespace

BENCHMARK_MAIN();
