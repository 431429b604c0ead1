#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "pointing/data_pipeline.hpp"
#include "pointing/fitting.hpp"
#include "pointing/lqr.hpp"
#include "pointing/model.hpp"
#include "pointing/reference_models.hpp"

using namespace pointing;

namespace {

const ModelParams kParams{.k = 600.0, .d = 30.0, .r = 1e-6, .delta = {}};

void BM_SolveRiccati(benchmark::State& state) {
  const int horizon = static_cast<int>(state.range(0));
  const AugmentedSystem sys = augment_system(build_dynamics(kParams, 0.002));
  const CostSpec spec = build_cost(CostVariant::kLqr2, kParams, horizon, 0.002);
  for (auto _ : state) {
    benchmark::DoNotOptimize(solve_riccati(sys, spec));
  }
  state.SetItemsProcessed(state.iterations() * horizon);
}
BENCHMARK(BM_SolveRiccati)->Arg(250)->Arg(1000)->Arg(4000);

void BM_SimulateLqr(benchmark::State& state) {
  const int horizon = static_cast<int>(state.range(0));
  const AugmentedSystem sys = augment_system(build_dynamics(kParams, 0.002));
  const CostSpec spec = build_cost(CostVariant::kLqr2, kParams, horizon, 0.002);
  const GainSchedule sched = solve_riccati(sys, spec);
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        simulate_lqr(sched, sys, Eigen::Vector3d(0.0, 0.0, 0.1), 0.0, horizon));
  }
  state.SetItemsProcessed(state.iterations() * horizon);
}
BENCHMARK(BM_SimulateLqr)->Arg(250)->Arg(1000)->Arg(4000);

void BM_BruteForceOracle(benchmark::State& state) {
  const int horizon = static_cast<int>(state.range(0));
  const AugmentedSystem sys = augment_system(build_dynamics(kParams, 0.002));
  const CostSpec spec = build_cost(CostVariant::kLqr2, kParams, horizon, 0.002);
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        brute_force_optimal_controls(sys, spec, Eigen::Vector3d(0.0, 0.0, 0.1), 0.0));
  }
}
BENCHMARK(BM_BruteForceOracle)->Arg(16)->Arg(32)->Arg(64);

void BM_SavitzkyGolay(benchmark::State& state) {
  const std::size_t n = static_cast<std::size_t>(state.range(0));
  std::mt19937 rng(1);
  std::uniform_real_distribution<double> dist(-0.1, 0.1);
  std::vector<double> series(n);
  for (double& v : series) v = dist(rng);
  for (auto _ : state) {
    benchmark::DoNotOptimize(savitzky_golay(series, 4, 101, 2, 0.002));
  }
  state.SetItemsProcessed(state.iterations() * static_cast<long>(n));
}
BENCHMARK(BM_SavitzkyGolay)->Arg(2000)->Arg(20000);

void BM_MinJerkTrajectory(benchmark::State& state) {
  const MinJerkCoefficients mj =
      minjerk_coefficients(0.0, 0.0, 0.0, 0.1, 0.0, 0.0, 0.5, 0.002);
  for (auto _ : state) {
    benchmark::DoNotOptimize(minjerk_trajectory(mj, 0.002, 600));
  }
}
BENCHMARK(BM_MinJerkTrajectory);

// One full nonlinear-least-squares polish from a perturbed start on a
// synthetic trial; the dominant cost of the whole fitting pipeline.
void BM_LsqSolveSingleStart(benchmark::State& state) {
  const int horizon = 500;
  const double target = 0.1;
  const double a1 = 0.2 * kParams.k * target;
  const AugmentedSystem sys = augment_system(build_dynamics(kParams, 0.002));
  const CostSpec spec = build_cost(CostVariant::kLqr2, kParams, horizon, 0.002);
  const GainSchedule sched = solve_riccati(sys, spec);
  const double u0 = initial_control(kParams, 0.0, 0.0, a1);
  const Trajectory reference =
      simulate_lqr(sched, sys, Eigen::Vector3d(0.0, 0.0, target), u0, horizon);

  const ResidualFn objective = [&](std::span<const double> x, std::vector<double>& out) {
    const ModelParams params{.k = x[0], .d = x[1], .r = x[2], .delta = {}};
    const AugmentedSystem s = augment_system(build_dynamics(params, 0.002));
    const CostSpec c = build_cost(CostVariant::kLqr2, params, horizon, 0.002);
    const double u = initial_control(params, 0.0, 0.0, a1);
    const Trajectory traj =
        simulate_lqr(solve_riccati(s, c), s, Eigen::Vector3d(0.0, 0.0, target), u, horizon);
    out.resize(traj.positions.size());
    for (std::size_t i = 0; i < out.size(); ++i)
      out[i] = traj.positions[i] - reference.positions[i];
    return true;
  };

  const std::vector<ParamRange> bounds{{1.0, 50000.0}, {0.05, 5000.0}, {1e-10, 0.1}};
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        lsq_solve(objective, {900.0, 45.0, 2e-6}, bounds, LsqOptions{}));
  }
}
BENCHMARK(BM_LsqSolveSingleStart)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
