#include <benchmark/benchmark.h>

#include <Eigen/Dense>

#include "netobs/matrix_ops.hpp"
#include "netobs/protocol.hpp"
#include "netobs/rng.hpp"
#include "netobs/simulator.hpp"
#include "netobs/synthesis.hpp"

namespace {

// Moderately stiff unstable 4x4 plant with two sensor channels, the size the
// library is tuned for.
netobs::PlantModel reference_plant() {
  netobs::PlantModel plant;
  plant.A.resize(4, 4);
  plant.A << 0.05, -0.59, 1.04, 2.14,
             0.57, -0.26, -0.26, -0.62,
             -1.05, 1.36, -0.62, 1.51,
             -1.48, -1.01, -0.35, 0.09;
  plant.B.resize(4, 0);
  plant.C.resize(2, 4);
  plant.C << 1, 0, 0, 0,
             0, 1, 0, 0;
  return plant;
}

netobs::PlantModel rotation_plant() {
  netobs::PlantModel plant;
  plant.A.resize(2, 2);
  plant.A << 0.1, 2.0, -2.0, 0.1;
  plant.B.resize(2, 0);
  plant.C = Eigen::MatrixXd::Identity(2, 2);
  return plant;
}

void BM_MatExp(benchmark::State& state) {
  const Eigen::Index n = state.range(0);
  netobs::SplitMix64 rng(9);
  Eigen::MatrixXd a(n, n);
  for (Eigen::Index r = 0; r < n; ++r) {
    for (Eigen::Index c = 0; c < n; ++c) a(r, c) = rng.next_range(-2.0, 2.0);
  }
  for (auto _ : state) {
    benchmark::DoNotOptimize(netobs::mat_exp(a, 0.02));
  }
}
BENCHMARK(BM_MatExp)->Arg(4)->Arg(10)->Arg(25);

void BM_ExpIntegral(benchmark::State& state) {
  const netobs::PlantModel plant = reference_plant();
  for (auto _ : state) {
    benchmark::DoNotOptimize(netobs::exp_integral(plant.A, 0.02));
  }
}
BENCHMARK(BM_ExpIntegral);

void BM_AssembleLmis(benchmark::State& state) {
  netobs::SynthesisProblem problem;
  problem.plant = reference_plant();
  problem.period = 0.02;
  problem.max_dropouts = static_cast<int>(state.range(0));
  problem.lambda = 20.0;
  const netobs::LiftedDynamics lifted = netobs::build_lifted_dynamics(
      problem.plant, problem.period, problem.max_dropouts);
  for (auto _ : state) {
    benchmark::DoNotOptimize(netobs::assemble_lmis(problem, lifted));
  }
}
BENCHMARK(BM_AssembleLmis)->Arg(1)->Arg(4);

void BM_SynthesizeSmall(benchmark::State& state) {
  netobs::SynthesisProblem problem;
  problem.plant = rotation_plant();
  problem.period = 0.05;
  problem.max_dropouts = 1;
  problem.lambda = 20.0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(netobs::synthesize(problem));
  }
}
BENCHMARK(BM_SynthesizeSmall)->Unit(benchmark::kMillisecond);

void BM_SynthesizeReference(benchmark::State& state) {
  netobs::SynthesisProblem problem;
  problem.plant = reference_plant();
  problem.period = 0.02;
  problem.max_dropouts = 4;
  problem.lambda = 20.0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(netobs::synthesize(problem));
  }
}
BENCHMARK(BM_SynthesizeReference)->Unit(benchmark::kMillisecond);

void BM_SimulateHorizon(benchmark::State& state) {
  netobs::SynthesisProblem problem;
  problem.plant = rotation_plant();
  problem.period = 0.05;
  problem.max_dropouts = 2;
  problem.lambda = 20.0;
  const netobs::SynthesisOutcome outcome = netobs::synthesize(problem);

  netobs::SimulationInputs in;
  in.plant = problem.plant;
  in.gains = *outcome.gains;
  in.period = problem.period;
  in.x0 = Eigen::Vector2d(1.0, -1.0);
  in.xhat0 = Eigen::Vector2d::Zero();
  in.plan = netobs::generate_dropouts(problem.max_dropouts, 1200, 5);
  in.horizon = static_cast<double>(state.range(0));
  for (auto _ : state) {
    benchmark::DoNotOptimize(netobs::simulate(in));
  }
  state.SetItemsProcessed(state.iterations() *
                          static_cast<std::int64_t>(in.horizon / in.period));
}
BENCHMARK(BM_SimulateHorizon)->Arg(10)->Arg(50)->Unit(benchmark::kMillisecond);

void BM_IntersampleBound(benchmark::State& state) {
  netobs::SynthesisProblem problem;
  problem.plant = rotation_plant();
  problem.period = 0.05;
  problem.max_dropouts = 2;
  problem.lambda = 20.0;
  const netobs::SynthesisOutcome outcome = netobs::synthesize(problem);
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        netobs::intersample_bound(problem.plant, *outcome.gains, problem.period));
  }
}
BENCHMARK(BM_IntersampleBound)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
