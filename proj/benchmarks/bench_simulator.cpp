// Simulation throughput benchmarks at the reference scenario scale
// (20 x 10 rectangle, 231 points, two agents, T = 200, dt = 0.01) plus
// micro benchmarks for the kinematic primitives.
#include <benchmark/benchmark.h>

#include <vector>

#include "pmon/model.hpp"
#include "pmon/simulator.hpp"
#include "pmon/trajectory.hpp"

namespace {

pmon::MissionConfig reference_mission(double T) {
  return pmon::make_lattice_mission(20, 10, 0.2, 6.0, 2.0, 4.0, T, 2);
}

std::vector<pmon::EllipseParams> reference_agents() {
  return {{5.0, 5.0, 5.0, 2.0, 0.7853981633974483, 0.0},
          {15.0, 5.0, 5.0, 2.0, 0.7853981633974483, 0.0}};
}

void BM_SimulateCostOnly(benchmark::State& state) {
  const pmon::MissionConfig cfg =
      reference_mission(static_cast<double>(state.range(0)));
  const auto agents = reference_agents();
  pmon::SimOptions opt;
  for (auto _ : state) {
    const pmon::SimOutcome out =
        pmon::simulate(cfg, agents, opt, pmon::IpaMode::kOff);
    benchmark::DoNotOptimize(out.J);
  }
}
BENCHMARK(BM_SimulateCostOnly)->Arg(20)->Arg(200)->Unit(benchmark::kMillisecond);

void BM_SimulateWithGradient(benchmark::State& state) {
  const pmon::MissionConfig cfg =
      reference_mission(static_cast<double>(state.range(0)));
  const auto agents = reference_agents();
  pmon::SimOptions opt;
  for (auto _ : state) {
    const pmon::SimOutcome out =
        pmon::simulate(cfg, agents, opt, pmon::IpaMode::kOn);
    benchmark::DoNotOptimize(out.grad_J.data());
  }
}
BENCHMARK(BM_SimulateWithGradient)
    ->Arg(20)
    ->Arg(200)
    ->Unit(benchmark::kMillisecond);

void BM_Position(benchmark::State& state) {
  const pmon::EllipseParams p{10.0, 5.0, 5.0, 2.0, 0.8, 0.0};
  double rho = 0.0;
  for (auto _ : state) {
    rho += 0.01;
    benchmark::DoNotOptimize(pmon::position(p, rho));
  }
}
BENCHMARK(BM_Position);

void BM_PositionJacobian(benchmark::State& state) {
  const pmon::EllipseParams p{10.0, 5.0, 5.0, 2.0, 0.8, 0.0};
  double rho = 0.0;
  for (auto _ : state) {
    rho += 0.01;
    benchmark::DoNotOptimize(pmon::position_param_jacobian(p, rho));
  }
}
BENCHMARK(BM_PositionJacobian);

}  // namespace

BENCHMARK_MAIN();
