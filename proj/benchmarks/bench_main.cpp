#include <benchmark/benchmark.h>

#include <cmath>
#include <numbers>

#include "bouss/control_opt.hpp"

namespace {

using namespace bouss;

SolverConfig bench_config(int steps) {
  SolverConfig c;
  c.nu = 0.1;
  c.k = 0.1;
  c.beta = 1.0;
  c.T = steps * c.dt;
  return c;
}

std::shared_ptr<const Mesh> square(int n) { return std::make_shared<const Mesh>(build_unit_square_mesh(n, n)); }

DiscreteField sine(const Discretization& d) {
  return interpolate(d.temperature, ScalarFunction([](const Vec2& p) {
                       return std::sin(std::numbers::pi * p.x()) * std::sin(std::numbers::pi * p.y());
                     }));
}

Control uniform_control(const Discretization& d, int steps, double v) {
  Control c = d.zero_control(steps);
  c.v1.setConstant(v);
  c.v2.setConstant(v);
  return c;
}

void BM_AssembleBLinearized(benchmark::State& state) {
  const auto V = build_space(square(static_cast<int>(state.range(0))), SpaceKind::Velocity);
  Rng rng(1);
  const auto z = random_coefficients(V, rng);
  for (auto _ : state) benchmark::DoNotOptimize(assemble_b_linearized(z));
}
BENCHMARK(BM_AssembleBLinearized)->Arg(8)->Arg(16)->Arg(32);

void BM_Coercivity(benchmark::State& state) {
  const auto m = square(static_cast<int>(state.range(0)));
  const auto V = build_space(m, SpaceKind::Velocity);
  const auto H = build_space(m, SpaceKind::Head);
  const auto a1 = assemble_a1(V);
  for (auto _ : state) benchmark::DoNotOptimize(estimate_coercivity(a1, V, H));
}
BENCHMARK(BM_Coercivity)->Arg(8)->Arg(16)->Unit(benchmark::kMillisecond);

void BM_TimeStep(benchmark::State& state) {
  const auto cfg = bench_config(1);
  const auto disc = make_discretization(square(static_cast<int>(state.range(0))), cfg);
  const Stepper stepper(disc, cfg);
  const State s0 = initial_state(disc, DiscreteField(disc.velocity), sine(disc));
  const auto loads = control_loads(disc, uniform_control(disc, 1, 0.5), 0);
  for (auto _ : state) benchmark::DoNotOptimize(stepper.step(s0, loads));
}
BENCHMARK(BM_TimeStep)->Arg(8)->Arg(16)->Unit(benchmark::kMillisecond);

void BM_AdjointGradient(benchmark::State& state) {
  const int steps = 4;
  const auto cfg = bench_config(steps);
  const auto disc = make_discretization(square(8), cfg);
  const Stepper stepper(disc, cfg);
  const ControlProblem problem{stepper, DiscreteField(disc.velocity), sine(disc), {}};
  const Control v = uniform_control(disc, steps, 0.5);
  const auto traj = evaluate(problem, v).trajectory;
  for (auto _ : state) benchmark::DoNotOptimize(adjoint_gradient(problem, v, traj));
}
BENCHMARK(BM_AdjointGradient)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
