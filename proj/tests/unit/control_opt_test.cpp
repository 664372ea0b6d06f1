#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>

#include "bouss/control_opt.hpp"

namespace {

using namespace bouss;

constexpr double pi = std::numbers::pi;

SolverConfig small_config(int steps) {
  SolverConfig c;
  c.nu = 0.1;
  c.k = 0.1;
  c.beta = 1.0;
  c.dt = 1.0 / 32.0;
  c.T = steps * c.dt;
  return c;
}

struct Fixture {
  Fixture(int n, const SolverConfig& cfg)
      : disc(make_discretization(std::make_shared<const Mesh>(build_unit_square_mesh(n, n)), cfg)),
        stepper(disc, cfg),
        z0(disc.velocity),
        w0(interpolate(disc.temperature, ScalarFunction([](const Vec2& p) {
                         return std::sin(pi * p.x()) * std::sin(pi * p.y());
                       }))) {}
  Discretization disc;
  Stepper stepper;
  DiscreteField z0;
  DiscreteField w0;

  ControlProblem problem(CostConfig cost = {}) const { return {stepper, z0, w0, std::move(cost)}; }
  Control random(std::uint64_t seed, double lo = 0.1, double hi = 1.0) const {
    Control c = disc.zero_control(stepper.config().n_steps());
    Rng rng(seed);
    for (auto& x : c.v1) x = rng.uniform(lo, hi);
    for (auto& x : c.v2) x = rng.uniform(lo, hi);
    return c;
  }
  Control constant(double a, double b) const {
    Control c = disc.zero_control(stepper.config().n_steps());
    c.v1.setConstant(a);
    c.v2.setConstant(b);
    return c;
  }
};

TEST(Control, LayoutAndFlatRoundTrip) {
  Control c(3, 2, 4);
  EXPECT_EQ(c.size(), 3 * 2 * 2 + 3 * 4);
  c.v1_at(2, 1, 0) = 7.0;
  c.v2_at(1, 3) = 5.0;
  EXPECT_EQ(c.v1[(2 * 2 + 1) * 2 + 0], 7.0);
  EXPECT_EQ(c.v2[1 * 4 + 3], 5.0);
  EXPECT_EQ(c.v1_step(2)[2], 7.0);
  EXPECT_EQ(c.v2_step(1)[3], 5.0);
  Control d(3, 2, 4);
  d.set_flat(c.flat());
  EXPECT_EQ(d.v1, c.v1);
  EXPECT_EQ(d.v2, c.v2);
  EXPECT_TRUE(c.same_shape(d));
  EXPECT_FALSE(c.same_shape(Control(2, 2, 4)));
}

TEST(Control, ProjectionClampsEntrywise) {
  Control c(1, 1, 2);
  c.v1 << -1.0, 0.5;
  c.v2 << 3.0, 0.2;
  const Box box = Box::uniform(c, 0.1, 1.0, 0.0, 2.0);
  EXPECT_FALSE(is_feasible(c, box));
  const Control p = project_to_admissible(c, box);
  EXPECT_EQ(p.v1[0], 0.1);
  EXPECT_EQ(p.v1[1], 0.5);
  EXPECT_EQ(p.v2[0], 2.0);
  EXPECT_EQ(p.v2[1], 0.2);
  EXPECT_TRUE(is_feasible(p, box));
  EXPECT_EQ(project_to_admissible(p, box).flat(), p.flat());
}

TEST(Control, InfeasibleBoxIsRejected) {
  Control c(2, 1, 1);
  const Box bad = Box::uniform(c, 2.0, 1.0, 0.0, 1.0);
  EXPECT_EQ(box_violations(bad).size(), 1u);
  EXPECT_THROW(project_to_admissible(c, bad), InvalidArgument);
  EXPECT_THROW(project_to_admissible(Control(1, 1, 1), Box::uniform(c, 0, 1, 0, 1)), InvalidArgument);
}

TEST(Control, RelativeDifference) {
  Control a(1, 1, 1), b(1, 1, 1);
  b.v2 << 2.0;
  a.v2 << 2.0;
  EXPECT_EQ(relative_l2_difference(a, b), 0.0);
  a.v1 << 1.0, 0.0;
  EXPECT_DOUBLE_EQ(relative_l2_difference(a, b), 0.5);
  EXPECT_THROW(relative_l2_difference(a, Control(2, 1, 1)), InvalidArgument);
}

TEST(Cost, ViolationsAllowZeroWeights) {
  CostConfig c;
  c.N1 = 0.0;
  c.N2 = 0.0;
  EXPECT_TRUE(c.violations().empty());
  c.N1 = -1.0;
  c.r2 = nullptr;
  EXPECT_EQ(c.violations().size(), 2u);
}

TEST(Cost, Gamma2TermAgainstClosedForm) {
  const auto cfg = small_config(4);
  Fixture f(3, cfg);
  CostConfig cost;
  cost.N1 = 0.0;
  cost.N2 = 2.0;
  const double c = 0.7;
  // −N₂/k · Σₙ dt ∫_{Γ₂} c ds over two unit sides
  const double expected = -cost.N2 / cfg.k * cfg.T * 2.0 * c;
  EXPECT_NEAR(evaluate(f.problem(cost), f.constant(0.3, c)).J, expected, 1e-13);
  cost.gamma2_time_integral = false;
  EXPECT_NEAR(evaluate(f.problem(cost), f.constant(0.3, c)).J, -cost.N2 / cfg.k * 2.0 * c, 1e-13);
}

TEST(Cost, Gamma1TermIsNormalFluxOfVelocity) {
  const auto cfg = small_config(3);
  Fixture f(3, cfg);
  CostConfig cost;
  cost.N2 = 0.0;
  cost.r1 = [](const Vec2& x, double t) { return Vec2(1.0 + x.y(), t); };
  const Control v = f.random(4);
  const auto e = evaluate(f.problem(cost), v);
  // Σₙ dt ∫_{Γ₁} (r₁·n)(zⁿ·n) ds
  double expected = 0.0;
  for (int n = 1; n <= cfg.n_steps(); ++n) {
    const double t = n * cfg.dt;
    const auto l = assemble_L1(f.disc.velocity, [&](const Vec2& x) { return cost.r1(x, t); });
    expected += cfg.dt * l.dot(e.trajectory.states[n].z.coeffs());
  }
  EXPECT_NEAR(e.J, expected, 1e-14 * std::max(1.0, std::abs(expected)));
  EXPECT_NE(e.J, 0.0);
  EXPECT_THROW(eval_cost(f.problem(cost), e.trajectory, f.disc.zero_control(2)), InvalidArgument);
}

TEST(Gradient, AdjointMatchesCentralDifferences) {
  const auto cfg = small_config(3);
  Fixture f(3, cfg);
  const auto problem = f.problem();
  const Control v = f.random(11);
  const auto adj = adjoint_gradient(problem, v);
  const auto fd = fd_gradient(problem, v, 1e-5, 2);
  EXPECT_LE(relative_l2_difference(adj, fd), 1e-6);
  const auto traj = evaluate(problem, v).trajectory;
  EXPECT_EQ(adjoint_gradient(problem, v, traj).flat(), adj.flat());
}

TEST(Gradient, FiniteDifferencesIndependentOfThreadCount) {
  const auto cfg = small_config(2);
  Fixture f(2, cfg);
  const Control v = f.random(3);
  const auto a = fd_gradient(f.problem(), v, 1e-5, 1);
  const auto b = fd_gradient(f.problem(), v, 1e-5, 3);
  EXPECT_EQ(a.flat(), b.flat());
}

TEST(Gradient, LinearCaseHasConstantGradient) {
  // With N₁ = 0 the cost is linear in v₂ and independent of v₁.
  const auto cfg = small_config(2);
  Fixture f(2, cfg);
  CostConfig cost;
  cost.N1 = 0.0;
  const auto g = adjoint_gradient(f.problem(cost), f.random(5));
  EXPECT_LE(g.v1.cwiseAbs().maxCoeff(), 1e-14);
  const auto g2 = adjoint_gradient(f.problem(cost), f.random(6));
  EXPECT_LE((g.v2 - g2.v2).cwiseAbs().maxCoeff(), 1e-15);
  EXPECT_LT(g.v2.maxCoeff(), 0.0);
}

TEST(UniformBounds, RatiosFiniteAndBelowCalibration) {
  const auto cfg = small_config(8);
  Fixture f(4, cfg);
  std::vector<UniformBoundRatios> runs;
  for (std::uint64_t s = 0; s < 3; ++s) {
    const Control v = f.random(40 + s);
    const auto traj = evaluate(f.problem(), v).trajectory;
    const auto r = uniform_bound_ratios(f.stepper, traj, v);
    EXPECT_TRUE(std::isfinite(r.z) && r.z > 0.0);
    EXPECT_TRUE(std::isfinite(r.w) && r.w > 0.0);
    runs.push_back(r);
  }
  const auto report = uniform_bound_report(runs);
  EXPECT_EQ(report.runs.size(), 3u);
  EXPECT_GE(report.max_z, runs[0].z);
  EXPECT_TRUE(report.within(uniform_bound_calibration));
  EXPECT_FALSE(report.within({0.0, 0.0}));
}

TEST(Optimizer, IteratesFeasibleAndMonotone) {
  const auto cfg = small_config(4);
  Fixture f(3, cfg);
  const Control v0 = f.random(21, 0.0, 1.5);
  const Box box = Box::uniform(v0, 0.1, 1.0, 0.1, 1.0);
  OptimizerOptions opt;
  opt.max_iters = 15;
  const auto res = projected_gradient_descent(f.problem(), v0, box, opt);
  ASSERT_GE(res.history.size(), 2u);
  for (std::size_t i = 0; i < res.history.size(); ++i) {
    EXPECT_TRUE(res.history[i].feasible);
    if (i > 0) {
      EXPECT_LE(res.history[i].J, res.history[i - 1].J);
    }
  }
  EXPECT_TRUE(is_feasible(res.control, box));
  EXPECT_NEAR(evaluate(f.problem(), res.control).J, res.history.back().J, 1e-14);
  EXPECT_LT(res.history.back().pg_norm, res.history.front().pg_norm);
}

TEST(Optimizer, LinearCaseReachesBoxCornerExactly) {
  const auto cfg = small_config(4);
  Fixture f(3, cfg);
  CostConfig cost;
  cost.N1 = 0.0;
  const Control v0 = f.random(8);
  const Box box = Box::uniform(v0, 0.1, 1.0, 0.2, 0.9);
  const auto res = projected_gradient_descent(f.problem(cost), v0, box);
  EXPECT_EQ(res.status, OptimizerStatus::Converged);
  for (double x : res.control.v2) EXPECT_EQ(x, 0.9);
  // v₁ does not enter the cost and is left where it started
  EXPECT_EQ(res.control.v1, v0.v1);
  EXPECT_NEAR(res.history.back().J, -cost.N2 / cfg.k * cfg.T * 2.0 * 0.9, 1e-13);
}

TEST(Optimizer, StatusNames) {
  EXPECT_STREQ(to_string(OptimizerStatus::Converged), "converged");
  EXPECT_NE(std::string(to_string(OptimizerStatus::LineSearchFailed)), "");
  EXPECT_NE(std::string(to_string(OptimizerStatus::MaxIterations)), "");
}

TEST(ControlCsv, RoundTripIsExact) {
  const auto cfg = small_config(3);
  Fixture f(2, cfg);
  const Control v = f.random(99);
  const auto dir = std::filesystem::temp_directory_path() / "bouss_control_csv";
  std::filesystem::create_directories(dir);
  write_control_csv(f.disc, v, dir / "v1.csv", dir / "v2.csv");
  const Control r = read_control_csv(f.disc, 3, dir / "v1.csv", dir / "v2.csv");
  EXPECT_EQ(r.v1, v.v1);
  EXPECT_EQ(r.v2, v.v2);
  EXPECT_THROW(read_control_csv(f.disc, 4, dir / "v1.csv", dir / "v2.csv"), InvalidArgument);
  std::ofstream(dir / "bad.csv") << "boundary_dof,step,v2\n1,x,2\n";
  EXPECT_THROW(read_control_csv(f.disc, 3, dir / "v1.csv", dir / "bad.csv"), InvalidArgument);
}

TEST(ControlCsv, OptimizationHistoryHeader) {
  const auto file = std::filesystem::temp_directory_path() / "bouss_opt.csv";
  std::vector<OptimizationRecord> h(2);
  h[0] = {0, -1.0, 0.5, 0.0, true, {}};
  h[1] = {1, -2.0, 0.1, 0.25, true, {}};
  write_optimization_csv(h, file);
  std::ifstream in(file);
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "iter,J,pg_norm,step,feasible");
  std::getline(in, line);
  EXPECT_EQ(line, "0,-1,0.5,0,1");
}

}  // namespace
