#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <numbers>

#include "bouss/spaces.hpp"

namespace {

using namespace bouss;

constexpr double pi = std::numbers::pi;

std::shared_ptr<const Mesh> square(int nx, int ny) {
  return std::make_shared<const Mesh>(build_unit_square_mesh(nx, ny));
}

TEST(Spaces, DofCountsAndDefaultConstraints) {
  for (auto [nx, ny] : {std::pair{1, 1}, {3, 2}, {8, 8}}) {
    const auto m = square(nx, ny);
    const auto V = build_space(m, SpaceKind::Velocity);
    const auto W = build_space(m, SpaceKind::Temperature);
    const auto H = build_space(m, SpaceKind::Head);
    const int n2 = (2 * nx + 1) * (2 * ny + 1);
    EXPECT_EQ(V->n_scalar(), n2);
    EXPECT_EQ(V->n_dofs(), 2 * n2);
    EXPECT_EQ(W->n_dofs(), n2);
    EXPECT_EQ(H->n_dofs(), (nx + 1) * (ny + 1));
    // velocity: interior both components, Γ₁ side interiors normal component only
    EXPECT_EQ(V->n_free(), 2 * (2 * nx - 1) * (2 * ny - 1) + 2 * (2 * ny - 1));
    // temperature: zero on x = 0 and x = 1 including corners
    EXPECT_EQ(W->n_free(), (2 * nx - 1) * (2 * ny + 1));
    EXPECT_EQ(H->n_free(), H->n_dofs());
  }
}

TEST(Spaces, ConstraintsMatchBoundaryGeometry) {
  const auto m = square(3, 3);
  const auto V = build_space(m, SpaceKind::Velocity);
  for (int s = 0; s < V->n_scalar(); ++s) {
    const Vec2 p = V->dof_point(s);
    const bool on_y = p.y() == 0.0 || p.y() == 1.0;
    const bool on_x = p.x() == 0.0 || p.x() == 1.0;
    EXPECT_EQ(V->is_constrained(V->component_dof(s, 0)), on_y);
    EXPECT_EQ(V->is_constrained(V->component_dof(s, 1)), on_y || on_x);
  }
  const auto W = build_space(m, SpaceKind::Temperature);
  for (int s = 0; s < W->n_scalar(); ++s) {
    const Vec2 p = W->dof_point(s);
    EXPECT_EQ(W->is_constrained(s), p.x() == 0.0 || p.x() == 1.0);
  }
}

TEST(Spaces, UnconstrainedModeFreesEveryDof) {
  const auto V = build_space(square(2, 2), SpaceKind::Velocity, ConstraintMode::None);
  EXPECT_EQ(V->n_free(), V->n_dofs());
  EXPECT_TRUE(V->constraints().empty());
}

TEST(Spaces, FieldsKeepConstrainedEntriesZero) {
  const auto V = build_space(square(2, 2), SpaceKind::Velocity);
  DiscreteField f(V, Eigen::VectorXd::Ones(V->n_dofs()));
  for (int d = 0; d < V->n_dofs(); ++d) EXPECT_EQ(f.coeffs()[d], V->is_constrained(d) ? 0.0 : 1.0);
  f *= 3.0;
  f += f;
  for (int d = 0; d < V->n_dofs(); ++d) EXPECT_EQ(f.coeffs()[d], V->is_constrained(d) ? 0.0 : 6.0);
  const auto g = DiscreteField::from_free(V, f.free_values());
  EXPECT_EQ((g.coeffs() - f.coeffs()).norm(), 0.0);
}

TEST(Spaces, P2InterpolationReproducesQuadratics) {
  const auto W = build_space(square(3, 4), SpaceKind::Temperature, ConstraintMode::None);
  auto f = [](const Vec2& p) { return 1.0 + 2.0 * p.x() - p.y() + p.x() * p.x() - 3.0 * p.x() * p.y() + 0.5 * p.y() * p.y(); };
  const auto fh = interpolate(W, ScalarFunction(f));
  for (const Vec2& p : {Vec2(0.13, 0.77), Vec2(0.5, 0.5), Vec2(0.91, 0.02), Vec2(1.0, 1.0)})
    EXPECT_NEAR(fh.value_at(p), f(p), 1e-13);
  EXPECT_LT(l2_error(fh, ScalarFunction(f)), 1e-14);
}

TEST(Spaces, P1HeadReproducesLinears) {
  const auto H = build_space(square(3, 2), SpaceKind::Head);
  auto f = [](const Vec2& p) { return 0.3 - p.x() + 4.0 * p.y(); };
  const auto fh = interpolate(H, ScalarFunction(f));
  EXPECT_NEAR(fh.value_at(Vec2(0.37, 0.61)), f(Vec2(0.37, 0.61)), 1e-14);
}

TEST(Spaces, NormsAgainstClosedForms) {
  const auto m = square(4, 4);
  const auto W = build_space(m, SpaceKind::Temperature, ConstraintMode::None);
  // f = x + 2y: ∫ f² = 1/3 + 1 + 4/3, |∇f|² = 5
  const auto f = interpolate(W, ScalarFunction([](const Vec2& p) { return p.x() + 2.0 * p.y(); }));
  EXPECT_NEAR(l2_norm(f), std::sqrt(1.0 / 3.0 + 1.0 + 4.0 / 3.0), 1e-14);
  EXPECT_NEAR(h1_seminorm(f), std::sqrt(5.0), 1e-14);
  EXPECT_NEAR(h1_norm(f), std::sqrt(8.0 / 3.0 + 5.0), 1e-14);

  const auto V = build_space(m, SpaceKind::Velocity, ConstraintMode::None);
  // z = (−y, x): rot z = 2
  const auto z = interpolate(V, VectorFunction([](const Vec2& p) { return Vec2(-p.y(), p.x()); }));
  EXPECT_NEAR(rot_seminorm(z), 2.0, 1e-14);
}

TEST(Spaces, InterpolationErrorConvergesAtThirdOrder) {
  auto f = [](const Vec2& p) { return std::sin(pi * p.x()) * std::sin(pi * p.y()); };
  double prev = 0.0;
  for (int n : {4, 8, 16}) {
    const auto W = build_space(square(n, n), SpaceKind::Temperature);
    const double e = l2_error(interpolate(W, ScalarFunction(f)), ScalarFunction(f));
    if (prev > 0.0) {
      EXPECT_GT(prev / e, 7.0);
    }
    prev = e;
  }
}

TEST(Spaces, RandomFieldsAreSeededAndRespectConstraints) {
  const auto V = build_space(square(3, 3), SpaceKind::Velocity);
  Rng a(7), b(7), c(8);
  const auto fa = random_coefficients(V, a);
  const auto fb = random_coefficients(V, b);
  const auto fc = random_coefficients(V, c);
  EXPECT_EQ((fa.coeffs() - fb.coeffs()).norm(), 0.0);
  EXPECT_GT((fa.coeffs() - fc.coeffs()).norm(), 0.0);
  for (int d = 0; d < V->n_dofs(); ++d) {
    if (V->is_constrained(d)) {
      EXPECT_EQ(fa.coeffs()[d], 0.0);
    }
    EXPECT_LE(std::abs(fa.coeffs()[d]), 1.0);
  }
  const auto smooth = random_smooth_field(V, a);
  EXPECT_GT(l2_norm(smooth), 0.0);
}

TEST(Spaces, RngMatchesReferenceEngine) {
  Rng r(12345);
  std::mt19937_64 e(12345);
  for (int i = 0; i < 5; ++i) EXPECT_EQ(r.uniform(), static_cast<double>(e() >> 11) * 0x1.0p-53);
}

TEST(Spaces, BoundaryTracesCoverTaggedSides) {
  const int nx = 3, ny = 5;
  const auto m = square(nx, ny);
  const auto V = build_space(m, SpaceKind::Velocity);
  const auto W = build_space(m, SpaceKind::Temperature);
  const auto g1 = build_trace(*V, BoundaryTag::Gamma1);
  const auto g2 = build_trace(*W, BoundaryTag::Gamma2);
  EXPECT_EQ(g1.size(), 2 * (2 * ny + 1));
  EXPECT_EQ(g2.size(), 2 * (2 * nx + 1));
  EXPECT_TRUE(std::is_sorted(g1.scalar_dofs.begin(), g1.scalar_dofs.end()));
  for (int b = 0; b < g1.size(); ++b) {
    EXPECT_EQ(g1.index_of(g1.scalar_dofs[b]), b);
    const Vec2 p = g1.points[b];
    EXPECT_TRUE(p.x() == 0.0 || p.x() == 1.0);
  }
  for (const Vec2& p : g2.points) EXPECT_TRUE(p.y() == 0.0 || p.y() == 1.0);
  EXPECT_EQ(g2.index_of(-5), -1);
  EXPECT_EQ(static_cast<int>(g1.edges.size()), 2 * ny);
}

TEST(Spaces, WritesFieldCsv) {
  const auto W = build_space(square(2, 2), SpaceKind::Temperature);
  const auto file = std::filesystem::temp_directory_path() / "bouss_field_test.csv";
  write_field_csv(DiscreteField(W), file);
  EXPECT_TRUE(std::filesystem::exists(file));
  EXPECT_GT(std::filesystem::file_size(file), 0u);
}

}  // namespace
