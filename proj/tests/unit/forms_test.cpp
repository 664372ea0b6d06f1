#include <gtest/gtest.h>

#include <cmath>
#include <map>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <Eigen/LU>

#include "bouss/forms.hpp"

namespace {

using namespace bouss;

std::shared_ptr<const Mesh> square(int n) { return std::make_shared<const Mesh>(build_unit_square_mesh(n, n)); }

std::shared_ptr<const Mesh> cached_square(int n) {
  static std::map<int, std::shared_ptr<const Mesh>> cache;
  auto& m = cache[n];
  if (!m) m = square(n);
  return m;
}

SpacePtr free_space(int n, SpaceKind kind) { return build_space(cached_square(n), kind, ConstraintMode::None); }

DiscreteField scalar(const SpacePtr& s, double (*f)(const Vec2&)) { return interpolate(s, ScalarFunction(f)); }
DiscreteField vector(const SpacePtr& s, Vec2 (*f)(const Vec2&)) { return interpolate(s, VectorFunction(f)); }

// Dense oracle: smallest eigenvalue of Zᵀ A Z y = λ Zᵀ G Z y, Z spanning ker C
// (identity when C is empty).
double dense_smallest(const Eigen::MatrixXd& a, const Eigen::MatrixXd& g, const Eigen::MatrixXd* c = nullptr) {
  Eigen::MatrixXd z = Eigen::MatrixXd::Identity(a.rows(), a.cols());
  if (c) z = Eigen::FullPivLU<Eigen::MatrixXd>(*c).kernel();
  const Eigen::MatrixXd az = z.transpose() * a * z, gz = z.transpose() * g * z;
  Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (az + az.transpose()), gz);
  return es.eigenvalues().minCoeff();
}

TEST(Forms, MassMatrixIntegratesConstants) {
  const auto W = free_space(3, SpaceKind::Temperature);
  const Eigen::VectorXd one = Eigen::VectorXd::Ones(W->n_dofs());
  EXPECT_NEAR(assemble_mass(W).apply(one, one), 1.0, 1e-14);
  const auto H = free_space(3, SpaceKind::Head);
  const Eigen::VectorXd oneh = Eigen::VectorXd::Ones(H->n_dofs());
  EXPECT_NEAR(assemble_mass(H).apply(oneh, oneh), 1.0, 1e-14);
  const auto m = assemble_mass(W).matrix;
  EXPECT_NEAR((Eigen::MatrixXd(m) - Eigen::MatrixXd(m).transpose()).norm(), 0.0, 1e-16);
}

TEST(Forms, StiffnessAgainstClosedForm) {
  const auto W = free_space(4, SpaceKind::Temperature);
  // ∫ ∇(x²)·∇(xy) = ∫ 2xy = 1/2
  const auto f = scalar(W, [](const Vec2& p) { return p.x() * p.x(); });
  const auto g = scalar(W, [](const Vec2& p) { return p.x() * p.y(); });
  EXPECT_NEAR(assemble_a2(W).apply(f.coeffs(), g.coeffs()), 0.5, 1e-14);
  // H¹ Gram adds ∫ x³ y = 1/8
  EXPECT_NEAR(assemble_h1_gram(W).apply(f.coeffs(), g.coeffs()), 0.625, 1e-14);
}

TEST(Forms, RotFormsAgreeOnDivergenceFreeFields) {
  const auto V = free_space(4, SpaceKind::Velocity);
  // z = (x², −2xy): div z = 0, rot z = −2y, ∫ 4y² = 4/3
  const auto z = vector(V, [](const Vec2& p) { return Vec2(p.x() * p.x(), -2.0 * p.x() * p.y()); });
  EXPECT_NEAR(assemble_a1(V, A1Form::RotOnly).apply(z.coeffs(), z.coeffs()), 4.0 / 3.0, 1e-13);
  EXPECT_NEAR(assemble_a1(V, A1Form::RotDiv).apply(z.coeffs(), z.coeffs()), 4.0 / 3.0, 1e-13);
  // z = (x, 0): rot z = 0, div z = 1
  const auto g = vector(V, [](const Vec2& p) { return Vec2(p.x(), 0.0); });
  EXPECT_NEAR(assemble_a1(V, A1Form::RotOnly).apply(g.coeffs(), g.coeffs()), 0.0, 1e-13);
  EXPECT_NEAR(assemble_a1(V, A1Form::RotDiv).apply(g.coeffs(), g.coeffs()), 1.0, 1e-13);
}

TEST(Forms, DivergenceAndBuoyancyAgainstClosedForms) {
  const auto V = free_space(3, SpaceKind::Velocity);
  const auto W = free_space(3, SpaceKind::Temperature);
  const auto H = free_space(3, SpaceKind::Head);
  // ∫ q div z with q = y, z = (x², 0): ∫ 2xy = 1/2
  const auto z = vector(V, [](const Vec2& p) { return Vec2(p.x() * p.x(), 0.0); });
  const auto q = scalar(H, [](const Vec2& p) { return p.y(); });
  EXPECT_NEAR(assemble_divergence(V, H).apply(q.coeffs(), z.coeffs()), 0.5, 1e-14);
  // β ∫ (g·u) w with u = (1, 1), w = x, g = (0, −1), β = 2: −1
  const auto u = vector(V, [](const Vec2&) { return Vec2(1.0, 1.0); });
  const auto w = scalar(W, [](const Vec2& p) { return p.x(); });
  EXPECT_NEAR(assemble_buoyancy(V, W, Vec2(0.0, -1.0), 2.0).apply(u.coeffs(), w.coeffs()), -1.0, 1e-14);
}

TEST(Forms, TrilinearFormsAgainstClosedForms) {
  const auto V = free_space(3, SpaceKind::Velocity);
  const auto W = free_space(3, SpaceKind::Temperature);
  // b(u, v, w) = ∫ rot u (v₁w₂ − v₂w₁); u = (−y, x), v = (1, 0), w = (0, x): ∫ 2x = 1
  const auto u = vector(V, [](const Vec2& p) { return Vec2(-p.y(), p.x()); });
  const auto v = vector(V, [](const Vec2&) { return Vec2(1.0, 0.0); });
  const auto w = vector(V, [](const Vec2& p) { return Vec2(0.0, p.x()); });
  EXPECT_NEAR(eval_b(u, v, w), 1.0, 1e-14);
  // c(z, w, φ) = ∫ (z·∇w) φ; z = (y, 0), w = x², φ = 1: ∫ 2xy = 1/2
  const auto z = vector(V, [](const Vec2& p) { return Vec2(p.y(), 0.0); });
  const auto t = scalar(W, [](const Vec2& p) { return p.x() * p.x(); });
  const auto one = scalar(W, [](const Vec2&) { return 1.0; });
  EXPECT_NEAR(eval_c(z, t, one), 0.5, 1e-14);
}

TEST(Forms, PolynomialArgumentsMatchInterpolants) {
  const auto V = free_space(3, SpaceKind::Velocity);
  const PolynomialVectorField p(Polynomial2::y() * Polynomial2::y(), Polynomial2::x());
  const auto ph = interpolate(V, p);
  Rng rng(3);
  const auto a = random_coefficients(V, rng), b = random_coefficients(V, rng);
  EXPECT_NEAR(eval_b(p, a, b), eval_b(ph, a, b), 1e-13);
}

class FormIdentities : public ::testing::TestWithParam<int> {};

TEST_P(FormIdentities, SkewSymmetryAndMatrixConsistency) {
  const auto m = square(GetParam());
  const auto V = build_space(m, SpaceKind::Velocity);
  const auto W = build_space(m, SpaceKind::Temperature);
  Rng rng(100 + static_cast<std::uint64_t>(GetParam()));
  for (int s = 0; s < 10; ++s) {
    const auto u = random_coefficients(V, rng), v = random_coefficients(V, rng), w = random_coefficients(V, rng);
    const double scale = h1_norm(u) * h1_norm(v) * h1_norm(w);
    EXPECT_LE(std::abs(eval_b(u, v, v)), 1e-13 * scale);
    EXPECT_LE(std::abs(eval_b(u, v, w) + eval_b(u, w, v)), 1e-13 * scale);
    EXPECT_LE(std::abs(assemble_b_linearized(u).apply(w.coeffs(), v.coeffs()) - eval_b(u, v, w)), 1e-13 * scale);
    EXPECT_LE(std::abs(assemble_b_derivative(v).apply(w.coeffs(), u.coeffs()) - eval_b(u, v, w)), 1e-13 * scale);

    const auto t = random_coefficients(W, rng), phi = random_coefficients(W, rng);
    const double cs = h1_norm(u) * h1_norm(t) * h1_norm(phi);
    EXPECT_LE(std::abs(assemble_c_linearized(u, W).apply(phi.coeffs(), t.coeffs()) - eval_c(u, t, phi)), 1e-13 * cs);
    const double skew = 0.5 * (eval_c(u, t, phi) - eval_c(u, phi, t));
    EXPECT_LE(std::abs(assemble_c_skew(u, W).apply(phi.coeffs(), t.coeffs()) - skew), 1e-13 * cs);
    EXPECT_LE(std::abs(assemble_c_skew_derivative(t, V).apply(phi.coeffs(), u.coeffs()) - skew), 1e-13 * cs);
  }
}

INSTANTIATE_TEST_SUITE_P(Meshes, FormIdentities, ::testing::Values(2, 5, 8));

TEST(Forms, SkewOperatorIsAntisymmetric) {
  const auto m = square(4);
  Rng rng(9);
  const auto z = random_coefficients(build_space(m, SpaceKind::Velocity), rng);
  const Eigen::MatrixXd c = assemble_c_skew(z, build_space(m, SpaceKind::Temperature)).matrix;
  EXPECT_LE((c + c.transpose()).cwiseAbs().maxCoeff(), 1e-16);
}

TEST(Forms, CVanishesOnDiagonalForBoundaryBubbles) {
  const auto m = square(8);
  const auto W = build_space(m, SpaceKind::Temperature);
  const auto q = std::vector<double>{0.0, 0.0, 1.0, -2.0, 1.0};
  const AnalyticDivFreeField z(Polynomial2::separable(q, q));
  EXPECT_EQ(z.divergence(Vec2(0.3, 0.6)), 0.0);
  Rng rng(11);
  for (int s = 0; s < 10; ++s) {
    const auto w = random_coefficients(W, rng);
    EXPECT_LE(std::abs(eval_c(z, w, w, 12)), 1e-13 * h1_norm(w) * h1_norm(w));
  }
}

TEST(Forms, BoundaryLoadsAgainstClosedForms) {
  const auto V = free_space(4, SpaceKind::Velocity);
  const auto W = free_space(4, SpaceKind::Temperature);
  // v₁ = (1, 0), ψ = (1, 0): (v₁·n)(ψ·n) = 1 on x = 0 and x = 1
  const auto psi = vector(V, [](const Vec2&) { return Vec2(1.0, 0.0); });
  EXPECT_NEAR(assemble_L1(V, [](const Vec2&) { return Vec2(1.0, 0.0); }).dot(psi.coeffs()), 2.0, 1e-14);
  // tangential data does not load the normal-only form
  EXPECT_NEAR(assemble_L1(V, [](const Vec2&) { return Vec2(0.0, 1.0); }).norm(), 0.0, 1e-15);
  // v₂ = 1, φ = x² on y = 0 and y = 1: 2/3
  const auto phi = scalar(W, [](const Vec2& p) { return p.x() * p.x(); });
  EXPECT_NEAR(assemble_L2(W, [](const Vec2&) { return 1.0; }).dot(phi.coeffs()), 2.0 / 3.0, 1e-14);
}

TEST(Forms, LoadMatricesReproduceQuadraticTraceData) {
  const auto m = square(3);
  const auto V = build_space(m, SpaceKind::Velocity);
  const auto W = build_space(m, SpaceKind::Temperature);
  const auto g1 = build_trace(*V, BoundaryTag::Gamma1);
  const auto g2 = build_trace(*W, BoundaryTag::Gamma2);
  auto v1 = [](const Vec2& p) { return Vec2(1.0 + p.y() * p.y(), 2.0 - p.y()); };
  auto v2 = [](const Vec2& p) { return p.x() * (1.0 - p.x()) + 0.5; };
  Eigen::VectorXd c1(2 * g1.size()), c2(g2.size());
  for (int b = 0; b < g1.size(); ++b) {
    c1[2 * b] = v1(g1.points[b]).x();
    c1[2 * b + 1] = v1(g1.points[b]).y();
  }
  for (int b = 0; b < g2.size(); ++b) c2[b] = v2(g2.points[b]);
  EXPECT_NEAR((load_matrix_L1(V, g1) * c1 - assemble_L1(V, v1)).norm(), 0.0, 1e-14);
  EXPECT_NEAR((load_matrix_L2(W, g2) * c2 - assemble_L2(W, v2)).norm(), 0.0, 1e-14);
}

TEST(Forms, TraceMassAndMoments) {
  const auto m = square(5);
  const auto W = build_space(m, SpaceKind::Temperature);
  const auto g2 = build_trace(*W, BoundaryTag::Gamma2);
  const Eigen::VectorXd one = Eigen::VectorXd::Ones(g2.size());
  // two unit-length sides
  EXPECT_NEAR(one.dot(trace_mass_matrix(*W, g2) * one), 2.0, 1e-14);
  EXPECT_NEAR(trace_moments(*W, g2, [](const Vec2&) { return 1.0; }).sum(), 2.0, 1e-14);
  // ∫ x over y = 0 and y = 1
  Eigen::VectorXd x(g2.size());
  for (int b = 0; b < g2.size(); ++b) x[b] = g2.points[b].x();
  EXPECT_NEAR(trace_moments(*W, g2, [](const Vec2& p) { return p.x(); }).sum(), 1.0, 1e-14);
  EXPECT_NEAR(one.dot(trace_mass_matrix(*W, g2) * x), 1.0, 1e-14);
}

TEST(Forms, SourceAgainstClosedForm) {
  const auto V = free_space(3, SpaceKind::Velocity);
  const auto z = vector(V, [](const Vec2& p) { return Vec2(p.x(), 0.0); });
  EXPECT_NEAR(assemble_source(V, [](const Vec2&) { return Vec2(1.0, 0.0); }).dot(z.coeffs()), 0.5, 1e-14);
  const auto Vc = build_space(square(3), SpaceKind::Velocity);
  const auto f = assemble_source(Vc, [](const Vec2&) { return Vec2(1.0, 1.0); });
  for (int d = 0; d < Vc->n_dofs(); ++d)
    if (Vc->is_constrained(d)) {
      EXPECT_EQ(f[d], 0.0);
    }
}

TEST(Forms, RestrictMatrixPicksEntries) {
  SparseMatrix a(3, 3);
  a.insert(0, 0) = 1.0;
  a.insert(1, 2) = 5.0;
  a.insert(2, 1) = 7.0;
  const Eigen::MatrixXd r = restrict_matrix(a, {1, 2}, {1, 2});
  EXPECT_EQ(r(0, 1), 5.0);
  EXPECT_EQ(r(1, 0), 7.0);
  EXPECT_EQ(r(0, 0), 0.0);
}

TEST(Forms, CoercivityMatchesDenseOracle) {
  for (int n : {2, 3}) {
    const auto m = square(n);
    const auto V = build_space(m, SpaceKind::Velocity);
    const auto W = build_space(m, SpaceKind::Temperature);
    const auto H = build_space(m, SpaceKind::Head);
    const auto& wf = W->free_dofs();
    const Eigen::MatrixXd a2 = restrict_matrix(assemble_a2(W).matrix, wf, wf);
    const Eigen::MatrixXd g2 = restrict_matrix(assemble_h1_gram(W).matrix, wf, wf);
    EXPECT_NEAR(estimate_coercivity(assemble_a2(W), W), dense_smallest(a2, g2), 1e-7);

    const auto& vf = V->free_dofs();
    std::vector<int> hall(static_cast<std::size_t>(H->n_dofs()));
    for (std::size_t i = 0; i < hall.size(); ++i) hall[i] = static_cast<int>(i);
    const Eigen::MatrixXd a1 = restrict_matrix(assemble_a1(V).matrix, vf, vf);
    const Eigen::MatrixXd g1 = restrict_matrix(assemble_h1_gram(V).matrix, vf, vf);
    const Eigen::MatrixXd d = restrict_matrix(assemble_divergence(V, H).matrix, hall, vf);
    EXPECT_NEAR(estimate_coercivity(assemble_a1(V), V, H), dense_smallest(a1, g1, &d), 1e-7);
  }
}

TEST(Forms, PureRotRotHasKernelOnDiscreteDivergenceFreeSpace) {
  const auto m = square(6);
  const auto V = build_space(m, SpaceKind::Velocity);
  const auto H = build_space(m, SpaceKind::Head);
  const auto& vf = V->free_dofs();
  std::vector<int> hall(static_cast<std::size_t>(H->n_dofs()));
  for (std::size_t i = 0; i < hall.size(); ++i) hall[i] = static_cast<int>(i);
  const Eigen::MatrixXd a = restrict_matrix(assemble_a1(V, A1Form::RotOnly).matrix, vf, vf);
  const Eigen::MatrixXd g = restrict_matrix(assemble_h1_gram(V).matrix, vf, vf);
  const Eigen::MatrixXd d = restrict_matrix(assemble_divergence(V, H).matrix, hall, vf);
  EXPECT_LT(dense_smallest(a, g, &d), 1e-10);
  const Eigen::MatrixXd ad = restrict_matrix(assemble_a1(V).matrix, vf, vf);
  EXPECT_GT(dense_smallest(ad, g, &d), 0.5);
}

TEST(Forms, CoercivityStaysPositiveUnderRefinement) {
  for (int n : {4, 8}) {
    const auto m = square(n);
    const auto V = build_space(m, SpaceKind::Velocity);
    const auto W = build_space(m, SpaceKind::Temperature);
    EXPECT_GT(estimate_coercivity(assemble_a1(V), V, build_space(m, SpaceKind::Head)), 0.5);
    EXPECT_GT(estimate_coercivity(assemble_a2(W), W), 0.5);
  }
}

TEST(Forms, DualNormOfBIsQuadratic) {
  const auto m = square(4);
  const auto V = build_space(m, SpaceKind::Velocity);
  const auto gram = restrict_matrix(assemble_h1_gram(V).matrix, V->free_dofs(), V->free_dofs());
  Rng rng(5);
  auto z = random_smooth_field(V, rng);
  const double n1 = dual_norm_B(z, gram);
  z *= 2.0;
  EXPECT_NEAR(dual_norm_B(z, gram), 4.0 * n1, 1e-12 * n1);
  EXPECT_EQ(dual_norm_B(DiscreteField(V), gram), 0.0);
}

TEST(Forms, SampledConstantsAreFiniteAndStable) {
  Rng rng(2024);
  const auto m8 = square(8), m16 = square(16);
  const auto V8 = build_space(m8, SpaceKind::Velocity), W8 = build_space(m8, SpaceKind::Temperature);
  const double c2 = estimate_continuity(TrilinearForm::B, V8, W8, 20, rng);
  const double c3 = estimate_continuity(TrilinearForm::C, V8, W8, 20, rng);
  EXPECT_TRUE(std::isfinite(c2) && c2 > 0.0);
  EXPECT_TRUE(std::isfinite(c3) && c3 > 0.0);
  const double b8 = estimate_cB(V8, 20, rng);
  const double b16 = estimate_cB(build_space(m16, SpaceKind::Velocity), 20, rng);
  EXPECT_LT(std::max(b8, b16) / std::min(b8, b16), 2.0);
}

TEST(Forms, ConstantsReportJson) {
  ConstantsReport r{0.9, 0.8, 0.1, 0.2, 0.3};
  const auto s = to_json(r);
  for (const char* key : {"\"c1_hat\"", "\"c1p_hat\"", "\"c2_hat\"", "\"c3_hat\"", "\"cB_hat\""})
    EXPECT_NE(s.find(key), std::string::npos);
}

}  // namespace
