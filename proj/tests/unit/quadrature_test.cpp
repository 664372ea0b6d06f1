#include <gtest/gtest.h>

#include <cmath>

#include "bouss/error.hpp"
#include "bouss/quadrature.hpp"

namespace {

double factorial(int n) { return std::tgamma(n + 1.0); }

// ∫ ξ^a η^b over the reference triangle = a! b! / (a + b + 2)!
double triangle_monomial(int a, int b) { return factorial(a) * factorial(b) / factorial(a + b + 2); }

double apply(const bouss::TriangleQuadrature& q, int a, int b) {
  double s = 0.0;
  for (std::size_t i = 0; i < q.size(); ++i)
    s += q.weights[i] * std::pow(q.points[i][0], a) * std::pow(q.points[i][1], b);
  return s;
}

TEST(Quadrature, TriangleRulesExactUpToTheirDegree) {
  for (int d = 1; d <= 14; ++d) {
    const auto q = bouss::triangle_quadrature(d);
    EXPECT_GE(q.degree, d);
    for (int a = 0; a <= d; ++a)
      for (int b = 0; a + b <= d; ++b)
        EXPECT_NEAR(apply(q, a, b), triangle_monomial(a, b), 1e-15) << "degree " << d << " x^" << a << " y^" << b;
  }
}

TEST(Quadrature, TrianglePointsInsideWithPositiveWeights) {
  for (int d : {1, 2, 6, 12}) {
    const auto q = bouss::triangle_quadrature(d);
    double sum = 0.0;
    for (std::size_t i = 0; i < q.size(); ++i) {
      EXPECT_GT(q.weights[i], 0.0);
      const auto bc = q.barycentric(i);
      for (double l : bc) EXPECT_GE(l, 0.0);
      sum += q.weights[i];
    }
    EXPECT_NEAR(sum, 0.5, 1e-15);
  }
}

TEST(Quadrature, EdgeRulesExactOnMonomials) {
  for (int d = 1; d <= 20; ++d) {
    const auto q = bouss::edge_quadrature(d);
    for (int a = 0; a <= d; ++a) {
      double s = 0.0;
      for (std::size_t i = 0; i < q.size(); ++i) s += q.weights[i] * std::pow(q.points[i], a);
      EXPECT_NEAR(s, 1.0 / (a + 1), 1e-15);
    }
  }
}

TEST(Quadrature, GaussLegendreIsSymmetric) {
  const auto q = bouss::gauss_legendre(5);
  ASSERT_EQ(q.size(), 5u);
  for (std::size_t i = 0; i < q.size(); ++i) {
    EXPECT_NEAR(q.points[i] + q.points[q.size() - 1 - i], 1.0, 1e-15);
    EXPECT_NEAR(q.weights[i], q.weights[q.size() - 1 - i], 1e-15);
  }
}

TEST(Quadrature, DegreeOutOfRangeThrows) {
  EXPECT_THROW(bouss::triangle_quadrature(0), bouss::InvalidArgument);
  EXPECT_THROW(bouss::edge_quadrature(bouss::max_quadrature_degree + 1), bouss::InvalidArgument);
}

}  // namespace
