#include "bouss/quadrature.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "bouss/error.hpp"

namespace bouss {

namespace {

void check_degree(int degree) {
  if (degree < 1 || degree > max_quadrature_degree)
    throw InvalidArgument("unsupported quadrature degree " + std::to_string(degree));
}

}  // namespace

EdgeQuadrature gauss_legendre(int n) {
  EdgeQuadrature rule;
  rule.degree = 2 * n - 1;
  rule.points.resize(n);
  rule.weights.resize(n);
  // Newton iteration on P_n from the Chebyshev-like initial guess; the rule
  // is symmetric so only half the roots are computed.
  for (int i = 0; i < (n + 1) / 2; ++i) {
    double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = x;
      for (int k = 2; k <= n; ++k) {
        const double pk = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = pk;
      }
      const double pn = n == 1 ? x : p1;
      const double pnm1 = n == 1 ? 1.0 : p0;
      dp = n * (x * pn - pnm1) / (x * x - 1.0);
      const double dx = pn / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    if (n == 1) dp = 1.0;
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    // map [-1,1] -> [0,1]
    rule.points[i] = 0.5 * (1.0 - x);
    rule.points[n - 1 - i] = 0.5 * (1.0 + x);
    rule.weights[i] = 0.5 * w;
    rule.weights[n - 1 - i] = 0.5 * w;
  }
  if (n % 2 == 1) rule.points[n / 2] = 0.5;
  return rule;
}

EdgeQuadrature edge_quadrature(int degree) {
  check_degree(degree);
  auto rule = gauss_legendre((degree + 2) / 2);
  rule.degree = degree;
  return rule;
}

TriangleQuadrature triangle_quadrature(int degree) {
  check_degree(degree);
  TriangleQuadrature rule;
  rule.degree = degree;
  if (degree == 1) {
    rule.points = {{1.0 / 3.0, 1.0 / 3.0}};
    rule.weights = {0.5};
    return rule;
  }
  if (degree == 2) {
    rule.points = {{1.0 / 6.0, 1.0 / 6.0}, {2.0 / 3.0, 1.0 / 6.0}, {1.0 / 6.0, 2.0 / 3.0}};
    rule.weights = {1.0 / 6.0, 1.0 / 6.0, 1.0 / 6.0};
    return rule;
  }
  // Collapsed map (u, v) ∈ [0,1]² -> (ξ, η) = (u, v(1 − u)) with Jacobian
  // (1 − u). A total-degree-d polynomial becomes degree d + 1 in u and d in
  // v, so ceil((d + 2) / 2) points per direction suffice.
  const int n = (degree + 3) / 2;
  const auto gl = gauss_legendre(n);
  rule.points.reserve(static_cast<std::size_t>(n * n));
  rule.weights.reserve(static_cast<std::size_t>(n * n));
  for (int i = 0; i < n; ++i) {
    const double u = gl.points[i];
    for (int j = 0; j < n; ++j) {
      const double v = gl.points[j];
      rule.points.push_back({u, v * (1.0 - u)});
      rule.weights.push_back(gl.weights[i] * gl.weights[j] * (1.0 - u));
    }
  }
  return rule;
}

}  // namespace bouss
