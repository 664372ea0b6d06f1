#pragma once

#include <array>
#include <vector>

namespace bouss {

/// Highest polynomial degree for which rules can be requested.
inline constexpr int max_quadrature_degree = 40;

/// Rule on the reference triangle (0,0),(1,0),(0,1). Points are stored as
/// reference coordinates (ξ, η); the barycentric coordinates are
/// (1 − ξ − η, ξ, η). Weights sum to 1/2.
struct TriangleQuadrature {
  int degree = 0;
  std::vector<std::array<double, 2>> points;
  std::vector<double> weights;

  std::size_t size() const noexcept { return weights.size(); }
  std::array<double, 3> barycentric(std::size_t q) const {
    return {1.0 - points[q][0] - points[q][1], points[q][0], points[q][1]};
  }
};

/// Rule on the unit segment [0,1]. Weights sum to 1.
struct EdgeQuadrature {
  int degree = 0;
  std::vector<double> points;
  std::vector<double> weights;

  std::size_t size() const noexcept { return weights.size(); }
};

/// Gauss-Legendre rule with n points mapped to [0,1].
EdgeQuadrature gauss_legendre(int n);

/// Rule exact for polynomials of degree <= `degree` on the unit segment.
/// Throws InvalidArgument outside [1, max_quadrature_degree].
EdgeQuadrature edge_quadrature(int degree);

/// Rule exact for polynomials of total degree <= `degree` on the reference
/// triangle. Degree 1 is the centroid rule and degree 2 the three-point
/// interior rule; higher degrees use a collapsed Gauss-Legendre product rule.
TriangleQuadrature triangle_quadrature(int degree);

}  // namespace bouss
