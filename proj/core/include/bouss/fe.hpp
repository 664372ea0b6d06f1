#pragma once

#include <array>

#include "bouss/mesh.hpp"

namespace bouss::fe {

// Local P2 numbering: vertices 0,1,2 then edge midpoints 3=(0,1), 4=(1,2),
// 5=(2,0). Basis: λᵢ(2λᵢ − 1) on vertices, 4λᵢλⱼ on edges.
inline constexpr int n_p2 = 6;
inline constexpr int n_p1 = 3;
inline constexpr std::array<std::array<int, 2>, 3> p2_edge_vertices{{{0, 1}, {1, 2}, {2, 0}}};

std::array<double, n_p2> p2_values(double xi, double eta);
/// Gradients with respect to (ξ, η).
std::array<Vec2, n_p2> p2_reference_gradients(double xi, double eta);

std::array<double, n_p1> p1_values(double xi, double eta);
std::array<Vec2, n_p1> p1_reference_gradients();

/// Quadratic trace basis on a segment parameterised by s ∈ [0,1]:
/// [start vertex, end vertex, midpoint].
std::array<double, 3> p2_trace_values(double s);

/// Affine map of one mesh element.
struct ElementGeometry {
  Vec2 origin;
  Mat2 jacobian;
  Mat2 inverse_transpose;
  double det = 0.0;

  ElementGeometry(const Mesh& mesh, int e);

  Vec2 map(double xi, double eta) const { return origin + jacobian * Vec2(xi, eta); }
  Vec2 physical_gradient(const Vec2& reference_gradient) const {
    return inverse_transpose * reference_gradient;
  }
};

}  // namespace bouss::fe
