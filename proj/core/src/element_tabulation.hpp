#pragma once

// Reference-element tabulations shared by the assembly and evaluation
// loops. Internal to the core library.

#include <array>
#include <vector>

#include "bouss/fe.hpp"
#include "bouss/quadrature.hpp"
#include "bouss/spaces.hpp"

namespace bouss::detail {

struct Tabulation {
  TriangleQuadrature rule;
  std::vector<std::array<double, fe::n_p2>> p2;
  std::vector<std::array<Vec2, fe::n_p2>> dp2;
  std::vector<std::array<double, fe::n_p1>> p1;

  explicit Tabulation(int degree) : rule(triangle_quadrature(degree)) {
    for (std::size_t q = 0; q < rule.size(); ++q) {
      const double xi = rule.points[q][0], eta = rule.points[q][1];
      p2.push_back(fe::p2_values(xi, eta));
      dp2.push_back(fe::p2_reference_gradients(xi, eta));
      p1.push_back(fe::p1_values(xi, eta));
    }
  }
};

/// Physical P2 gradients of one element at every quadrature point.
struct ElementP2 {
  fe::ElementGeometry geo;
  std::vector<std::array<Vec2, fe::n_p2>> grad;

  ElementP2(const Mesh& mesh, int e, const Tabulation& tab) : geo(mesh, e) {
    grad.resize(tab.rule.size());
    for (std::size_t q = 0; q < tab.rule.size(); ++q)
      for (int i = 0; i < fe::n_p2; ++i) grad[q][i] = geo.physical_gradient(tab.dp2[q][i]);
  }

  double jxw(const Tabulation& tab, std::size_t q) const { return tab.rule.weights[q] * geo.det; }
};

/// Value and gradient of a discrete P2 field (vector or scalar) at a
/// quadrature point of an element.
inline void p2_sample(const DiscreteField& f, int e, const Tabulation& tab, const ElementP2& el,
                      std::size_t q, Vec2& value, Mat2& grad) {
  const FunctionSpace& s = f.space();
  const auto dofs = s.element_dofs(e);
  const auto& c = f.coeffs();
  const int ns = s.n_scalar();
  value.setZero();
  grad.setZero();
  for (int k = 0; k < s.n_components(); ++k) {
    for (int i = 0; i < fe::n_p2; ++i) {
      const double ci = c[k * ns + dofs[i]];
      value[k] += ci * tab.p2[q][i];
      grad.row(k) += ci * el.grad[q][i].transpose();
    }
  }
}

}  // namespace bouss::detail
