#include "bouss/fe.hpp"

namespace bouss::fe {

std::array<double, n_p2> p2_values(double xi, double eta) {
  const double l0 = 1.0 - xi - eta, l1 = xi, l2 = eta;
  return {l0 * (2.0 * l0 - 1.0), l1 * (2.0 * l1 - 1.0), l2 * (2.0 * l2 - 1.0),
          4.0 * l0 * l1,         4.0 * l1 * l2,         4.0 * l2 * l0};
}

std::array<Vec2, n_p2> p2_reference_gradients(double xi, double eta) {
  const double l0 = 1.0 - xi - eta, l1 = xi, l2 = eta;
  const Vec2 g0(-1.0, -1.0), g1(1.0, 0.0), g2(0.0, 1.0);
  return {(4.0 * l0 - 1.0) * g0,         (4.0 * l1 - 1.0) * g1,
          (4.0 * l2 - 1.0) * g2,         4.0 * (l0 * g1 + l1 * g0),
          4.0 * (l1 * g2 + l2 * g1),     4.0 * (l2 * g0 + l0 * g2)};
}

std::array<double, n_p1> p1_values(double xi, double eta) { return {1.0 - xi - eta, xi, eta}; }

std::array<Vec2, n_p1> p1_reference_gradients() {
  return {Vec2(-1.0, -1.0), Vec2(1.0, 0.0), Vec2(0.0, 1.0)};
}

std::array<double, 3> p2_trace_values(double s) {
  return {(1.0 - s) * (1.0 - 2.0 * s), s * (2.0 * s - 1.0), 4.0 * s * (1.0 - s)};
}

ElementGeometry::ElementGeometry(const Mesh& mesh, int e)
    : origin(mesh.nodes()[mesh.elements()[e][0]]), jacobian(mesh.jacobian(e)) {
  det = jacobian.determinant();
  inverse_transpose = jacobian.inverse().transpose();
}

}  // namespace bouss::fe
