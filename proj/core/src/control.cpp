#include "bouss/control.hpp"

#include "bouss/error.hpp"

namespace bouss {

Eigen::VectorXd Control::flat() const {
  Eigen::VectorXd x(size());
  x << v1, v2;
  return x;
}

void Control::set_flat(const Eigen::VectorXd& x) {
  if (x.size() != size()) throw InvalidArgument("Control::set_flat: size mismatch");
  v1 = x.head(v1.size());
  v2 = x.tail(v2.size());
}

Box Box::uniform(const Control& shape, double alpha1, double beta1, double alpha2, double beta2) {
  Box b{shape, shape};
  b.alpha.v1.setConstant(alpha1);
  b.beta.v1.setConstant(beta1);
  b.alpha.v2.setConstant(alpha2);
  b.beta.v2.setConstant(beta2);
  return b;
}

}  // namespace bouss
