#include "bouss/polynomial.hpp"

#include <algorithm>

namespace bouss {

Polynomial2::Polynomial2(int degree_bound)
    : n_(degree_bound + 1), c_(static_cast<std::size_t>(n_ * n_), 0.0) {}

Polynomial2 Polynomial2::constant(double c) {
  Polynomial2 p(0);
  p.coeff(0, 0) = c;
  return p;
}

Polynomial2 Polynomial2::x() {
  Polynomial2 p(1);
  p.coeff(1, 0) = 1.0;
  return p;
}

Polynomial2 Polynomial2::y() {
  Polynomial2 p(1);
  p.coeff(0, 1) = 1.0;
  return p;
}

Polynomial2 Polynomial2::separable(const std::vector<double>& px, const std::vector<double>& qy) {
  const int deg = static_cast<int>(std::max(px.size(), qy.size())) - 1;
  Polynomial2 p(std::max(deg, 0));
  for (std::size_t i = 0; i < px.size(); ++i)
    for (std::size_t j = 0; j < qy.size(); ++j)
      p.coeff(static_cast<int>(i), static_cast<int>(j)) = px[i] * qy[j];
  return p;
}

double Polynomial2::operator()(double x, double y) const {
  // Horner in y nested in Horner in x.
  double result = 0.0;
  for (int i = n_ - 1; i >= 0; --i) {
    double row = 0.0;
    for (int j = n_ - 1; j >= 0; --j) row = row * y + coeff(i, j);
    result = result * x + row;
  }
  return result;
}

Polynomial2 Polynomial2::dx() const {
  Polynomial2 d(n_ - 1);
  for (int i = 1; i < n_; ++i)
    for (int j = 0; j < n_; ++j) d.coeff(i - 1, j) = coeff(i, j) * i;
  return d;
}

Polynomial2 Polynomial2::dy() const {
  Polynomial2 d(n_ - 1);
  for (int i = 0; i < n_; ++i)
    for (int j = 1; j < n_; ++j) d.coeff(i, j - 1) = coeff(i, j) * j;
  return d;
}

Polynomial2& Polynomial2::operator+=(const Polynomial2& o) {
  if (o.n_ > n_) {
    Polynomial2 wide(o.n_ - 1);
    for (int i = 0; i < n_; ++i)
      for (int j = 0; j < n_; ++j) wide.coeff(i, j) = coeff(i, j);
    *this = std::move(wide);
  }
  for (int i = 0; i < o.n_; ++i)
    for (int j = 0; j < o.n_; ++j) coeff(i, j) += o.coeff(i, j);
  return *this;
}

Polynomial2 operator*(const Polynomial2& a, const Polynomial2& b) {
  Polynomial2 p(a.degree_bound() + b.degree_bound());
  for (int i = 0; i < a.n_; ++i)
    for (int j = 0; j < a.n_; ++j) {
      const double ca = a.coeff(i, j);
      if (ca == 0.0) continue;
      for (int k = 0; k < b.n_; ++k)
        for (int l = 0; l < b.n_; ++l) p.coeff(i + k, j + l) += ca * b.coeff(k, l);
    }
  return p;
}

Polynomial2 operator*(Polynomial2 a, double s) {
  for (double& c : a.c_) c *= s;
  return a;
}

PolynomialVectorField::PolynomialVectorField(Polynomial2 fx, Polynomial2 fy)
    : comp_{std::move(fx), std::move(fy)} {
  for (int i = 0; i < 2; ++i) {
    grad_[i][0] = comp_[i].dx();
    grad_[i][1] = comp_[i].dy();
  }
}

Mat2 PolynomialVectorField::gradient(const Vec2& p) const {
  Mat2 g;
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) g(i, j) = grad_[i][j](p);
  return g;
}

double PolynomialVectorField::divergence(const Vec2& p) const {
  return grad_[0][0](p) + grad_[1][1](p);
}

AnalyticDivFreeField::AnalyticDivFreeField(Polynomial2 psi) : psi_(std::move(psi)) {
  const Polynomial2 psi_x = psi_.dx();
  const Polynomial2 psi_y = psi_.dy();
  const Polynomial2 psi_xy = psi_x.dy();
  comp_[0] = psi_y;
  comp_[1] = psi_x * -1.0;
  grad_[0][0] = psi_xy;
  grad_[0][1] = psi_y.dy();
  grad_[1][0] = psi_x.dx() * -1.0;
  grad_[1][1] = psi_xy * -1.0;
}

}  // namespace bouss
