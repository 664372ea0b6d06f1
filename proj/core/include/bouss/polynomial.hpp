#pragma once

#include <vector>

#include "bouss/mesh.hpp"

namespace bouss {

/// Dense bivariate polynomial Σ c_ij xⁱ yʲ with i, j <= degree_bound.
class Polynomial2 {
 public:
  Polynomial2() : Polynomial2(0) {}
  explicit Polynomial2(int degree_bound);

  static Polynomial2 constant(double c);
  static Polynomial2 x();
  static Polynomial2 y();
  /// p(x)·q(y) from univariate coefficient lists (lowest order first).
  static Polynomial2 separable(const std::vector<double>& px, const std::vector<double>& qy);

  int degree_bound() const noexcept { return n_ - 1; }
  double coeff(int i, int j) const { return c_[static_cast<std::size_t>(i * n_ + j)]; }
  double& coeff(int i, int j) { return c_[static_cast<std::size_t>(i * n_ + j)]; }

  double operator()(double x, double y) const;
  double operator()(const Vec2& p) const { return (*this)(p.x(), p.y()); }

  Polynomial2 dx() const;
  Polynomial2 dy() const;

  Polynomial2& operator+=(const Polynomial2& o);
  friend Polynomial2 operator+(Polynomial2 a, const Polynomial2& b) { return a += b; }
  friend Polynomial2 operator-(Polynomial2 a, const Polynomial2& b) { return a += b * -1.0; }
  friend Polynomial2 operator*(const Polynomial2& a, const Polynomial2& b);
  friend Polynomial2 operator*(Polynomial2 a, double s);
  friend Polynomial2 operator*(double s, Polynomial2 a) { return std::move(a) * s; }

 private:
  int n_;
  std::vector<double> c_;
};

/// Vector field with polynomial components; gradients are precomputed.
/// gradient(p)(i, j) = ∂fᵢ/∂xⱼ.
class PolynomialVectorField {
 public:
  PolynomialVectorField(Polynomial2 fx, Polynomial2 fy);

  Vec2 value(const Vec2& p) const { return {comp_[0](p), comp_[1](p)}; }
  Mat2 gradient(const Vec2& p) const;
  double divergence(const Vec2& p) const;
  const Polynomial2& component(int i) const { return comp_[i]; }

 protected:
  PolynomialVectorField() = default;

  Polynomial2 comp_[2];
  Polynomial2 grad_[2][2];
};

/// z = (∂ψ/∂y, −∂ψ/∂x) for a polynomial stream function ψ. The mixed
/// derivative is computed once and shared between the two diagonal gradient
/// entries, so the divergence evaluates to exactly 0.
class AnalyticDivFreeField : public PolynomialVectorField {
 public:
  explicit AnalyticDivFreeField(Polynomial2 psi);

  const Polynomial2& stream_function() const noexcept { return psi_; }

 private:
  Polynomial2 psi_;
};

}  // namespace bouss
