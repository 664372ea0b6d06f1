#pragma once

#include <Eigen/Core>

namespace bouss {

/// Space–time boundary control. Step s holds the data applied on the step
/// that ends at t = (s + 1)·dt, sampled at the P2 trace DOFs of Γ₁ (both
/// components) and Γ₂.
///
/// Layout: v1[(s·n1 + b)·2 + c], v2[s·n2 + b].
struct Control {
  int n_steps = 0;
  int n1 = 0;
  int n2 = 0;
  Eigen::VectorXd v1;
  Eigen::VectorXd v2;

  Control() = default;
  Control(int steps, int gamma1_size, int gamma2_size)
      : n_steps(steps),
        n1(gamma1_size),
        n2(gamma2_size),
        v1(Eigen::VectorXd::Zero(2 * steps * gamma1_size)),
        v2(Eigen::VectorXd::Zero(steps * gamma2_size)) {}

  double& v1_at(int s, int b, int c) { return v1[(s * n1 + b) * 2 + c]; }
  double v1_at(int s, int b, int c) const { return v1[(s * n1 + b) * 2 + c]; }
  double& v2_at(int s, int b) { return v2[s * n2 + b]; }
  double v2_at(int s, int b) const { return v2[s * n2 + b]; }

  /// Γ₁ coefficients of one step (length 2·n1, column order of load_matrix_L1).
  Eigen::VectorXd v1_step(int s) const { return v1.segment(2 * s * n1, 2 * n1); }
  Eigen::VectorXd v2_step(int s) const { return v2.segment(s * n2, n2); }

  bool same_shape(const Control& o) const {
    return n_steps == o.n_steps && n1 == o.n1 && n2 == o.n2;
  }
  /// Flattened [v1; v2].
  Eigen::VectorXd flat() const;
  void set_flat(const Eigen::VectorXd& x);
  int size() const { return static_cast<int>(v1.size() + v2.size()); }
};

/// Box bounds with the same shape as a Control; α ≤ v ≤ β entrywise.
struct Box {
  Control alpha;
  Control beta;

  /// Constant bounds over the given control shape.
  static Box uniform(const Control& shape, double alpha1, double beta1, double alpha2,
                     double beta2);
};

}  // namespace bouss
