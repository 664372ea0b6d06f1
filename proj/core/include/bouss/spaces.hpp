#pragma once

#include <filesystem>
#include <functional>
#include <memory>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "bouss/mesh.hpp"
#include "bouss/polynomial.hpp"
#include "bouss/random.hpp"

namespace bouss {

/// velocity: P2 vector field, z = 0 on Γ₂, tangential component zero on Γ₁.
/// temperature: P2 scalar field, w = 0 on Γ₁.
/// head: P1 scalar field (total-head multiplier), unconstrained.
enum class SpaceKind { Velocity, Temperature, Head };

/// `None` builds the unconstrained variant of a space (used by tests and
/// identity checks that need, e.g., a constant field on the whole domain).
enum class ConstraintMode { Essential, None };

enum class ConstraintType { Full, Tangential };

struct ConstrainedDof {
  int dof;
  ConstraintType type;
  /// For velocity DOFs: the Cartesian component fixed to zero.
  int component;
};

/// Finite-element space over the structured mesh. Vector DOFs are stored
/// component-blocked: dof = component * n_scalar() + scalar_dof.
/// P2 scalar DOFs are numbered vertices first, then edges in order of first
/// appearance in the element list. Immutable after construction.
class FunctionSpace {
 public:
  SpaceKind kind() const noexcept { return kind_; }
  ConstraintMode constraint_mode() const noexcept { return mode_; }
  const Mesh& mesh() const noexcept { return *mesh_; }
  const std::shared_ptr<const Mesh>& mesh_ptr() const noexcept { return mesh_; }

  int polynomial_degree() const noexcept { return kind_ == SpaceKind::Head ? 1 : 2; }
  int n_components() const noexcept { return kind_ == SpaceKind::Velocity ? 2 : 1; }
  int n_scalar() const noexcept { return static_cast<int>(dof_points_.size()); }
  /// Length of every coefficient vector over this space (constrained included).
  int n_dofs() const noexcept { return n_components() * n_scalar(); }
  /// Number of unconstrained DOFs.
  int n_free() const noexcept { return static_cast<int>(free_dofs_.size()); }
  int dofs_per_element() const noexcept { return polynomial_degree() == 2 ? 6 : 3; }

  std::span<const int> element_dofs(int e) const {
    const auto k = static_cast<std::size_t>(dofs_per_element());
    return {element_dofs_.data() + static_cast<std::size_t>(e) * k, k};
  }
  int component_dof(int scalar_dof, int component) const {
    return component * n_scalar() + scalar_dof;
  }

  const Vec2& dof_point(int scalar_dof) const { return dof_points_[scalar_dof]; }
  /// Sides of ∂Ω the scalar DOF lies on.
  const std::vector<Side>& dof_sides(int scalar_dof) const { return dof_sides_[scalar_dof]; }

  /// Scalar DOFs of boundary edge b (mesh.boundary_edges() order): start
  /// vertex, end vertex, midpoint (-1 for P1).
  std::array<int, 3> boundary_edge_dofs(int b) const { return boundary_edge_dofs_[b]; }

  bool is_constrained(int dof) const { return free_index_[dof] < 0; }
  /// Position of dof in free_dofs(), or -1 when constrained.
  int free_index(int dof) const { return free_index_[dof]; }
  const std::vector<int>& free_dofs() const noexcept { return free_dofs_; }
  const std::vector<ConstrainedDof>& constraints() const noexcept { return constraints_; }

 private:
  friend std::shared_ptr<const FunctionSpace> build_space(std::shared_ptr<const Mesh>, SpaceKind,
                                                          ConstraintMode);

  SpaceKind kind_ = SpaceKind::Head;
  ConstraintMode mode_ = ConstraintMode::Essential;
  std::shared_ptr<const Mesh> mesh_;
  std::vector<int> element_dofs_;
  std::vector<Vec2> dof_points_;
  std::vector<std::vector<Side>> dof_sides_;
  std::vector<std::array<int, 3>> boundary_edge_dofs_;
  std::vector<int> free_index_;
  std::vector<int> free_dofs_;
  std::vector<ConstrainedDof> constraints_;
};

using SpacePtr = std::shared_ptr<const FunctionSpace>;

SpacePtr build_space(std::shared_ptr<const Mesh> mesh, SpaceKind kind,
                     ConstraintMode mode = ConstraintMode::Essential);

/// Coefficient vector over a FunctionSpace. Constrained entries are 0 after
/// every mutation.
class DiscreteField {
 public:
  explicit DiscreteField(SpacePtr space);
  DiscreteField(SpacePtr space, Eigen::VectorXd coeffs);

  /// Builds a field from values on the free DOFs only.
  static DiscreteField from_free(SpacePtr space, const Eigen::VectorXd& free_values);

  const FunctionSpace& space() const noexcept { return *space_; }
  const SpacePtr& space_ptr() const noexcept { return space_; }
  const Eigen::VectorXd& coeffs() const noexcept { return coeffs_; }
  void set_coeffs(Eigen::VectorXd coeffs);
  Eigen::VectorXd free_values() const;

  DiscreteField& operator+=(const DiscreteField& o);
  DiscreteField& operator*=(double s);

  /// Component c evaluated at reference point (ξ, η) of element e.
  double value(int e, double xi, double eta, int component = 0) const;
  /// Point evaluation (vector fields: component c).
  double value_at(const Vec2& p, int component = 0) const;

 private:
  void enforce_constraints();

  SpacePtr space_;
  Eigen::VectorXd coeffs_;
};

using ScalarFunction = std::function<double(const Vec2&)>;
using VectorFunction = std::function<Vec2(const Vec2&)>;

/// Nodal (vertex and edge-midpoint) interpolant; constrained DOFs are set to 0.
DiscreteField interpolate(SpacePtr space, const ScalarFunction& f);
DiscreteField interpolate(SpacePtr space, const VectorFunction& f);
inline DiscreteField interpolate(SpacePtr space, const PolynomialVectorField& f) {
  return interpolate(std::move(space), VectorFunction([&f](const Vec2& p) { return f.value(p); }));
}

double l2_norm(const DiscreteField& field);
double h1_seminorm(const DiscreteField& field);
/// Full H¹ norm (‖·‖₀² + |·|₁²)^½.
double h1_norm(const DiscreteField& field);
/// ‖∂z₂/∂x − ∂z₁/∂y‖_{L²}; velocity fields only.
double rot_seminorm(const DiscreteField& field);

/// ‖f_h − f‖_{L²} with a degree-8 rule (vector fields: both components).
double l2_error(const DiscreteField& field, const ScalarFunction& exact);
double l2_error(const DiscreteField& field, const VectorFunction& exact);

/// Uniform random values in [-1, 1] on every free DOF.
DiscreteField random_coefficients(SpacePtr space, Rng& rng);
/// Random smooth boundary-compatible field: for velocity the interpolant of
/// a random stream-function field (analytically divergence free, zero on
/// {y=0,1}, zero tangential part on {x=0,1}); for temperature a random
/// combination of sin(mπx)cos(nπy) modes; for head a random low-order
/// polynomial.
DiscreteField random_smooth_field(SpacePtr space, Rng& rng);

/// Scalar P2 DOFs lying on boundary edges with a given tag, in ascending DOF
/// order. Control data on Γᵢ is stored as values at these DOFs (a continuous
/// piecewise-quadratic trace).
struct BoundaryTrace {
  BoundaryTag tag;
  std::vector<int> scalar_dofs;
  std::vector<Vec2> points;
  std::vector<int> edges;  // indices into mesh.boundary_edges()

  int size() const noexcept { return static_cast<int>(scalar_dofs.size()); }
  /// Position of a scalar DOF in this trace, or -1.
  int index_of(int scalar_dof) const;
};

/// Requires a P2 space (velocity or temperature).
BoundaryTrace build_trace(const FunctionSpace& space, BoundaryTag tag);

/// (dof_id, value) rows; velocity fields as (node_id, zx, zy) at mesh nodes.
void write_field_csv(const DiscreteField& field, const std::filesystem::path& file);

}  // namespace bouss
