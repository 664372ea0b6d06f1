#pragma once

#include <functional>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/SparseCore>

#include "bouss/polynomial.hpp"
#include "bouss/random.hpp"
#include "bouss/spaces.hpp"

namespace bouss {

using SparseMatrix = Eigen::SparseMatrix<double>;

/// Quadrature degree of all volume forms; exact for every product of P2
/// bases and gradients appearing in a₁, a₂, b and c.
inline constexpr int volume_quadrature_degree = 6;
inline constexpr int edge_quadrature_degree = 6;

enum class OperatorKind {
  MassZ,
  MassW,
  MassHead,
  A1,
  A2,
  H1Gram,
  Buoyancy,
  Divergence,
  BLinearized,
  BDerivative,
  CLinearized,
  CSkew,
  CSkewDerivative,
};

const char* to_string(OperatorKind kind);

/// Sparse operator in full DOF numbering: rows index the test space, columns
/// the trial space. Entries in a constrained row or column are omitted, so
/// the restriction to free DOFs is the operator on the constrained spaces.
struct AssembledOperator {
  OperatorKind kind;
  SparseMatrix matrix;
  /// Field at which b/c were linearized, when applicable.
  std::optional<DiscreteField> frozen_field;

  /// yᵀ A x for coefficient vectors.
  double apply(const Eigen::VectorXd& y, const Eigen::VectorXd& x) const {
    return y.dot(matrix * x);
  }
};

/// (φᵢ, φⱼ) over any space.
AssembledOperator assemble_mass(const SpacePtr& space);
/// RotOnly: a₁(u, ψ) = ∫ rot u · rot ψ with the 2D scalar curl.
/// RotDiv adds ∫ div u · div ψ. The two agree whenever div u = 0, but only
/// RotDiv is coercive on the weakly divergence-free P2/P1 subspace: pure
/// rot-rot vanishes on gradients of C¹ cubic splines, which the P1 head
/// cannot remove. The time stepper uses RotDiv.
enum class A1Form { RotDiv, RotOnly };
AssembledOperator assemble_a1(const SpacePtr& velocity, A1Form form = A1Form::RotDiv);
/// a₂(w, φ) = ∫ ∇w · ∇φ.
AssembledOperator assemble_a2(const SpacePtr& temperature);
/// H¹ inner product (u, v) + (∇u, ∇v).
AssembledOperator assemble_h1_gram(const SpacePtr& space);
/// Rows: head, columns: velocity. (D z)_q = ∫ q div z.
AssembledOperator assemble_divergence(const SpacePtr& velocity, const SpacePtr& head);
/// Rows: velocity, columns: temperature. Entry β ∫ (g·ψᵢ) μⱼ.
AssembledOperator assemble_buoyancy(const SpacePtr& velocity, const SpacePtr& temperature,
                                    const Vec2& g, double beta);

/// Entry (i, j) = b(z, ψⱼ, ψᵢ): action on v reproduces b(z, v, ·).
AssembledOperator assemble_b_linearized(const DiscreteField& z);
/// Entry (i, j) = b(ψⱼ, v, ψᵢ): the derivative of b(u, v, ·) in its first slot.
AssembledOperator assemble_b_derivative(const DiscreteField& v);
/// Entry (i, j) = c(z, μⱼ, μᵢ).
AssembledOperator assemble_c_linearized(const DiscreteField& z, const SpacePtr& temperature);
/// Entry (i, j) = ½[c(z, μⱼ, μᵢ) − c(z, μᵢ, μⱼ)]. Skew by construction.
AssembledOperator assemble_c_skew(const DiscreteField& z, const SpacePtr& temperature);
/// Rows: temperature, columns: velocity. Entry (i, j) = ½[c(ψⱼ, w, μᵢ) − c(ψⱼ, μᵢ, w)].
AssembledOperator assemble_c_skew_derivative(const DiscreteField& w, const SpacePtr& velocity);

/// A vector-valued argument of a trilinear form: a discrete velocity field or
/// an exact polynomial field.
class VectorArg {
 public:
  VectorArg(const DiscreteField& f) : arg_(&f) {}                      // NOLINT
  VectorArg(const PolynomialVectorField& f) : arg_(&f) {}              // NOLINT
  const std::variant<const DiscreteField*, const PolynomialVectorField*>& get() const { return arg_; }

 private:
  std::variant<const DiscreteField*, const PolynomialVectorField*> arg_;
};

class ScalarArg {
 public:
  ScalarArg(const DiscreteField& f) : arg_(&f) {}                      // NOLINT
  ScalarArg(const Polynomial2& f) : arg_(&f) {}                        // NOLINT
  const std::variant<const DiscreteField*, const Polynomial2*>& get() const { return arg_; }

 private:
  std::variant<const DiscreteField*, const Polynomial2*> arg_;
};

/// b(u, v, w) = ∫ (rot u × v)·w = ∫ rot u (v₁w₂ − v₂w₁).
/// At least one argument must be a DiscreteField (it supplies the mesh);
/// all discrete arguments must share the mesh.
double eval_b(VectorArg u, VectorArg v, VectorArg w, int degree = volume_quadrature_degree);
/// c(z, w, φ) = ∫ (z·∇w) φ.
double eval_c(VectorArg z, ScalarArg w, ScalarArg phi, int degree = volume_quadrature_degree);

using BoundaryVectorData = std::function<Vec2(const Vec2&)>;
using BoundaryScalarData = std::function<double(const Vec2&)>;

/// L₁(ψᵢ) = ∫_{Γ₁} (v₁·n)(ψᵢ·n) ds for every velocity DOF.
Eigen::VectorXd assemble_L1(const SpacePtr& velocity, const BoundaryVectorData& v1);
/// L₂(μᵢ) = ∫_{Γ₂} v₂ μᵢ ds for every temperature DOF.
Eigen::VectorXd assemble_L2(const SpacePtr& temperature, const BoundaryScalarData& v2);

/// Linear map from Γ₁ trace coefficients (column 2b + c holds component c at
/// trace DOF b) to L₁ loads.
SparseMatrix load_matrix_L1(const SpacePtr& velocity, const BoundaryTrace& gamma1);
/// Linear map from Γ₂ trace coefficients to L₂ loads.
SparseMatrix load_matrix_L2(const SpacePtr& temperature, const BoundaryTrace& gamma2);

/// Mass matrix of the P2 trace basis on the edges of a boundary trace
/// (trace numbering, no constraints applied).
SparseMatrix trace_mass_matrix(const FunctionSpace& space, const BoundaryTrace& trace);
/// ∫ f φ_b ds over the trace edges for every trace DOF b.
Eigen::VectorXd trace_moments(const FunctionSpace& space, const BoundaryTrace& trace,
                              const BoundaryScalarData& f);

/// ∫ f·ψᵢ (or f μᵢ) for every DOF, constrained rows zeroed.
Eigen::VectorXd assemble_source(const SpacePtr& space, const VectorFunction& f);
Eigen::VectorXd assemble_source(const SpacePtr& space, const ScalarFunction& f);

/// Submatrix on the given row and column index lists (full → compact).
SparseMatrix restrict_matrix(const SparseMatrix& a, const std::vector<int>& rows,
                             const std::vector<int>& cols);

struct EigenOptions {
  double tolerance = 1e-8;
  int max_iterations = 5000;
};

/// Smallest λ of A x = λ G x by inverse iteration on the free DOFs, optionally
/// restricted to ker C (C given as rows × free columns in compact numbering).
/// A and G are compact (free × free). Throws Error on non-convergence.
double smallest_generalized_eigenvalue(const SparseMatrix& a, const SparseMatrix& g,
                                       const SparseMatrix* constraint = nullptr,
                                       const EigenOptions& opts = {});

/// Coercivity constant of a form over its constrained space, measured
/// against the H¹ Gram matrix. For a₁ the discrete divergence constraint
/// (velocity in ker D) is applied.
double estimate_coercivity(const AssembledOperator& form, const SpacePtr& space,
                           const SpacePtr& head = nullptr, const EigenOptions& opts = {});

enum class TrilinearForm { B, C };

/// max |form| / (‖·‖₁‖·‖₁‖·‖₁) over n_samples random smooth fields.
double estimate_continuity(TrilinearForm form, const SpacePtr& velocity,
                           const SpacePtr& temperature, int n_samples, Rng& rng);

/// ‖B(z)‖_{V*}, with the dual norm taken over the free velocity DOFs with the
/// H¹ Gram matrix.
double dual_norm_B(const DiscreteField& z, const SparseMatrix& h1_gram_free);

/// max ‖B(z)‖_{V*} / ‖z‖₁² over n_samples random smooth fields.
double estimate_cB(const SpacePtr& velocity, int n_samples, Rng& rng);

struct ConstantsReport {
  double c1_hat = 0.0;
  double c1p_hat = 0.0;
  double c2_hat = 0.0;
  double c3_hat = 0.0;
  double cB_hat = 0.0;
};

/// {"c1_hat":…, "c1p_hat":…, "c2_hat":…, "c3_hat":…, "cB_hat":…}
std::string to_json(const ConstantsReport& report);

}  // namespace bouss
