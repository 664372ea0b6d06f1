#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "bouss/control.hpp"
#include "bouss/time_stepper.hpp"

namespace bouss {

/// J = N₁ ∫₀ᵀ∫_{Γ₁} (r₁·n)(z·n) ds dt + N₂ ∫₀ᵀ∫_{Γ₂} r₂ (−v₂/k) ds dt,
/// with the rectangle rule at t₁ … t_N. When gamma2_time_integral is false
/// the Γ₂ term is evaluated once, at the final time, without the time weight.
struct CostConfig {
  double N1 = 1.0;
  double N2 = 1.0;
  SpaceTimeVector r1 = [](const Vec2&, double) { return Vec2(1.0, 0.0); };
  SpaceTimeScalar r2 = [](const Vec2&, double) { return 1.0; };
  bool gamma2_time_integral = true;

  std::vector<std::string> violations() const;
};

/// State equation data and cost: everything J depends on besides the control.
struct ControlProblem {
  const Stepper& stepper;
  DiscreteField z0;
  DiscreteField w0;
  CostConfig cost;
};

struct Evaluation {
  double J = 0.0;
  Trajectory trajectory;
};

/// Solves the state equation and evaluates J. Throws SolveAborted.
Evaluation evaluate(const ControlProblem& problem, const Control& control);

/// J for a trajectory produced under `control`. Throws InvalidArgument on
/// a shape mismatch.
double eval_cost(const ControlProblem& problem, const Trajectory& trajectory, const Control& control);

/// Entrywise clamp to [α, β]. Throws InvalidArgument when α > β anywhere or
/// the shapes differ.
Control project_to_admissible(const Control& control, const Box& box);
bool is_feasible(const Control& control, const Box& box);
std::vector<std::string> box_violations(const Box& box);

/// Central differences (J(v + h eᵢ) − J(v − h eᵢ)) / 2h for every entry,
/// evaluated on `threads` worker threads (0: hardware concurrency).
Control fd_gradient(const ControlProblem& problem, const Control& control, double h_fd,
                    unsigned threads = 0);

/// Discrete adjoint of the backward-Euler/Picard-converged scheme.
Control adjoint_gradient(const ControlProblem& problem, const Control& control);
/// Same, reusing a trajectory already computed for `control`.
Control adjoint_gradient(const ControlProblem& problem, const Control& control,
                         const Trajectory& trajectory);

/// ‖a − b‖₂ / ‖b‖₂ over all entries (‖a − b‖₂ when b = 0).
double relative_l2_difference(const Control& a, const Control& b);

/// Left side over right side of the discrete analogs of the uniform bounds
///   ‖z‖²_{L∞(H)} + ‖z‖²_{L²(V)} + ‖dz/dt‖²_{L¹(V*)} ≤ c̃₁(|z₀|² + ‖v₁‖²_{L²(0,T;Γ₁)})
/// and the corresponding temperature bound with v₂ on Γ₂.
struct UniformBoundRatios {
  double z = 0.0;
  double w = 0.0;
};

UniformBoundRatios uniform_bound_ratios(const Stepper& stepper, const Trajectory& trajectory,
                                        const Control& control);

/// Regression constants frozen from the calibration run (8×8 mesh, default
/// physics, random admissible controls); see README.
inline constexpr UniformBoundRatios uniform_bound_calibration{4.0, 25.0};

struct UniformBoundReport {
  std::vector<UniformBoundRatios> runs;
  double max_z = 0.0;
  double max_w = 0.0;
  bool within(const UniformBoundRatios& limit) const { return max_z <= limit.z && max_w <= limit.w; }
};

UniformBoundReport uniform_bound_report(const std::vector<UniformBoundRatios>& runs);

struct OptimizerOptions {
  int max_iters = 50;
  double sigma = 1e-4;
  double shrink = 0.5;
  int max_backtracks = 40;
  double tol = 1e-8;
};

enum class OptimizerStatus { Converged, MaxIterations, LineSearchFailed };
const char* to_string(OptimizerStatus status);

struct OptimizationRecord {
  int iter = 0;
  double J = 0.0;
  double pg_norm = 0.0;  // ‖v − P(v − ∇J)‖₂
  double step = 0.0;     // step length that produced this iterate (0 for the first)
  bool feasible = true;
  UniformBoundRatios ratios;
};

struct OptimizationResult {
  Control control;
  std::vector<OptimizationRecord> history;
  OptimizerStatus status = OptimizerStatus::MaxIterations;
};

/// v ← P(v − s∇J) with Armijo backtracking
///   J(v⁺) ≤ J(v) − σ ‖v − v⁺‖² / s.
/// The first trial step is (max box width)/‖∇J‖∞, later ones twice the
/// previously accepted step. v_init is projected first.
OptimizationResult projected_gradient_descent(const ControlProblem& problem, const Control& v_init,
                                              const Box& box, const OptimizerOptions& opt = {});

/// iter,J,pg_norm,step,feasible
void write_optimization_csv(const std::vector<OptimizationRecord>& history,
                            const std::filesystem::path& file);
/// boundary_dof,step,v1x,v1y and boundary_dof,step,v2; boundary_dof is the
/// P2 scalar DOF of the trace point.
void write_control_csv(const Discretization& disc, const Control& control,
                       const std::filesystem::path& v1_file, const std::filesystem::path& v2_file);
/// Inverse of write_control_csv. Throws InvalidArgument on malformed input.
Control read_control_csv(const Discretization& disc, int n_steps, const std::filesystem::path& v1_file,
                         const std::filesystem::path& v2_file);

}  // namespace bouss
