#pragma once

#include <filesystem>
#include <functional>
#include <memory>
#include <vector>

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include "bouss/control.hpp"
#include "bouss/error.hpp"
#include "bouss/forms.hpp"
#include "bouss/mesh.hpp"
#include "bouss/spaces.hpp"

namespace bouss {

struct SolverConfig {
  double dt = 1.0 / 32.0;
  double T = 1.0;
  double nu = 1.0;
  double k = 1.0;
  double beta = 0.0;
  Vec2 g{0.0, -1.0};
  double picard_tol = 1e-10;
  int picard_max = 100;
  double lin_tol = 1e-10;
  /// When false the temperature block is skipped and w keeps its initial value.
  bool temperature_enabled = true;

  /// Every violated invariant, empty when valid.
  std::vector<std::string> violations() const;
  /// Throws ConfigError listing all violations.
  void validate() const;
  /// T/dt; validate() requires it to be an integer within rounding.
  int n_steps() const;
};

/// Mesh, spaces, boundary traces and the state-independent operators.
struct Discretization {
  std::shared_ptr<const Mesh> mesh;
  SpacePtr velocity;
  SpacePtr temperature;
  SpacePtr head;
  BoundaryTrace gamma1;  // over the velocity scalar DOFs
  BoundaryTrace gamma2;  // over the temperature DOFs

  SparseMatrix mass_z;
  SparseMatrix mass_w;
  SparseMatrix a1;
  SparseMatrix a2;
  SparseMatrix divergence;
  SparseMatrix buoyancy;  // β g coupling for the config it was built with
  SparseMatrix load1;     // load_matrix_L1
  SparseMatrix load2;     // load_matrix_L2

  Control zero_control(int n_steps) const { return {n_steps, gamma1.size(), gamma2.size()}; }
};

Discretization make_discretization(std::shared_ptr<const Mesh> mesh, const SolverConfig& cfg);

struct State {
  DiscreteField z;
  DiscreteField w;
  DiscreteField P;
  double t = 0.0;
};

/// Zero head and the given initial fields at t = 0.
State initial_state(const Discretization& disc, const DiscreteField& z0, const DiscreteField& w0);

/// Right-hand sides of one step in full DOF numbering: boundary loads
/// L₁(v₁) and L₂(v₂) plus any volumetric source.
struct StepLoads {
  Eigen::VectorXd fz;
  Eigen::VectorXd fw;
};

StepLoads control_loads(const Discretization& disc, const Control& control, int step);

/// One row per time level. Rates (dissipation, work) are evaluated at the
/// new level; residuals are those of the discrete energy identities
///   ½|z⁺|² − ½|z|² + ½|z⁺−z|² + dt·ν·a₁(z⁺,z⁺) + dt·β(g w⁺, z⁺) − dt·⟨f_z, z⁺⟩ = r_z
///   ½|w⁺|² − ½|w|² + ½|w⁺−w|² + dt·k·a₂(w⁺,w⁺) − dt·⟨f_w, w⁺⟩ = r_w
/// and scale_z, scale_w are the largest magnitudes among their terms.
struct EnergyRow {
  int step = 0;
  double t = 0.0;
  double kinetic = 0.0;
  double thermal = 0.0;
  double dissipation_z = 0.0;
  double dissipation_w = 0.0;
  double buoyancy_work = 0.0;
  double boundary_work_z = 0.0;
  double boundary_work_w = 0.0;
  double residual_z = 0.0;
  double residual_w = 0.0;
  double scale_z = 0.0;
  double scale_w = 0.0;
  double divergence_residual = 0.0;  // ‖D z‖₂
  int picard_iterations = 0;
};

using EnergyLog = std::vector<EnergyRow>;

/// step,t,kinetic,thermal,dissipation_z,dissipation_w,boundary_work_z,
/// boundary_work_w,residual_z,residual_w
void write_trajectory_csv(const EnergyLog& log, const std::filesystem::path& file);

struct StepResult {
  State state;
  EnergyRow row;
};

/// Backward-Euler step with Picard iteration on the advecting velocity.
/// Caches the constant blocks restricted to free DOFs. Holds a reference to
/// the Discretization, which must outlive it.
class Stepper {
 public:
  Stepper(const Discretization& disc, SolverConfig cfg);

  const Discretization& discretization() const noexcept { return disc_; }
  const SolverConfig& config() const noexcept { return cfg_; }

  /// Throws PicardDiverged or LinearSolveFailed.
  StepResult step(const State& state, const StepLoads& loads) const;

  /// Steady problem (no time derivative), Picard from z = 0.
  State solve_steady(const StepLoads& loads) const;

  /// Compact unknown layout [z free | P | w free].
  int n_z() const noexcept { return static_cast<int>(zfree_.size()); }
  int n_p() const noexcept { return static_cast<int>(pall_.size()); }
  int n_w() const noexcept { return static_cast<int>(wfree_.size()); }
  const std::vector<int>& z_free() const noexcept { return zfree_; }
  const std::vector<int>& w_free() const noexcept { return wfree_; }

  /// Jacobian of the converged step residual at the new level (compact
  /// layout, rows = residual equations, columns = unknowns).
  SparseMatrix jacobian(const State& next) const;

  /// Compact blocks used by the adjoint.
  const SparseMatrix& mass_z_free() const noexcept { return mz_; }
  const SparseMatrix& mass_w_free() const noexcept { return mw_; }

 private:
  State iterate(const State& state, const StepLoads& loads, double inv_dt, int& iterations) const;

  const Discretization& disc_;
  SolverConfig cfg_;
  std::vector<int> zfree_, wfree_, pall_;
  SparseMatrix mz_, mw_, az_, aw_, d_, g_;
};

struct Trajectory {
  std::vector<State> states;  // n_steps + 1 levels
  EnergyLog log;
};

/// Raised by solve_transient when a step fails; carries the levels computed
/// so far.
class SolveAborted : public Error {
 public:
  SolveAborted(const std::string& what, Trajectory partial, bool picard)
      : Error(what), partial_(std::move(partial)), picard_(picard) {}
  const Trajectory& partial() const noexcept { return partial_; }
  bool picard_diverged() const noexcept { return picard_; }

 private:
  Trajectory partial_;
  bool picard_;
};

Trajectory solve_transient(const Stepper& stepper, const DiscreteField& z0, const DiscreteField& w0,
                           const Control& control);

/// π = P − ½|z|² at the head (mesh-vertex) DOFs.
DiscreteField recover_static_pressure(const State& state);

/// Samples space–time boundary functions at the trace DOFs at t = (s+1)·dt.
using SpaceTimeVector = std::function<Vec2(const Vec2&, double)>;
using SpaceTimeScalar = std::function<double(const Vec2&, double)>;
Control sample_control(const Discretization& disc, int n_steps, double dt, const SpaceTimeVector& v1,
                       const SpaceTimeScalar& v2);

/// Writes z, w and P of a level as CSV files into dir with a step suffix.
void write_snapshot(const State& state, int step, const std::filesystem::path& dir);

struct ManufacturedLevel {
  int n = 0;
  double h = 0.0;
  double error_z = 0.0;  // L² errors against the exact fields
  double error_w = 0.0;
  double error_p = 0.0;
};

enum class ManufacturedCase {
  /// z = (y(1−y), 0), w = x(1−x), P = 1 + x − y: lies in the discrete spaces.
  Polynomial,
  /// z = (cos πx sin 2πy, sin πx sin² πy), w = eʸ sin πx, P = y cos πx.
  Smooth,
};

/// Steady manufactured solve on n×n meshes for each level in `levels`
/// (default tagging). cfg supplies ν, k, β, g and the solver tolerances.
/// `with_forcing = false` drops all sources and boundary data.
std::vector<ManufacturedLevel> manufactured_convergence(const SolverConfig& cfg,
                                                        const std::vector<int>& levels,
                                                        ManufacturedCase which,
                                                        bool with_forcing = true);

}  // namespace bouss
