#include "bouss/time_stepper.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>

#include <Eigen/SparseLU>

#include "linear_algebra.hpp"

namespace bouss {

using detail::gather;
using detail::solve_checked;

std::vector<std::string> SolverConfig::violations() const {
  std::vector<std::string> v;
  auto positive = [&](double x, const char* name) {
    if (!(x > 0.0) || !std::isfinite(x)) v.push_back(std::string(name) + " must be positive and finite");
  };
  positive(dt, "dt");
  positive(T, "T");
  positive(nu, "nu");
  positive(k, "k");
  positive(picard_tol, "picard_tol");
  positive(lin_tol, "lin_tol");
  if (!(beta >= 0.0) || !std::isfinite(beta)) v.push_back("beta must be nonnegative and finite");
  if (!g.allFinite()) v.push_back("g must be finite");
  if (picard_max < 1) v.push_back("picard_max must be at least 1");
  if (dt > 0.0 && T > 0.0 && std::isfinite(dt) && std::isfinite(T)) {
    const double ratio = T / dt;
    if (std::abs(ratio - std::round(ratio)) > 1e-9 * std::max(1.0, ratio) || std::round(ratio) < 1.0)
      v.push_back("T/dt must be a positive integer");
  }
  return v;
}

void SolverConfig::validate() const {
  auto v = violations();
  if (!v.empty()) throw ConfigError(std::move(v));
}

int SolverConfig::n_steps() const { return static_cast<int>(std::lround(T / dt)); }

Discretization make_discretization(std::shared_ptr<const Mesh> mesh, const SolverConfig& cfg) {
  if (!mesh->tagging().has(BoundaryTag::Gamma1))
    throw InvalidArgument("make_discretization: Γ₁ must be nonempty to determine the head");
  Discretization d;
  d.mesh = mesh;
  d.velocity = build_space(mesh, SpaceKind::Velocity);
  d.temperature = build_space(mesh, SpaceKind::Temperature);
  d.head = build_space(mesh, SpaceKind::Head);
  d.gamma1 = build_trace(*d.velocity, BoundaryTag::Gamma1);
  d.gamma2 = build_trace(*d.temperature, BoundaryTag::Gamma2);
  d.mass_z = assemble_mass(d.velocity).matrix;
  d.mass_w = assemble_mass(d.temperature).matrix;
  d.a1 = assemble_a1(d.velocity).matrix;
  d.a2 = assemble_a2(d.temperature).matrix;
  d.divergence = assemble_divergence(d.velocity, d.head).matrix;
  d.buoyancy = assemble_buoyancy(d.velocity, d.temperature, cfg.g, cfg.beta).matrix;
  d.load1 = load_matrix_L1(d.velocity, d.gamma1);
  d.load2 = load_matrix_L2(d.temperature, d.gamma2);
  return d;
}

State initial_state(const Discretization& disc, const DiscreteField& z0, const DiscreteField& w0) {
  if (z0.space_ptr() != disc.velocity || w0.space_ptr() != disc.temperature)
    throw InvalidArgument("initial_state: fields must live on the discretization's spaces");
  return {z0, w0, DiscreteField(disc.head), 0.0};
}

StepLoads control_loads(const Discretization& disc, const Control& control, int step) {
  if (control.n1 != disc.gamma1.size() || control.n2 != disc.gamma2.size())
    throw InvalidArgument("control shape does not match the boundary traces");
  return {disc.load1 * control.v1_step(step), disc.load2 * control.v2_step(step)};
}

void write_trajectory_csv(const EnergyLog& log, const std::filesystem::path& file) {
  std::FILE* f = std::fopen(file.string().c_str(), "w");
  if (!f) throw Error("cannot write " + file.string());
  std::fputs(
      "step,t,kinetic,thermal,dissipation_z,dissipation_w,boundary_work_z,boundary_work_w,"
      "residual_z,residual_w\n",
      f);
  for (const auto& r : log)
    std::fprintf(f, "%d,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n", r.step, r.t,
                 r.kinetic, r.thermal, r.dissipation_z, r.dissipation_w, r.boundary_work_z,
                 r.boundary_work_w, r.residual_z, r.residual_w);
  std::fclose(f);
}

Stepper::Stepper(const Discretization& disc, SolverConfig cfg) : disc_(disc), cfg_(std::move(cfg)) {
  cfg_.validate();
  zfree_ = disc.velocity->free_dofs();
  wfree_ = disc.temperature->free_dofs();
  pall_.resize(static_cast<std::size_t>(disc.head->n_dofs()));
  for (std::size_t i = 0; i < pall_.size(); ++i) pall_[i] = static_cast<int>(i);
  mz_ = restrict_matrix(disc.mass_z, zfree_, zfree_);
  mw_ = restrict_matrix(disc.mass_w, wfree_, wfree_);
  az_ = restrict_matrix(disc.a1, zfree_, zfree_);
  aw_ = restrict_matrix(disc.a2, wfree_, wfree_);
  d_ = restrict_matrix(disc.divergence, pall_, zfree_);
  g_ = restrict_matrix(disc.buoyancy, zfree_, wfree_);
}

State Stepper::iterate(const State& state, const StepLoads& loads, double inv_dt,
                       int& iterations) const {
  const auto& V = disc_.velocity;
  const auto& W = disc_.temperature;
  const Eigen::VectorXd z_old = gather(state.z.coeffs(), zfree_);
  const Eigen::VectorXd w_old = gather(state.w.coeffs(), wfree_);
  const Eigen::VectorXd rhs_z = inv_dt * (mz_ * z_old) + gather(loads.fz, zfree_);
  const Eigen::VectorXd rhs_w = inv_dt * (mw_ * w_old) + gather(loads.fw, wfree_);
  const SparseMatrix kz_const = inv_dt * mz_ + cfg_.nu * az_;
  const SparseMatrix kw_const = inv_dt * mw_ + cfg_.k * aw_;
  const int nz = n_z(), np = n_p();

  DiscreteField zk = state.z;
  Eigen::VectorXd zk_free = z_old;
  double change = 0.0;
  for (int it = 1; it <= cfg_.picard_max; ++it) {
    Eigen::VectorXd w_new = w_old;
    if (cfg_.temperature_enabled) {
      const SparseMatrix kw =
          kw_const + restrict_matrix(assemble_c_skew(zk, W).matrix, wfree_, wfree_);
      w_new = solve_checked(kw, rhs_w, cfg_.lin_tol, "temperature block");
    }
    const SparseMatrix kzz =
        kz_const + restrict_matrix(assemble_b_linearized(zk).matrix, zfree_, zfree_);
    detail::BlockBuilder k(nz + np, nz + np);
    k.add(kzz, 0, 0);
    k.add_transpose(d_, 0, nz);
    k.add(d_, nz, 0);
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(nz + np);
    rhs.head(nz) = rhs_z - g_ * w_new;
    const Eigen::VectorXd x = solve_checked(k.build(), rhs, cfg_.lin_tol, "velocity/head block");
    const Eigen::VectorXd diff = x.head(nz) - zk_free;
    change = std::sqrt(std::max(diff.dot(mz_ * diff), 0.0));
    zk_free = x.head(nz);
    zk = DiscreteField::from_free(V, zk_free);
    if (change <= cfg_.picard_tol) {
      iterations = it;
      Eigen::VectorXd p = x.tail(np);
      return {zk, DiscreteField::from_free(W, w_new), DiscreteField(disc_.head, std::move(p)),
              state.t};
    }
  }
  throw PicardDiverged(cfg_.picard_max, change);
}

StepResult Stepper::step(const State& state, const StepLoads& loads) const {
  const double dt = cfg_.dt;
  int iterations = 0;
  State next = iterate(state, loads, 1.0 / dt, iterations);
  next.t = state.t + dt;

  EnergyRow row;
  row.t = next.t;
  row.picard_iterations = iterations;
  const Eigen::VectorXd& z = state.z.coeffs();
  const Eigen::VectorXd& zp = next.z.coeffs();
  const Eigen::VectorXd& w = state.w.coeffs();
  const Eigen::VectorXd& wp = next.w.coeffs();
  const auto& M = disc_.mass_z;
  const auto& Mw = disc_.mass_w;

  const Eigen::VectorXd dz = zp - z;
  const double kin_old = 0.5 * z.dot(M * z);
  row.kinetic = 0.5 * zp.dot(M * zp);
  const double jump_z = 0.5 * dz.dot(M * dz);
  row.dissipation_z = cfg_.nu * zp.dot(disc_.a1 * zp);
  row.buoyancy_work = zp.dot(disc_.buoyancy * wp);
  row.boundary_work_z = loads.fz.dot(zp);
  row.residual_z = row.kinetic - kin_old + jump_z + dt * row.dissipation_z +
                   dt * row.buoyancy_work - dt * row.boundary_work_z;
  row.scale_z = std::max({std::abs(row.kinetic), std::abs(kin_old), std::abs(jump_z),
                          std::abs(dt * row.dissipation_z), std::abs(dt * row.buoyancy_work),
                          std::abs(dt * row.boundary_work_z)});

  row.thermal = 0.5 * wp.dot(Mw * wp);
  row.dissipation_w = cfg_.k * wp.dot(disc_.a2 * wp);
  row.boundary_work_w = loads.fw.dot(wp);
  if (cfg_.temperature_enabled) {
    const Eigen::VectorXd dw = wp - w;
    const double th_old = 0.5 * w.dot(Mw * w);
    const double jump_w = 0.5 * dw.dot(Mw * dw);
    row.residual_w = row.thermal - th_old + jump_w + dt * row.dissipation_w - dt * row.boundary_work_w;
    row.scale_w = std::max({std::abs(row.thermal), std::abs(th_old), std::abs(jump_w),
                            std::abs(dt * row.dissipation_w), std::abs(dt * row.boundary_work_w)});
  }
  row.divergence_residual = (disc_.divergence * zp).norm();
  return {std::move(next), row};
}

State Stepper::solve_steady(const StepLoads& loads) const {
  const State zero{DiscreteField(disc_.velocity), DiscreteField(disc_.temperature),
                   DiscreteField(disc_.head), 0.0};
  int iterations = 0;
  return iterate(zero, loads, 0.0, iterations);
}

SparseMatrix Stepper::jacobian(const State& next) const {
  const double inv_dt = 1.0 / cfg_.dt;
  const int nz = n_z(), np = n_p(), nw = n_w();
  detail::BlockBuilder k(nz + np + nw, nz + np + nw);
  const SparseMatrix kzz = inv_dt * mz_ + cfg_.nu * az_ +
                           restrict_matrix(assemble_b_linearized(next.z).matrix, zfree_, zfree_) +
                           restrict_matrix(assemble_b_derivative(next.z).matrix, zfree_, zfree_);
  k.add(kzz, 0, 0);
  k.add_transpose(d_, 0, nz);
  k.add(d_, nz, 0);
  if (cfg_.temperature_enabled) {
    k.add(g_, 0, nz + np);
    const auto& W = disc_.temperature;
    k.add(restrict_matrix(assemble_c_skew_derivative(next.w, disc_.velocity).matrix, wfree_, zfree_),
          nz + np, 0);
    const SparseMatrix kww = inv_dt * mw_ + cfg_.k * aw_ +
                             restrict_matrix(assemble_c_skew(next.z, W).matrix, wfree_, wfree_);
    k.add(kww, nz + np, nz + np);
  } else {
    k.add_identity(nz + np, nw);
  }
  return k.build();
}

Trajectory solve_transient(const Stepper& stepper, const DiscreteField& z0, const DiscreteField& w0,
                           const Control& control) {
  const auto& disc = stepper.discretization();
  const auto& cfg = stepper.config();
  if (control.n_steps != cfg.n_steps())
    throw InvalidArgument("control has " + std::to_string(control.n_steps) + " steps, horizon needs " +
                          std::to_string(cfg.n_steps()));
  Trajectory traj;
  traj.states.push_back(initial_state(disc, z0, w0));
  {
    const State& s0 = traj.states.front();
    EnergyRow row;
    row.kinetic = 0.5 * s0.z.coeffs().dot(disc.mass_z * s0.z.coeffs());
    row.thermal = 0.5 * s0.w.coeffs().dot(disc.mass_w * s0.w.coeffs());
    row.dissipation_z = cfg.nu * s0.z.coeffs().dot(disc.a1 * s0.z.coeffs());
    row.dissipation_w = cfg.k * s0.w.coeffs().dot(disc.a2 * s0.w.coeffs());
    row.buoyancy_work = s0.z.coeffs().dot(disc.buoyancy * s0.w.coeffs());
    row.divergence_residual = (disc.divergence * s0.z.coeffs()).norm();
    traj.log.push_back(row);
  }
  for (int s = 0; s < control.n_steps; ++s) {
    const StepLoads loads = control_loads(disc, control, s);
    try {
      StepResult r = stepper.step(traj.states.back(), loads);
      r.row.step = s + 1;
      r.row.t = cfg.dt * (s + 1);
      r.state.t = r.row.t;
      traj.states.push_back(std::move(r.state));
      traj.log.push_back(r.row);
    } catch (const PicardDiverged& e) {
      throw SolveAborted("step " + std::to_string(s + 1) + ": " + e.what(), std::move(traj), true);
    } catch (const LinearSolveFailed& e) {
      throw SolveAborted("step " + std::to_string(s + 1) + ": " + e.what(), std::move(traj), false);
    }
  }
  return traj;
}

DiscreteField recover_static_pressure(const State& state) {
  const auto& head = state.P.space_ptr();
  const FunctionSpace& V = state.z.space();
  Eigen::VectorXd pi = state.P.coeffs();
  const auto& c = state.z.coeffs();
  // P2 numbering puts mesh vertices first, matching the P1 head numbering.
  for (int i = 0; i < head->n_dofs(); ++i) {
    const double zx = c[V.component_dof(i, 0)];
    const double zy = c[V.component_dof(i, 1)];
    pi[i] -= 0.5 * (zx * zx + zy * zy);
  }
  return DiscreteField(head, std::move(pi));
}

Control sample_control(const Discretization& disc, int n_steps, double dt, const SpaceTimeVector& v1,
                       const SpaceTimeScalar& v2) {
  Control c = disc.zero_control(n_steps);
  for (int s = 0; s < n_steps; ++s) {
    const double t = dt * (s + 1);
    for (int b = 0; b < c.n1; ++b) {
      const Vec2 v = v1(disc.gamma1.points[b], t);
      c.v1_at(s, b, 0) = v.x();
      c.v1_at(s, b, 1) = v.y();
    }
    for (int b = 0; b < c.n2; ++b) c.v2_at(s, b) = v2(disc.gamma2.points[b], t);
  }
  return c;
}

void write_snapshot(const State& state, int step, const std::filesystem::path& dir) {
  char suffix[32];
  std::snprintf(suffix, sizeof suffix, "_%05d.csv", step);
  write_field_csv(state.z, dir / (std::string("z") + suffix));
  write_field_csv(state.w, dir / (std::string("w") + suffix));
  write_field_csv(state.P, dir / (std::string("P") + suffix));
}

namespace {

struct Manufactured {
  VectorFunction z, fz;
  ScalarFunction w, P, fw;
  BoundaryVectorData v1;  // P·n on Γ₁
  BoundaryScalarData v2;  // k ∂w/∂n on Γ₂
};

Vec2 boundary_normal(const Vec2& x) {
  if (x.x() <= 0.0) return {-1.0, 0.0};
  if (x.x() >= 1.0) return {1.0, 0.0};
  if (x.y() <= 0.0) return {0.0, -1.0};
  return {0.0, 1.0};
}

// Strong form matching the discrete operators (head enters with −∇P):
//   ν curl ω + ω(−z₂, z₁) + β g w − ∇P = f_z,   ω = ∂z₂/∂x − ∂z₁/∂y,
//   −k Δw + z·∇w = f_w.
Manufactured make_manufactured(ManufacturedCase which, const SolverConfig& cfg) {
  const double nu = cfg.nu, k = cfg.k, beta = cfg.beta;
  const Vec2 g = cfg.g;
  Manufactured m;
  if (which == ManufacturedCase::Polynomial) {
    m.z = [](const Vec2& x) { return Vec2(x.y() * (1.0 - x.y()), 0.0); };
    m.w = [](const Vec2& x) { return x.x() * (1.0 - x.x()); };
    m.P = [](const Vec2& x) { return 1.0 + x.x() - x.y(); };
    m.fz = [=](const Vec2& x) {
      const double w = x.x() * (1.0 - x.x());
      const double omega = 2.0 * x.y() - 1.0;
      const double z1 = x.y() * (1.0 - x.y());
      return Vec2(2.0 * nu + beta * g.x() * w - 1.0, omega * z1 + beta * g.y() * w + 1.0);
    };
    m.fw = [=](const Vec2& x) { return 2.0 * k + x.y() * (1.0 - x.y()) * (1.0 - 2.0 * x.x()); };
    m.v2 = [](const Vec2&) { return 0.0; };
  } else {
    using std::numbers::pi;
    m.z = [](const Vec2& x) {
      const double s = std::sin(pi * x.y());
      return Vec2(std::cos(pi * x.x()) * std::sin(2.0 * pi * x.y()), std::sin(pi * x.x()) * s * s);
    };
    m.w = [](const Vec2& x) { return std::exp(x.y()) * std::sin(pi * x.x()); };
    m.P = [](const Vec2& x) { return x.y() * std::cos(pi * x.x()); };
    m.fz = [=, z = m.z](const Vec2& x) {
      const double sx = std::sin(pi * x.x()), cx = std::cos(pi * x.x());
      const double sy = std::sin(pi * x.y());
      const double omega = pi * cx * (5.0 * sy * sy - 2.0);
      const Vec2 zz = z(x);
      const double w = std::exp(x.y()) * sx;
      const double curl0 = 5.0 * pi * pi * cx * std::sin(2.0 * pi * x.y());  // ∂ω/∂y
      const double curl1 = pi * pi * sx * (5.0 * sy * sy - 2.0);             // −∂ω/∂x
      return Vec2(nu * curl0 - omega * zz.y() + beta * g.x() * w + pi * x.y() * sx,
                  nu * curl1 + omega * zz.x() + beta * g.y() * w - cx);
    };
    m.fw = [=, z = m.z](const Vec2& x) {
      const double sx = std::sin(pi * x.x()), cx = std::cos(pi * x.x());
      const double e = std::exp(x.y());
      const Vec2 zz = z(x);
      return -k * e * sx * (1.0 - pi * pi) + zz.x() * pi * cx * e + zz.y() * e * sx;
    };
    m.v2 = [=](const Vec2& x) {
      const double dwdy = std::exp(x.y()) * std::sin(pi * x.x());
      return k * dwdy * boundary_normal(x).y();
    };
  }
  m.v1 = [P = m.P](const Vec2& x) { return Vec2(P(x) * boundary_normal(x)); };
  return m;
}

}  // namespace

std::vector<ManufacturedLevel> manufactured_convergence(const SolverConfig& cfg,
                                                        const std::vector<int>& levels,
                                                        ManufacturedCase which, bool with_forcing) {
  const Manufactured m = make_manufactured(which, cfg);
  std::vector<ManufacturedLevel> out;
  for (int n : levels) {
    auto mesh = std::make_shared<const Mesh>(build_unit_square_mesh(n, n));
    const Discretization disc = make_discretization(mesh, cfg);
    const Stepper stepper(disc, cfg);
    StepLoads loads{Eigen::VectorXd::Zero(disc.velocity->n_dofs()),
                    Eigen::VectorXd::Zero(disc.temperature->n_dofs())};
    if (with_forcing) {
      loads.fz = assemble_source(disc.velocity, m.fz) + assemble_L1(disc.velocity, m.v1);
      loads.fw = assemble_source(disc.temperature, m.fw) + assemble_L2(disc.temperature, m.v2);
    }
    const State s = stepper.solve_steady(loads);
    ManufacturedLevel lvl;
    lvl.n = n;
    lvl.h = mesh->h();
    if (with_forcing) {
      lvl.error_z = l2_error(s.z, m.z);
      lvl.error_w = l2_error(s.w, m.w);
      lvl.error_p = l2_error(s.P, m.P);
    } else {
      lvl.error_z = l2_norm(s.z);
      lvl.error_w = l2_norm(s.w);
      lvl.error_p = l2_norm(s.P);
    }
    out.push_back(lvl);
  }
  return out;
}

}  // namespace bouss
