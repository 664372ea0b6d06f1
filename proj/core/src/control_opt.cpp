#include "bouss/control_opt.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <mutex>
#include <sstream>
#include <thread>

#include <Eigen/SparseCholesky>

#include "linear_algebra.hpp"

namespace bouss {

using detail::gather;
using detail::solve_checked;

std::vector<std::string> CostConfig::violations() const {
  std::vector<std::string> v;
  if (!(N1 >= 0.0) || !std::isfinite(N1)) v.push_back("N1 must be nonnegative and finite");
  if (!(N2 >= 0.0) || !std::isfinite(N2)) v.push_back("N2 must be nonnegative and finite");
  if (!r1) v.push_back("r1 is not set");
  if (!r2) v.push_back("r2 is not set");
  return v;
}

namespace {

void check_shape(const Discretization& disc, const Control& control, int n_steps) {
  if (control.n_steps != n_steps || control.n1 != disc.gamma1.size() ||
      control.n2 != disc.gamma2.size() || control.v1.size() != 2 * n_steps * control.n1 ||
      control.v2.size() != n_steps * control.n2)
    throw InvalidArgument("control shape does not match the problem");
}

// Per-step cost weights: J = Σₙ ℓₙ·zⁿ + Σₙ mₙ·v₂ⁿ.
struct CostWeights {
  std::vector<Eigen::VectorXd> ell;  // full velocity numbering, includes dt
  std::vector<Eigen::VectorXd> m2;   // Γ₂ trace numbering, includes time weight
};

CostWeights cost_weights(const ControlProblem& p, int n_steps) {
  const auto& disc = p.stepper.discretization();
  const auto& cfg = p.stepper.config();
  const double dt = cfg.dt;
  CostWeights w;
  for (int n = 1; n <= n_steps; ++n) {
    const double t = n * dt;
    Eigen::VectorXd ell = Eigen::VectorXd::Zero(disc.velocity->n_dofs());
    if (p.cost.N1 != 0.0)
      ell = (dt * p.cost.N1) *
            assemble_L1(disc.velocity, [&](const Vec2& x) { return p.cost.r1(x, t); });
    w.ell.push_back(std::move(ell));
    double weight = 0.0;
    if (p.cost.gamma2_time_integral) weight = dt;
    else if (n == n_steps) weight = 1.0;
    Eigen::VectorXd m = Eigen::VectorXd::Zero(disc.gamma2.size());
    if (p.cost.N2 != 0.0 && weight != 0.0)
      m = (-weight * p.cost.N2 / cfg.k) *
          trace_moments(*disc.temperature, disc.gamma2, [&](const Vec2& x) { return p.cost.r2(x, t); });
    w.m2.push_back(std::move(m));
  }
  return w;
}

double cost_from_weights(const CostWeights& w, const Trajectory& traj, const Control& control) {
  double J = 0.0;
  for (int n = 1; n <= control.n_steps; ++n) {
    J += w.ell[n - 1].dot(traj.states[n].z.coeffs());
    J += w.m2[n - 1].dot(control.v2_step(n - 1));
  }
  return J;
}

}  // namespace

double eval_cost(const ControlProblem& problem, const Trajectory& trajectory, const Control& control) {
  const auto& disc = problem.stepper.discretization();
  check_shape(disc, control, control.n_steps);
  if (static_cast<int>(trajectory.states.size()) != control.n_steps + 1)
    throw InvalidArgument("trajectory length does not match the control horizon");
  return cost_from_weights(cost_weights(problem, control.n_steps), trajectory, control);
}

Evaluation evaluate(const ControlProblem& problem, const Control& control) {
  check_shape(problem.stepper.discretization(), control, problem.stepper.config().n_steps());
  Evaluation e;
  e.trajectory = solve_transient(problem.stepper, problem.z0, problem.w0, control);
  e.J = eval_cost(problem, e.trajectory, control);
  return e;
}

std::vector<std::string> box_violations(const Box& box) {
  std::vector<std::string> v;
  if (!box.alpha.same_shape(box.beta)) {
    v.push_back("box bounds have different shapes");
    return v;
  }
  if ((box.alpha.v1.array() > box.beta.v1.array()).any()) v.push_back("alpha1 > beta1 somewhere");
  if ((box.alpha.v2.array() > box.beta.v2.array()).any()) v.push_back("alpha2 > beta2 somewhere");
  return v;
}

Control project_to_admissible(const Control& control, const Box& box) {
  if (!control.same_shape(box.alpha) || !control.same_shape(box.beta))
    throw InvalidArgument("project_to_admissible: control and box shapes differ");
  const auto v = box_violations(box);
  if (!v.empty()) throw InvalidArgument("project_to_admissible: " + v.front());
  Control out = control;
  out.v1 = control.v1.cwiseMax(box.alpha.v1).cwiseMin(box.beta.v1);
  out.v2 = control.v2.cwiseMax(box.alpha.v2).cwiseMin(box.beta.v2);
  return out;
}

bool is_feasible(const Control& control, const Box& box) {
  return (control.v1.array() >= box.alpha.v1.array()).all() &&
         (control.v1.array() <= box.beta.v1.array()).all() &&
         (control.v2.array() >= box.alpha.v2.array()).all() &&
         (control.v2.array() <= box.beta.v2.array()).all();
}

Control fd_gradient(const ControlProblem& problem, const Control& control, double h_fd,
                    unsigned threads) {
  if (!(h_fd > 0.0)) throw InvalidArgument("fd_gradient: h_fd must be positive");
  check_shape(problem.stepper.discretization(), control, problem.stepper.config().n_steps());
  const Eigen::VectorXd base = control.flat();
  const int n = control.size();
  Eigen::VectorXd grad(n);
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = std::min<unsigned>(threads, static_cast<unsigned>(std::max(n, 1)));
  std::atomic<int> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    Control c = control;
    for (int i = next++; i < n; i = next++) {
      try {
        Eigen::VectorXd x = base;
        x[i] = base[i] + h_fd;
        c.set_flat(x);
        const double jp = evaluate(problem, c).J;
        x[i] = base[i] - h_fd;
        c.set_flat(x);
        const double jm = evaluate(problem, c).J;
        grad[i] = (jp - jm) / (2.0 * h_fd);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next = n;
      }
    }
  };
  std::vector<std::thread> pool;
  for (unsigned t = 1; t < threads; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
  Control out = control;
  out.set_flat(grad);
  return out;
}

Control adjoint_gradient(const ControlProblem& problem, const Control& control) {
  const Evaluation e = evaluate(problem, control);
  return adjoint_gradient(problem, control, e.trajectory);
}

Control adjoint_gradient(const ControlProblem& problem, const Control& control,
                         const Trajectory& trajectory) {
  const Stepper& st = problem.stepper;
  const auto& disc = st.discretization();
  const int N = control.n_steps;
  check_shape(disc, control, N);
  if (static_cast<int>(trajectory.states.size()) != N + 1)
    throw InvalidArgument("adjoint_gradient: trajectory length does not match the control");
  const double inv_dt = 1.0 / st.config().dt;
  const CostWeights w = cost_weights(problem, N);
  const int nz = st.n_z(), np = st.n_p(), nw = st.n_w();
  const SparseMatrix l1 = restrict_matrix(disc.load1, st.z_free(), [&] {
    std::vector<int> all(static_cast<std::size_t>(disc.load1.cols()));
    for (std::size_t i = 0; i < all.size(); ++i) all[i] = static_cast<int>(i);
    return all;
  }());
  const SparseMatrix l2 = restrict_matrix(disc.load2, st.w_free(), [&] {
    std::vector<int> all(static_cast<std::size_t>(disc.load2.cols()));
    for (std::size_t i = 0; i < all.size(); ++i) all[i] = static_cast<int>(i);
    return all;
  }());

  Control grad = control;
  grad.v1.setZero();
  grad.v2.setZero();
  Eigen::VectorXd lz_next = Eigen::VectorXd::Zero(nz);
  Eigen::VectorXd lw_next = Eigen::VectorXd::Zero(nw);
  for (int n = N; n >= 1; --n) {
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(nz + np + nw);
    rhs.head(nz) = gather(w.ell[n - 1], st.z_free()) + inv_dt * (st.mass_z_free() * lz_next);
    if (st.config().temperature_enabled) rhs.tail(nw) = inv_dt * (st.mass_w_free() * lw_next);
    const SparseMatrix jt = SparseMatrix(st.jacobian(trajectory.states[n]).transpose());
    const Eigen::VectorXd lambda = solve_checked(jt, rhs, st.config().lin_tol, "adjoint step");
    lz_next = lambda.head(nz);
    lw_next = lambda.tail(nw);
    grad.v1.segment(2 * (n - 1) * grad.n1, 2 * grad.n1) = l1.transpose() * lz_next;
    Eigen::VectorXd g2 = w.m2[n - 1];
    if (st.config().temperature_enabled) g2 += l2.transpose() * lw_next;
    grad.v2.segment((n - 1) * grad.n2, grad.n2) = g2;
  }
  return grad;
}

double relative_l2_difference(const Control& a, const Control& b) {
  if (!a.same_shape(b)) throw InvalidArgument("relative_l2_difference: shapes differ");
  const double diff = (a.flat() - b.flat()).norm();
  const double ref = b.flat().norm();
  return ref > 0.0 ? diff / ref : diff;
}

UniformBoundRatios uniform_bound_ratios(const Stepper& stepper, const Trajectory& traj,
                                        const Control& control) {
  const auto& disc = stepper.discretization();
  const double dt = stepper.config().dt;
  const int N = control.n_steps;
  check_shape(disc, control, N);
  if (static_cast<int>(traj.states.size()) != N + 1)
    throw InvalidArgument("uniform_bound_ratios: trajectory length does not match the control");

  auto side = [&](const SpacePtr& space, const SparseMatrix& mass, auto field_of) {
    const auto& free = space->free_dofs();
    const SparseMatrix gram = assemble_h1_gram(space).matrix;
    Eigen::SimplicialLDLT<SparseMatrix> dual(restrict_matrix(gram, free, free));
    if (dual.info() != Eigen::Success) throw LinearSolveFailed("uniform bound: Gram factorization failed");
    double sup = 0.0, l2v = 0.0, l1dual = 0.0;
    for (int n = 0; n <= N; ++n) {
      const Eigen::VectorXd& c = field_of(traj.states[n]).coeffs();
      sup = std::max(sup, c.dot(mass * c));
      if (n == 0) continue;
      l2v += dt * c.dot(gram * c);
      const Eigen::VectorXd r =
          gather(mass * (c - field_of(traj.states[n - 1]).coeffs()), free) / dt;
      l1dual += dt * std::sqrt(std::max(r.dot(dual.solve(r)), 0.0));
    }
    const Eigen::VectorXd& c0 = field_of(traj.states[0]).coeffs();
    return std::pair{sup + l2v + l1dual * l1dual, c0.dot(mass * c0)};
  };

  const auto [lhs_z, z0] = side(disc.velocity, disc.mass_z, [](const State& s) -> const DiscreteField& { return s.z; });
  const auto [lhs_w, w0] = side(disc.temperature, disc.mass_w, [](const State& s) -> const DiscreteField& { return s.w; });

  const SparseMatrix m1 = trace_mass_matrix(*disc.velocity, disc.gamma1);
  const SparseMatrix m2 = trace_mass_matrix(*disc.temperature, disc.gamma2);
  double data1 = 0.0, data2 = 0.0;
  for (int s = 0; s < N; ++s) {
    for (int c = 0; c < 2; ++c) {
      Eigen::VectorXd comp(control.n1);
      for (int b = 0; b < control.n1; ++b) comp[b] = control.v1_at(s, b, c);
      data1 += dt * comp.dot(m1 * comp);
    }
    const Eigen::VectorXd v2 = control.v2_step(s);
    data2 += dt * v2.dot(m2 * v2);
  }
  auto ratio = [](double lhs, double rhs) {
    if (rhs > 0.0) return lhs / rhs;
    return lhs > 0.0 ? std::numeric_limits<double>::infinity() : 0.0;
  };
  return {ratio(lhs_z, z0 + data1), ratio(lhs_w, w0 + data2)};
}

UniformBoundReport uniform_bound_report(const std::vector<UniformBoundRatios>& runs) {
  UniformBoundReport r;
  r.runs = runs;
  for (const auto& x : runs) {
    r.max_z = std::max(r.max_z, x.z);
    r.max_w = std::max(r.max_w, x.w);
  }
  return r;
}

const char* to_string(OptimizerStatus status) {
  switch (status) {
    case OptimizerStatus::Converged: return "converged";
    case OptimizerStatus::MaxIterations: return "max_iterations";
    case OptimizerStatus::LineSearchFailed: return "line_search_failed";
  }
  return "?";
}

OptimizationResult projected_gradient_descent(const ControlProblem& problem, const Control& v_init,
                                              const Box& box, const OptimizerOptions& opt) {
  OptimizationResult res;
  Control v = project_to_admissible(v_init, box);
  Evaluation ev = evaluate(problem, v);
  Control g = adjoint_gradient(problem, v, ev.trajectory);
  const double width = std::max((box.beta.v1 - box.alpha.v1).lpNorm<Eigen::Infinity>(),
                                (box.beta.v2 - box.alpha.v2).lpNorm<Eigen::Infinity>());
  double last_step = 0.0;
  double used_step = 0.0;
  for (int iter = 0;; ++iter) {
    Control trial = v;
    trial.set_flat(v.flat() - g.flat());
    const double pg = (v.flat() - project_to_admissible(trial, box).flat()).norm();
    res.history.push_back({iter, ev.J, pg, used_step, is_feasible(v, box),
                           uniform_bound_ratios(problem.stepper, ev.trajectory, v)});
    if (pg <= opt.tol) {
      res.status = OptimizerStatus::Converged;
      break;
    }
    if (iter >= opt.max_iters) {
      res.status = OptimizerStatus::MaxIterations;
      break;
    }
    const double gmax = g.flat().lpNorm<Eigen::Infinity>();
    double s = last_step > 0.0 ? 2.0 * last_step : width / gmax;
    bool accepted = false;
    for (int bt = 0; bt <= opt.max_backtracks; ++bt, s *= opt.shrink) {
      Control cand = v;
      cand.set_flat(v.flat() - s * g.flat());
      cand = project_to_admissible(cand, box);
      const double d2 = (v.flat() - cand.flat()).squaredNorm();
      if (d2 == 0.0) continue;
      Evaluation ec;
      try {
        ec = evaluate(problem, cand);
      } catch (const SolveAborted&) {
        continue;
      }
      if (ec.J <= ev.J - opt.sigma * d2 / s) {
        v = std::move(cand);
        ev = std::move(ec);
        accepted = true;
        break;
      }
    }
    if (!accepted) {
      res.status = OptimizerStatus::LineSearchFailed;
      break;
    }
    g = adjoint_gradient(problem, v, ev.trajectory);
    last_step = s;
    used_step = s;
  }
  res.control = std::move(v);
  return res;
}

void write_optimization_csv(const std::vector<OptimizationRecord>& history,
                            const std::filesystem::path& file) {
  std::FILE* f = std::fopen(file.string().c_str(), "w");
  if (!f) throw Error("cannot write " + file.string());
  std::fputs("iter,J,pg_norm,step,feasible\n", f);
  for (const auto& r : history)
    std::fprintf(f, "%d,%.17g,%.17g,%.17g,%d\n", r.iter, r.J, r.pg_norm, r.step, r.feasible ? 1 : 0);
  std::fclose(f);
}

void write_control_csv(const Discretization& disc, const Control& control,
                       const std::filesystem::path& v1_file, const std::filesystem::path& v2_file) {
  check_shape(disc, control, control.n_steps);
  std::FILE* f = std::fopen(v1_file.string().c_str(), "w");
  if (!f) throw Error("cannot write " + v1_file.string());
  std::fputs("boundary_dof,step,v1x,v1y\n", f);
  for (int b = 0; b < control.n1; ++b)
    for (int s = 0; s < control.n_steps; ++s)
      std::fprintf(f, "%d,%d,%.17g,%.17g\n", disc.gamma1.scalar_dofs[b], s + 1, control.v1_at(s, b, 0),
                   control.v1_at(s, b, 1));
  std::fclose(f);
  f = std::fopen(v2_file.string().c_str(), "w");
  if (!f) throw Error("cannot write " + v2_file.string());
  std::fputs("boundary_dof,step,v2\n", f);
  for (int b = 0; b < control.n2; ++b)
    for (int s = 0; s < control.n_steps; ++s)
      std::fprintf(f, "%d,%d,%.17g\n", disc.gamma2.scalar_dofs[b], s + 1, control.v2_at(s, b));
  std::fclose(f);
}

namespace {

std::vector<std::vector<double>> read_rows(const std::filesystem::path& file, std::size_t cols) {
  std::ifstream in(file);
  if (!in) throw InvalidArgument("cannot read " + file.string());
  std::string line;
  std::getline(in, line);  // header
  std::vector<std::vector<double>> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::vector<double> row;
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      try {
        row.push_back(std::stod(cell));
      } catch (const std::exception&) {
        throw InvalidArgument(file.string() + ": malformed value '" + cell + "'");
      }
    }
    if (row.size() != cols) throw InvalidArgument(file.string() + ": wrong column count");
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace

Control read_control_csv(const Discretization& disc, int n_steps, const std::filesystem::path& v1_file,
                         const std::filesystem::path& v2_file) {
  Control c = disc.zero_control(n_steps);
  const auto r1 = read_rows(v1_file, 4);
  const auto r2 = read_rows(v2_file, 3);
  if (static_cast<int>(r1.size()) != c.n1 * n_steps || static_cast<int>(r2.size()) != c.n2 * n_steps)
    throw InvalidArgument("control files do not cover every boundary DOF and step");
  auto locate = [&](const BoundaryTrace& tr, double dof, double step) {
    const int b = tr.index_of(static_cast<int>(dof));
    const int s = static_cast<int>(step) - 1;
    if (b < 0 || s < 0 || s >= n_steps) throw InvalidArgument("control file entry out of range");
    return std::pair{b, s};
  };
  for (const auto& r : r1) {
    const auto [b, s] = locate(disc.gamma1, r[0], r[1]);
    c.v1_at(s, b, 0) = r[2];
    c.v1_at(s, b, 1) = r[3];
  }
  for (const auto& r : r2) {
    const auto [b, s] = locate(disc.gamma2, r[0], r[1]);
    c.v2_at(s, b) = r[2];
  }
  return c;
}

}  // namespace bouss
