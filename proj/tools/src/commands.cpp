#include "bouss_cli/commands.hpp"

#include <cmath>
#include <fstream>
#include <numbers>
#include <ostream>

#include <CLI11.hpp>

#include "bouss/error.hpp"
#include "bouss/polynomial.hpp"
#include "bouss/random.hpp"
#include "bouss_cli/forms_suite.hpp"

namespace bouss::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr double pi = std::numbers::pi;

SolverConfig solver_of(const RunConfig& cfg) { return cfg.solver; }

std::shared_ptr<const Mesh> mesh_of(const RunConfig& cfg) {
  return std::make_shared<const Mesh>(build_unit_square_mesh(cfg.nx, cfg.ny, cfg.tagging));
}

CostConfig cost_of(const RunConfig& cfg) {
  CostConfig c;
  c.N1 = cfg.N1;
  c.N2 = cfg.N2;
  const Vec2 r1 = cfg.r1;
  const double r2 = cfg.r2;
  c.r1 = [r1](const Vec2&, double) { return r1; };
  c.r2 = [r2](const Vec2&, double) { return r2; };
  c.gamma2_time_integral = cfg.gamma2_time_integral;
  return c;
}

void write_text(const fs::path& file, const std::string& text) {
  std::ofstream out(file, std::ios::binary);
  if (!out) throw Error("cannot write " + file.string());
  out << text;
}

void write_json(const fs::path& file, const json& j) { write_text(file, j.dump(2) + "\n"); }

void prepare(const RunConfig& cfg, const fs::path& out) {
  fs::create_directories(out);
  write_json(out / "config.json", to_json(cfg));
}

double value_or(const std::vector<double>& v, std::size_t i) { return i < v.size() ? v[i] : 0.0; }

}  // namespace

DiscreteField make_initial_velocity(const Discretization& disc, const FieldSpec& spec) {
  if (spec.type == "vortex") {
    // ψ = 64 A x²(1−x)² y²(1−y)²
    const double a = 64.0 * spec.amplitude;
    const auto psi = Polynomial2::separable({0.0, 0.0, a, -2.0 * a, a}, {0.0, 0.0, 1.0, -2.0, 1.0});
    return interpolate(disc.velocity, AnalyticDivFreeField(psi));
  }
  return DiscreteField(disc.velocity);
}

DiscreteField make_initial_temperature(const Discretization& disc, const FieldSpec& spec) {
  if (spec.type == "sine") {
    const double a = spec.amplitude;
    return interpolate(disc.temperature,
                       ScalarFunction([a](const Vec2& p) { return a * std::sin(pi * p.x()) * std::sin(pi * p.y()); }));
  }
  return DiscreteField(disc.temperature);
}

Control make_control(const Discretization& disc, const RunConfig& cfg) {
  const int n = cfg.solver.n_steps();
  if (cfg.control_files) return read_control_csv(disc, n, (*cfg.control_files)[0], (*cfg.control_files)[1]);

  const FieldSpec s1 = cfg.v1, s2 = cfg.v2;
  SpaceTimeVector v1 = [](const Vec2&, double) { return Vec2(0.0, 0.0); };
  SpaceTimeScalar v2 = [](const Vec2&, double) { return 0.0; };
  if (s1.type == "constant") {
    const Vec2 c(value_or(s1.value, 0), value_or(s1.value, 1));
    v1 = [c](const Vec2&, double) { return c; };
  } else if (s1.type == "wave") {
    // mean + A sin(2π(f t + y)) in both components
    const Vec2 m(value_or(s1.value, 0), value_or(s1.value, 1));
    v1 = [m, s1](const Vec2& x, double t) {
      const double d = s1.amplitude * std::sin(2.0 * pi * (s1.frequency * t + x.y()));
      return Vec2(m.x() + d, m.y() + d);
    };
  }
  if (s2.type == "constant") {
    const double c = value_or(s2.value, 0);
    v2 = [c](const Vec2&, double) { return c; };
  } else if (s2.type == "wave") {
    // mean + A sin(2π(f t + x))
    const double m = value_or(s2.value, 0);
    v2 = [m, s2](const Vec2& x, double t) {
      return m + s2.amplitude * std::sin(2.0 * pi * (s2.frequency * t + x.x()));
    };
  }
  Control c = sample_control(disc, n, cfg.solver.dt, v1, v2);
  Rng rng(cfg.seed);
  if (s1.type == "random")
    for (auto& x : c.v1) x = rng.uniform(s1.low, s1.high);
  if (s2.type == "random")
    for (auto& x : c.v2) x = rng.uniform(s2.low, s2.high);
  return c;
}

Setup::Setup(const RunConfig& cfg)
    : config(cfg),
      disc(make_discretization(mesh_of(cfg), solver_of(cfg))),
      stepper(disc, cfg.solver),
      z0(make_initial_velocity(disc, cfg.z0)),
      w0(make_initial_temperature(disc, cfg.w0)),
      control(make_control(disc, cfg)),
      box(Box::uniform(control, cfg.alpha1, cfg.beta1, cfg.alpha2, cfg.beta2)),
      cost(cost_of(cfg)) {}

int cmd_mesh_info(const RunConfig& cfg, const fs::path& out, std::ostream& log) {
  prepare(cfg, out);
  const Setup s(cfg);
  const auto& m = *s.disc.mesh;
  write_mesh_csv(m, out / "mesh");
  json j{{"nx", m.nx()},
         {"ny", m.ny()},
         {"h", m.h()},
         {"nodes", m.n_nodes()},
         {"elements", m.n_elements()},
         {"boundary_edges", m.boundary_edges().size()},
         {"velocity_dofs", s.disc.velocity->n_dofs()},
         {"velocity_free", s.disc.velocity->n_free()},
         {"temperature_dofs", s.disc.temperature->n_dofs()},
         {"temperature_free", s.disc.temperature->n_free()},
         {"head_dofs", s.disc.head->n_dofs()},
         {"gamma1_trace_dofs", s.disc.gamma1.size()},
         {"gamma2_trace_dofs", s.disc.gamma2.size()},
         {"steps", cfg.solver.n_steps()},
         {"control_entries", s.control.size()}};
  write_json(out / "mesh_info.json", j);
  log << j.dump(2) << "\n";
  return exit_ok;
}

int cmd_check_forms(const RunConfig& cfg, const fs::path& out, std::ostream& log) {
  prepare(cfg, out);
  const auto result = run_forms_suite(cfg);
  write_json(out / "forms_report.json", to_json(result));
  write_text(out / "constants.json", bouss::to_json(result.constants) + "\n");
  for (const auto& c : result.checks)
    log << (c.pass ? "ok    " : "FAIL  ") << c.name << " value=" << c.value << " limit=" << c.limit << "\n";
  return result.pass() ? exit_ok : exit_config;
}

namespace {

void write_solution(const Trajectory& traj, int stride, const fs::path& out) {
  write_trajectory_csv(traj.log, out / "trajectory.csv");
  const fs::path snaps = out / "snapshots";
  fs::create_directories(snaps);
  const int last = static_cast<int>(traj.states.size()) - 1;
  for (int i = 0; i <= last; ++i)
    if (i % stride == 0 || i == last) write_snapshot(traj.states[static_cast<std::size_t>(i)], i, snaps);
}

json energy_summary(const EnergyLog& log) {
  double rz = 0.0, rw = 0.0, div = 0.0;
  int picard = 0;
  for (const auto& r : log) {
    if (r.scale_z > 0.0) rz = std::max(rz, std::abs(r.residual_z) / r.scale_z);
    if (r.scale_w > 0.0) rw = std::max(rw, std::abs(r.residual_w) / r.scale_w);
    div = std::max(div, r.divergence_residual);
    picard = std::max(picard, r.picard_iterations);
  }
  return {{"max_relative_residual_z", rz},
          {"max_relative_residual_w", rw},
          {"max_divergence_residual", div},
          {"max_picard_iterations", picard}};
}

}  // namespace

int cmd_solve(const RunConfig& cfg, const fs::path& out, std::ostream& log) {
  prepare(cfg, out);
  const Setup s(cfg);
  json summary{{"steps", cfg.solver.n_steps()}};
  try {
    const auto traj = solve_transient(s.stepper, s.z0, s.w0, s.control);
    write_solution(traj, cfg.stride, out);
    summary["status"] = "completed";
    summary["energy"] = energy_summary(traj.log);
    write_json(out / "summary.json", summary);
    log << "solved " << cfg.solver.n_steps() << " steps\n";
    return exit_ok;
  } catch (const SolveAborted& e) {
    write_solution(e.partial(), cfg.stride, out);
    summary["status"] = "aborted";
    summary["reason"] = e.what();
    summary["completed_steps"] = static_cast<int>(e.partial().states.size()) - 1;
    summary["energy"] = energy_summary(e.partial().log);
    write_json(out / "summary.json", summary);
    throw;
  }
}

int cmd_optimize(const RunConfig& cfg, const fs::path& out, std::ostream& log) {
  prepare(cfg, out);
  const Setup s(cfg);
  const auto result = projected_gradient_descent(s.problem(), s.control, s.box, cfg.optimizer);
  write_optimization_csv(result.history, out / "optimization.csv");
  write_control_csv(s.disc, result.control, out / "control_v1.csv", out / "control_v2.csv");
  const auto& last = result.history.back();
  json summary{{"status", to_string(result.status)},
               {"iterations", last.iter},
               {"J_initial", result.history.front().J},
               {"J_final", last.J},
               {"pg_norm", last.pg_norm},
               {"feasible", is_feasible(result.control, s.box)}};
  write_json(out / "summary.json", summary);
  log << "optimize: " << to_string(result.status) << " after " << last.iter << " iterations, J = " << last.J
      << "\n";
  return exit_ok;
}

int cmd_grad_check(const RunConfig& cfg, const fs::path& out, std::ostream& log) {
  prepare(cfg, out);
  const Setup s(cfg);
  const auto problem = s.problem();
  const auto adjoint = adjoint_gradient(problem, s.control);
  const auto fd = fd_gradient(problem, s.control, cfg.h_fd, cfg.fd_threads);
  const double rel = relative_l2_difference(adjoint, fd);
  const auto diff = (adjoint.flat() - fd.flat()).cwiseAbs();
  const bool pass = rel <= cfg.grad_tolerance;
  write_control_csv(s.disc, adjoint, out / "gradient_adjoint_v1.csv", out / "gradient_adjoint_v2.csv");
  write_control_csv(s.disc, fd, out / "gradient_fd_v1.csv", out / "gradient_fd_v2.csv");
  json report{{"entries", s.control.size()},
              {"h_fd", cfg.h_fd},
              {"relative_l2", rel},
              {"max_abs_difference", diff.size() ? diff.maxCoeff() : 0.0},
              {"adjoint_norm", adjoint.flat().norm()},
              {"fd_norm", fd.flat().norm()},
              {"tolerance", cfg.grad_tolerance},
              {"pass", pass}};
  write_json(out / "grad_check.json", report);
  log << "grad-check: relative L2 discrepancy " << rel << (pass ? " (pass)\n" : " (FAIL)\n");
  return pass ? exit_ok : exit_gradient;
}

int run_cli(int argc, const char* const* argv, std::ostream& log, std::ostream& err) {
  CLI::App app{"Boundary control of the non-stationary Boussinesq system"};
  app.require_subcommand(1);
  std::string config_file, out_dir;
  std::optional<std::uint64_t> seed;
  struct Entry {
    const char* name;
    const char* help;
    int (*fn)(const RunConfig&, const fs::path&, std::ostream&);
  };
  const Entry entries[] = {
      {"mesh-info", "Mesh and DOF counts, mesh CSV files", cmd_mesh_info},
      {"check-forms", "Form identity suite and constants report", cmd_check_forms},
      {"solve", "Transient solve: trajectory.csv and snapshots", cmd_solve},
      {"optimize", "Projected-gradient optimization of the controls", cmd_optimize},
      {"grad-check", "Adjoint versus finite-difference gradient", cmd_grad_check},
  };
  std::vector<CLI::App*> subs;
  for (const auto& e : entries) {
    auto* sub = app.add_subcommand(e.name, e.help);
    sub->add_option("--config", config_file, "JSON configuration file");
    sub->add_option("--out", out_dir, "Output directory (overrides output.directory)");
    sub->add_option("--seed", seed, "Seed for every random draw (overrides seed)");
    subs.push_back(sub);
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, log, err);
    return code == 0 ? exit_ok : exit_config;
  }

  try {
    RunConfig cfg = config_file.empty() ? parse_config(json{{"schema_version", schema_version}})
                                        : load_config(config_file);
    if (seed) cfg.seed = *seed;
    if (!out_dir.empty()) cfg.output_directory = out_dir;
    for (std::size_t i = 0; i < subs.size(); ++i)
      if (subs[i]->parsed()) return entries[i].fn(cfg, cfg.output_directory, log);
  } catch (const ConfigError& e) {
    err << "invalid configuration:\n";
    for (const auto& v : e.violations()) err << "  - " << v << "\n";
    return exit_config;
  } catch (const InvalidArgument& e) {
    err << "invalid input: " << e.what() << "\n";
    return exit_config;
  } catch (const SolveAborted& e) {
    err << "solver did not converge: " << e.what() << "\n";
    return exit_nonconvergence;
  } catch (const PicardDiverged& e) {
    err << "solver did not converge: " << e.what() << "\n";
    return exit_nonconvergence;
  } catch (const LinearSolveFailed& e) {
    err << "linear solve failed: " << e.what() << "\n";
    return exit_nonconvergence;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return exit_config;
  } catch (const std::filesystem::filesystem_error& e) {
    err << "error: " << e.what() << "\n";
    return exit_config;
  }
  return exit_config;
}

}  // namespace bouss::cli
