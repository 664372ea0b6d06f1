#pragma once

#include <filesystem>
#include <iosfwd>
#include <memory>

#include "bouss/control_opt.hpp"
#include "bouss/time_stepper.hpp"
#include "bouss_cli/run_config.hpp"

namespace bouss::cli {

enum ExitCode : int {
  exit_ok = 0,
  exit_config = 1,
  exit_nonconvergence = 2,
  exit_gradient = 3,
};

/// Everything a run needs, built from a validated RunConfig. Holds the
/// stepper by reference to its own discretization, so it is neither copied
/// nor moved.
class Setup {
 public:
  explicit Setup(const RunConfig& cfg);
  Setup(const Setup&) = delete;
  Setup& operator=(const Setup&) = delete;

  ControlProblem problem() const { return {stepper, z0, w0, cost}; }

  RunConfig config;
  Discretization disc;
  Stepper stepper;
  DiscreteField z0;
  DiscreteField w0;
  Control control;
  Box box;
  CostConfig cost;
};

/// Initial fields and controls from their specs (controls from CSV files
/// when configured). Random controls draw from Rng(cfg.seed).
DiscreteField make_initial_velocity(const Discretization& disc, const FieldSpec& spec);
DiscreteField make_initial_temperature(const Discretization& disc, const FieldSpec& spec);
Control make_control(const Discretization& disc, const RunConfig& cfg);

int cmd_mesh_info(const RunConfig& cfg, const std::filesystem::path& out, std::ostream& log);
int cmd_check_forms(const RunConfig& cfg, const std::filesystem::path& out, std::ostream& log);
int cmd_solve(const RunConfig& cfg, const std::filesystem::path& out, std::ostream& log);
int cmd_optimize(const RunConfig& cfg, const std::filesystem::path& out, std::ostream& log);
int cmd_grad_check(const RunConfig& cfg, const std::filesystem::path& out, std::ostream& log);

/// Full command line: `bouss <subcommand> [--config f] [--out dir] [--seed n]`.
int run_cli(int argc, const char* const* argv, std::ostream& log, std::ostream& err);

}  // namespace bouss::cli
