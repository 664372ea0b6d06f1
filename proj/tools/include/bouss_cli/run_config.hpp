#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "bouss/control_opt.hpp"
#include "bouss/time_stepper.hpp"

namespace bouss::cli {

inline constexpr int schema_version = 1;

/// A named analytic preset with its numeric parameters, e.g.
/// {"type": "wave", "mean": [0.5, 0.5], "amplitude": 0.25, "frequency": 1}.
struct FieldSpec {
  std::string type = "zero";
  std::vector<double> value;  // "constant": 1 or 2 entries; "wave": the mean
  double amplitude = 0.0;
  double frequency = 1.0;
  double low = 0.0;   // "random"
  double high = 1.0;  // "random"
};

struct RunConfig {
  std::string preset = "convection";
  int nx = 8;
  int ny = 8;
  SideTagging tagging;

  SolverConfig solver;  // physics, time and tolerances

  FieldSpec z0;
  FieldSpec w0{"sine", {}, 1.0};
  FieldSpec v1;
  FieldSpec v2;
  /// Both set: controls are read from CSV files in the control_v1/v2 format.
  std::optional<std::array<std::filesystem::path, 2>> control_files;
  double alpha1 = 0.1, beta1 = 1.0, alpha2 = 0.1, beta2 = 1.0;

  double N1 = 1.0, N2 = 1.0;
  Vec2 r1{1.0, 0.0};
  double r2 = 1.0;
  bool gamma2_time_integral = true;

  OptimizerOptions optimizer;
  double h_fd = 1e-5;
  double grad_tolerance = 1e-5;
  unsigned fd_threads = 0;

  double forms_tolerance = 1e-13;
  int forms_samples = 100;
  std::vector<int> forms_levels{4, 8, 16};

  std::filesystem::path output_directory = "out";
  int stride = 8;
  std::uint64_t seed = 12345;
};

/// Preset names accepted by the "preset" key.
std::vector<std::string> preset_names();

/// Base JSON document of a preset; the user document is merged over it.
nlohmann::json preset_json(const std::string& name);

/// Parses and validates. Throws ConfigError listing every violation found
/// (unknown keys, wrong types, out-of-range values, infeasible box).
RunConfig parse_config(const nlohmann::json& doc);
RunConfig load_config(const std::filesystem::path& file);

/// The effective configuration as JSON (written next to outputs).
nlohmann::json to_json(const RunConfig& cfg);

}  // namespace bouss::cli
