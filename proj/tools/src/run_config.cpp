#include "bouss_cli/run_config.hpp"

#include <cmath>
#include <fstream>
#include <set>

#include "bouss/error.hpp"

namespace bouss::cli {

using nlohmann::json;

namespace {

const json& convection_preset() {
  static const json j = json::parse(R"({
    "schema_version": 1,
    "preset": "convection",
    "mesh": {"nx": 8, "ny": 8,
             "tagging": {"bottom": "Gamma2", "right": "Gamma1", "top": "Gamma2", "left": "Gamma1"}},
    "physics": {"nu": 0.1, "k": 0.1, "beta": 1.0, "g": [0.0, -1.0]},
    "time": {"dt": 0.03125, "T": 1.0},
    "initial": {"z0": {"type": "zero"}, "w0": {"type": "sine", "amplitude": 1.0}},
    "control": {
      "v1": {"type": "wave", "mean": [0.5, 0.5], "amplitude": 0.25, "frequency": 1.0},
      "v2": {"type": "constant", "value": 0.5},
      "box": {"alpha1": 0.1, "beta1": 1.0, "alpha2": 0.1, "beta2": 1.0}
    },
    "cost": {"N1": 1.0, "N2": 1.0, "r1": [1.0, 0.0], "r2": 1.0, "gamma2_time_integral": true},
    "solver": {"picard_tol": 1e-10, "picard_max": 100, "lin_tol": 1e-10},
    "optimizer": {"max_iters": 50, "sigma": 1e-4, "shrink": 0.5, "max_backtracks": 40, "tol": 1e-8},
    "grad_check": {"h_fd": 1e-5, "tolerance": 1e-5, "threads": 0},
    "check_forms": {"tolerance": 1e-13, "samples": 100, "levels": [4, 8, 16]},
    "output": {"directory": "out", "stride": 8},
    "seed": 12345
  })");
  return j;
}

// Keys whose objects are type-dependent field specs; their keys are checked
// per type instead of against the preset.
bool is_field_spec(const std::string& path) {
  return path == "initial.z0" || path == "initial.w0" || path == "control.v1" || path == "control.v2";
}

void collect_unknown(const json& doc, const json& base, const std::string& prefix,
                     std::vector<std::string>& out) {
  for (auto it = doc.begin(); it != doc.end(); ++it) {
    const std::string path = prefix.empty() ? it.key() : prefix + "." + it.key();
    if (path == "control.files") continue;
    if (!base.contains(it.key())) {
      out.push_back("unknown key '" + path + "'");
      continue;
    }
    if (is_field_spec(path)) continue;
    if (it->is_object() && base[it.key()].is_object()) collect_unknown(*it, base[it.key()], path, out);
  }
}

// Typed accessors that record violations instead of throwing.
class Reader {
 public:
  explicit Reader(const json& root) : root_(root) {}

  const json* find(const std::string& path) const {
    const json* node = &root_;
    std::size_t start = 0;
    while (start <= path.size()) {
      const auto dot = path.find('.', start);
      const std::string key = path.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
      if (!node->is_object() || !node->contains(key)) return nullptr;
      node = &(*node)[key];
      if (dot == std::string::npos) break;
      start = dot + 1;
    }
    return node;
  }

  double number(const std::string& path, double fallback) {
    const json* n = find(path);
    if (!n) return fallback;
    if (!n->is_number()) {
      violations.push_back(path + " must be a number");
      return fallback;
    }
    return n->get<double>();
  }

  long long integer(const std::string& path, long long fallback) {
    const json* n = find(path);
    if (!n) return fallback;
    if (!n->is_number_integer()) {
      violations.push_back(path + " must be an integer");
      return fallback;
    }
    return n->get<long long>();
  }

  bool boolean(const std::string& path, bool fallback) {
    const json* n = find(path);
    if (!n) return fallback;
    if (!n->is_boolean()) {
      violations.push_back(path + " must be true or false");
      return fallback;
    }
    return n->get<bool>();
  }

  std::string string(const std::string& path, const std::string& fallback) {
    const json* n = find(path);
    if (!n) return fallback;
    if (!n->is_string()) {
      violations.push_back(path + " must be a string");
      return fallback;
    }
    return n->get<std::string>();
  }

  std::vector<double> numbers(const std::string& path, std::size_t size, std::vector<double> fallback) {
    const json* n = find(path);
    if (!n) return fallback;
    if (!n->is_array() || (size != 0 && n->size() != size)) {
      violations.push_back(path + " must be an array of " + (size ? std::to_string(size) + " " : "") +
                           "numbers");
      return fallback;
    }
    std::vector<double> out;
    for (const auto& x : *n) {
      if (!x.is_number()) {
        violations.push_back(path + " must contain numbers only");
        return fallback;
      }
      out.push_back(x.get<double>());
    }
    return out;
  }

  std::vector<std::string> violations;

 private:
  const json& root_;
};

BoundaryTag parse_tag(Reader& r, const std::string& path, BoundaryTag fallback) {
  const std::string s = r.string(path, fallback == BoundaryTag::Gamma1 ? "Gamma1" : "Gamma2");
  if (s == "Gamma1") return BoundaryTag::Gamma1;
  if (s == "Gamma2") return BoundaryTag::Gamma2;
  r.violations.push_back(path + " must be \"Gamma1\" or \"Gamma2\"");
  return fallback;
}

FieldSpec parse_spec(Reader& r, const std::string& path, int components,
                     const std::set<std::string>& allowed_types) {
  FieldSpec spec;
  const json* node = r.find(path);
  if (!node || !node->is_object()) {
    r.violations.push_back(path + " must be an object with a \"type\"");
    return spec;
  }
  spec.type = r.string(path + ".type", "zero");
  if (!allowed_types.contains(spec.type)) {
    std::string names;
    for (const auto& t : allowed_types) names += (names.empty() ? "" : ", ") + t;
    r.violations.push_back(path + ".type must be one of: " + names);
    return spec;
  }
  std::set<std::string> keys{"type"};
  auto value_of = [&](const char* key) {
    keys.insert(key);
    if (components == 2) return r.numbers(path + "." + key, 2, {0.0, 0.0});
    return std::vector<double>{r.number(path + "." + key, 0.0)};
  };
  if (spec.type == "constant") {
    spec.value = value_of("value");
  } else if (spec.type == "wave") {
    spec.value = value_of("mean");
    keys.insert({"amplitude", "frequency"});
    spec.amplitude = r.number(path + ".amplitude", 0.0);
    spec.frequency = r.number(path + ".frequency", 1.0);
  } else if (spec.type == "sine" || spec.type == "vortex") {
    keys.insert("amplitude");
    spec.amplitude = r.number(path + ".amplitude", 1.0);
  } else if (spec.type == "random") {
    keys.insert({"low", "high"});
    spec.low = r.number(path + ".low", 0.0);
    spec.high = r.number(path + ".high", 1.0);
    if (!(spec.low <= spec.high)) r.violations.push_back(path + ": low must not exceed high");
  }
  for (auto it = node->begin(); it != node->end(); ++it)
    if (!keys.contains(it.key())) r.violations.push_back("unknown key '" + path + "." + it.key() + "'");
  return spec;
}

json field_spec_json(const FieldSpec& s, int components) {
  json j{{"type", s.type}};
  auto value = [&] {
    if (components == 2) return json(s.value.size() == 2 ? s.value : std::vector<double>{0.0, 0.0});
    return json(s.value.empty() ? 0.0 : s.value[0]);
  };
  if (s.type == "constant") j["value"] = value();
  if (s.type == "wave") {
    j["mean"] = value();
    j["amplitude"] = s.amplitude;
    j["frequency"] = s.frequency;
  }
  if (s.type == "sine" || s.type == "vortex") j["amplitude"] = s.amplitude;
  if (s.type == "random") {
    j["low"] = s.low;
    j["high"] = s.high;
  }
  return j;
}

}  // namespace

std::vector<std::string> preset_names() {
  return {"convection", "optimization", "calibration", "linear", "zero"};
}

json preset_json(const std::string& name) {
  json j = convection_preset();
  j["preset"] = name;
  if (name == "optimization") {
    j["time"]["T"] = 0.25;
  } else if (name == "calibration") {
    j["time"]["T"] = 0.125;
  } else if (name == "linear") {
    j["time"]["T"] = 0.25;
    j["cost"]["N1"] = 0.0;
  } else if (name == "zero") {
    j["physics"]["beta"] = 0.0;
    j["initial"]["w0"] = {{"type", "zero"}};
    j["control"]["v1"] = {{"type", "zero"}};
    j["control"]["v2"] = {{"type", "zero"}};
  } else if (name != "convection") {
    throw ConfigError({"preset must be one of: convection, optimization, calibration, linear, zero"});
  }
  return j;
}

RunConfig parse_config(const json& doc) {
  std::vector<std::string> early;
  if (!doc.is_object()) throw ConfigError({"configuration must be a JSON object"});
  if (!doc.contains("schema_version")) {
    early.push_back("schema_version is required");
  } else if (!doc["schema_version"].is_number_integer() || doc["schema_version"].get<int>() != schema_version) {
    early.push_back("schema_version must be " + std::to_string(schema_version));
  }
  std::string preset = "convection";
  if (doc.contains("preset")) {
    if (doc["preset"].is_string()) preset = doc["preset"].get<std::string>();
    else early.push_back("preset must be a string");
  }
  const auto names = preset_names();
  if (std::find(names.begin(), names.end(), preset) == names.end()) {
    early.push_back("preset must be one of: convection, optimization, calibration, linear, zero");
    preset = "convection";
  }
  json base = preset_json(preset);
  collect_unknown(doc, base, "", early);
  json merged = base;
  merged.merge_patch(doc);
  // merge_patch merges field specs key by key; a user spec replaces the preset's.
  for (const char* group : {"initial", "control"})
    if (doc.contains(group) && doc[group].is_object())
      for (auto it = doc[group].begin(); it != doc[group].end(); ++it)
        if (it->is_object() && it.key() != "box") merged[group][it.key()] = *it;

  Reader r(merged);
  r.violations = early;
  RunConfig c;
  c.preset = preset;
  const long long nx = r.integer("mesh.nx", 8), ny = r.integer("mesh.ny", 8);
  if (nx < 1 || nx > 512) r.violations.push_back("mesh.nx must be in [1, 512]");
  if (ny < 1 || ny > 512) r.violations.push_back("mesh.ny must be in [1, 512]");
  c.nx = static_cast<int>(std::clamp<long long>(nx, 1, 512));
  c.ny = static_cast<int>(std::clamp<long long>(ny, 1, 512));
  c.tagging.bottom = parse_tag(r, "mesh.tagging.bottom", BoundaryTag::Gamma2);
  c.tagging.right = parse_tag(r, "mesh.tagging.right", BoundaryTag::Gamma1);
  c.tagging.top = parse_tag(r, "mesh.tagging.top", BoundaryTag::Gamma2);
  c.tagging.left = parse_tag(r, "mesh.tagging.left", BoundaryTag::Gamma1);
  if (!c.tagging.has(BoundaryTag::Gamma2)) r.violations.push_back("mesh.tagging must assign at least one side to Gamma2");
  if (!c.tagging.has(BoundaryTag::Gamma1)) r.violations.push_back("mesh.tagging must assign at least one side to Gamma1");

  SolverConfig& s = c.solver;
  s.nu = r.number("physics.nu", s.nu);
  s.k = r.number("physics.k", s.k);
  s.beta = r.number("physics.beta", s.beta);
  const auto g = r.numbers("physics.g", 2, {0.0, -1.0});
  s.g = Vec2(g[0], g[1]);
  s.dt = r.number("time.dt", s.dt);
  s.T = r.number("time.T", s.T);
  s.picard_tol = r.number("solver.picard_tol", s.picard_tol);
  s.picard_max = static_cast<int>(r.integer("solver.picard_max", s.picard_max));
  s.lin_tol = r.number("solver.lin_tol", s.lin_tol);
  for (auto& v : s.violations()) r.violations.push_back("solver/physics/time: " + v);
  if (s.dt > 0.0 && s.T > 0.0 && s.T / s.dt > 100000.0) r.violations.push_back("time: more than 100000 steps");

  c.z0 = parse_spec(r, "initial.z0", 2, {"zero", "vortex"});
  c.w0 = parse_spec(r, "initial.w0", 1, {"zero", "sine"});
  c.v1 = parse_spec(r, "control.v1", 2, {"zero", "constant", "wave", "random"});
  c.v2 = parse_spec(r, "control.v2", 1, {"zero", "constant", "wave", "random"});
  if (const json* files = r.find("control.files")) {
    if (!files->is_object() || !files->contains("v1") || !files->contains("v2") ||
        !(*files)["v1"].is_string() || !(*files)["v2"].is_string() || files->size() != 2) {
      r.violations.push_back("control.files must be {\"v1\": path, \"v2\": path}");
    } else {
      c.control_files = std::array<std::filesystem::path, 2>{(*files)["v1"].get<std::string>(),
                                                             (*files)["v2"].get<std::string>()};
    }
  }
  c.alpha1 = r.number("control.box.alpha1", c.alpha1);
  c.beta1 = r.number("control.box.beta1", c.beta1);
  c.alpha2 = r.number("control.box.alpha2", c.alpha2);
  c.beta2 = r.number("control.box.beta2", c.beta2);
  if (!(c.alpha1 > 0.0)) r.violations.push_back("control.box.alpha1 must be positive");
  if (!(c.alpha2 > 0.0)) r.violations.push_back("control.box.alpha2 must be positive");
  if (!(c.alpha1 <= c.beta1)) r.violations.push_back("control.box: alpha1 > beta1");
  if (!(c.alpha2 <= c.beta2)) r.violations.push_back("control.box: alpha2 > beta2");

  c.N1 = r.number("cost.N1", c.N1);
  c.N2 = r.number("cost.N2", c.N2);
  const auto r1 = r.numbers("cost.r1", 2, {1.0, 0.0});
  c.r1 = Vec2(r1[0], r1[1]);
  c.r2 = r.number("cost.r2", c.r2);
  c.gamma2_time_integral = r.boolean("cost.gamma2_time_integral", true);
  if (!(c.N1 >= 0.0)) r.violations.push_back("cost.N1 must be nonnegative");
  if (!(c.N2 >= 0.0)) r.violations.push_back("cost.N2 must be nonnegative");

  auto& o = c.optimizer;
  o.max_iters = static_cast<int>(r.integer("optimizer.max_iters", o.max_iters));
  o.sigma = r.number("optimizer.sigma", o.sigma);
  o.shrink = r.number("optimizer.shrink", o.shrink);
  o.max_backtracks = static_cast<int>(r.integer("optimizer.max_backtracks", o.max_backtracks));
  o.tol = r.number("optimizer.tol", o.tol);
  if (o.max_iters < 0) r.violations.push_back("optimizer.max_iters must be nonnegative");
  if (!(o.sigma > 0.0 && o.sigma < 1.0)) r.violations.push_back("optimizer.sigma must be in (0, 1)");
  if (!(o.shrink > 0.0 && o.shrink < 1.0)) r.violations.push_back("optimizer.shrink must be in (0, 1)");
  if (o.max_backtracks < 0) r.violations.push_back("optimizer.max_backtracks must be nonnegative");
  if (!(o.tol >= 0.0)) r.violations.push_back("optimizer.tol must be nonnegative");

  c.h_fd = r.number("grad_check.h_fd", c.h_fd);
  c.grad_tolerance = r.number("grad_check.tolerance", c.grad_tolerance);
  const long long threads = r.integer("grad_check.threads", 0);
  if (!(c.h_fd > 0.0)) r.violations.push_back("grad_check.h_fd must be positive");
  if (!(c.grad_tolerance > 0.0)) r.violations.push_back("grad_check.tolerance must be positive");
  if (threads < 0 || threads > 1024) r.violations.push_back("grad_check.threads must be in [0, 1024]");
  c.fd_threads = static_cast<unsigned>(std::clamp<long long>(threads, 0, 1024));

  c.forms_tolerance = r.number("check_forms.tolerance", c.forms_tolerance);
  c.forms_samples = static_cast<int>(r.integer("check_forms.samples", c.forms_samples));
  if (!(c.forms_tolerance > 0.0)) r.violations.push_back("check_forms.tolerance must be positive");
  if (c.forms_samples < 1) r.violations.push_back("check_forms.samples must be at least 1");
  const auto levels = r.numbers("check_forms.levels", 0, {4, 8, 16});
  c.forms_levels.clear();
  for (double l : levels) {
    if (l < 1 || l > 128 || l != std::floor(l)) {
      r.violations.push_back("check_forms.levels must be integers in [1, 128]");
      break;
    }
    c.forms_levels.push_back(static_cast<int>(l));
  }
  if (c.forms_levels.empty()) r.violations.push_back("check_forms.levels must not be empty");

  c.output_directory = r.string("output.directory", "out");
  c.stride = static_cast<int>(r.integer("output.stride", 8));
  if (c.stride < 1) r.violations.push_back("output.stride must be at least 1");
  const json* seed = r.find("seed");
  if (seed && !seed->is_number_unsigned() && !(seed->is_number_integer() && seed->get<long long>() >= 0))
    r.violations.push_back("seed must be a nonnegative integer");
  else if (seed)
    c.seed = seed->get<std::uint64_t>();

  if (!r.violations.empty()) throw ConfigError(r.violations);
  return c;
}

RunConfig load_config(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw ConfigError({"cannot read config file " + file.string()});
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError({std::string("invalid JSON: ") + e.what()});
  }
  return parse_config(doc);
}

json to_json(const RunConfig& c) {
  auto tag = [](BoundaryTag t) { return t == BoundaryTag::Gamma1 ? "Gamma1" : "Gamma2"; };
  json j;
  j["schema_version"] = schema_version;
  j["preset"] = c.preset;
  j["mesh"] = {{"nx", c.nx},
               {"ny", c.ny},
               {"tagging",
                {{"bottom", tag(c.tagging.bottom)},
                 {"right", tag(c.tagging.right)},
                 {"top", tag(c.tagging.top)},
                 {"left", tag(c.tagging.left)}}}};
  const auto& s = c.solver;
  j["physics"] = {{"nu", s.nu}, {"k", s.k}, {"beta", s.beta}, {"g", {s.g.x(), s.g.y()}}};
  j["time"] = {{"dt", s.dt}, {"T", s.T}};
  j["initial"] = {{"z0", field_spec_json(c.z0, 2)}, {"w0", field_spec_json(c.w0, 1)}};
  j["control"] = {{"v1", field_spec_json(c.v1, 2)},
                  {"v2", field_spec_json(c.v2, 1)},
                  {"box", {{"alpha1", c.alpha1}, {"beta1", c.beta1}, {"alpha2", c.alpha2}, {"beta2", c.beta2}}}};
  if (c.control_files)
    j["control"]["files"] = {{"v1", (*c.control_files)[0].string()}, {"v2", (*c.control_files)[1].string()}};
  j["cost"] = {{"N1", c.N1},
               {"N2", c.N2},
               {"r1", {c.r1.x(), c.r1.y()}},
               {"r2", c.r2},
               {"gamma2_time_integral", c.gamma2_time_integral}};
  j["solver"] = {{"picard_tol", s.picard_tol}, {"picard_max", s.picard_max}, {"lin_tol", s.lin_tol}};
  const auto& o = c.optimizer;
  j["optimizer"] = {{"max_iters", o.max_iters},
                    {"sigma", o.sigma},
                    {"shrink", o.shrink},
                    {"max_backtracks", o.max_backtracks},
                    {"tol", o.tol}};
  j["grad_check"] = {{"h_fd", c.h_fd}, {"tolerance", c.grad_tolerance}, {"threads", c.fd_threads}};
  j["check_forms"] = {{"tolerance", c.forms_tolerance}, {"samples", c.forms_samples}, {"levels", c.forms_levels}};
  j["output"] = {{"directory", c.output_directory.string()}, {"stride", c.stride}};
  j["seed"] = c.seed;
  return j;
}

}  // namespace bouss::cli
