#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "bouss/forms.hpp"
#include "bouss_cli/run_config.hpp"

namespace bouss::cli {

/// One property of the forms suite: pass iff value ≤ limit (or, for the
/// positivity checks, value > limit).
struct FormCheck {
  std::string name;
  double value = 0.0;
  double limit = 0.0;
  bool pass = false;
};

struct CoercivityLevel {
  int n = 0;
  double a1 = 0.0;
  double a2 = 0.0;
  double cB = 0.0;
};

struct FormsSuiteResult {
  std::vector<FormCheck> checks;
  std::vector<CoercivityLevel> levels;
  ConstantsReport constants;  // at the configured mesh
  bool pass() const;
};

/// Skew identities of b and c, matrix/evaluation consistency, coercivity of
/// a₁ and a₂ at every configured level and the B(z) bound between the last
/// two levels. Random fields come from Rng(cfg.seed).
FormsSuiteResult run_forms_suite(const RunConfig& cfg);

nlohmann::json to_json(const FormsSuiteResult& result);

}  // namespace bouss::cli
