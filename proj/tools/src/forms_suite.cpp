#include "bouss_cli/forms_suite.hpp"

#include <algorithm>
#include <cmath>
#include <memory>

#include "bouss/mesh.hpp"
#include "bouss/polynomial.hpp"
#include "bouss/spaces.hpp"

namespace bouss::cli {

namespace {

// Quadrature degree high enough for the degree-7 analytic velocity against
// P2 temperature fields.
constexpr int analytic_degree = 12;

class MaxTracker {
 public:
  void add(double ratio) { worst_ = std::max(worst_, ratio); }
  double value() const { return worst_; }

 private:
  double worst_ = 0.0;
};

double ratio(double defect, double scale) { return scale > 0.0 ? std::abs(defect) / scale : std::abs(defect); }

AnalyticDivFreeField bubble_velocity() {
  // ψ = x²(1−x)² y²(1−y)²; z and its normal part vanish on ∂Ω.
  const auto q = std::vector<double>{0.0, 0.0, 1.0, -2.0, 1.0};
  return AnalyticDivFreeField(Polynomial2::separable(q, q));
}

}  // namespace

bool FormsSuiteResult::pass() const {
  return std::all_of(checks.begin(), checks.end(), [](const FormCheck& c) { return c.pass; });
}

FormsSuiteResult run_forms_suite(const RunConfig& cfg) {
  FormsSuiteResult out;
  Rng rng(cfg.seed);
  const double tol = cfg.forms_tolerance;
  const double c_tol = 100.0 * tol;

  auto mesh = std::make_shared<const Mesh>(build_unit_square_mesh(cfg.nx, cfg.ny, cfg.tagging));
  const auto V = build_space(mesh, SpaceKind::Velocity);
  const auto W = build_space(mesh, SpaceKind::Temperature);
  const auto H = build_space(mesh, SpaceKind::Head);
  const auto bubble = bubble_velocity();
  const double nz = h1_norm(interpolate(V, bubble));

  MaxTracker b_diag, b_anti, b_mat, c_diag, c_anti, c_mat;
  for (int s = 0; s < cfg.forms_samples; ++s) {
    const auto u = random_coefficients(V, rng);
    const auto v = random_coefficients(V, rng);
    const auto w = random_coefficients(V, rng);
    const double nu = h1_norm(u), nv = h1_norm(v), nw = h1_norm(w);
    b_diag.add(ratio(eval_b(u, v, v), nu * nv * nv));
    b_anti.add(ratio(eval_b(u, v, w) + eval_b(u, w, v), nu * nv * nw));
    const auto bz = assemble_b_linearized(u);
    b_mat.add(ratio(bz.apply(w.coeffs(), v.coeffs()) - eval_b(u, v, w), nu * nv * nw));

    const auto th = random_coefficients(W, rng);
    const auto phi = random_coefficients(W, rng);
    const double nth = h1_norm(th), nphi = h1_norm(phi);
    c_diag.add(ratio(eval_c(bubble, th, th, analytic_degree), nz * nth * nth));
    c_anti.add(ratio(eval_c(bubble, th, phi, analytic_degree) + eval_c(bubble, phi, th, analytic_degree),
                     nz * nth * nphi));
    const auto cz = assemble_c_linearized(u, W);
    c_mat.add(ratio(cz.apply(phi.coeffs(), th.coeffs()) - eval_c(u, th, phi), nu * nth * nphi));
  }
  auto at_most = [&](std::string name, double value, double limit) {
    out.checks.push_back({std::move(name), value, limit, value <= limit});
  };
  at_most("b_skew_diagonal", b_diag.value(), tol);
  at_most("b_antisymmetry", b_anti.value(), tol);
  at_most("b_matrix_consistency", b_mat.value(), tol);
  at_most("c_skew_diagonal", c_diag.value(), c_tol);
  at_most("c_antisymmetry", c_anti.value(), c_tol);
  at_most("c_matrix_consistency", c_mat.value(), c_tol);

  for (int n : cfg.forms_levels) {
    auto m = std::make_shared<const Mesh>(build_unit_square_mesh(n, n, cfg.tagging));
    const auto v = build_space(m, SpaceKind::Velocity);
    const auto t = build_space(m, SpaceKind::Temperature);
    const auto h = build_space(m, SpaceKind::Head);
    CoercivityLevel level;
    level.n = n;
    level.a1 = estimate_coercivity(assemble_a1(v), v, h);
    level.a2 = estimate_coercivity(assemble_a2(t), t);
    level.cB = estimate_cB(v, cfg.forms_samples, rng);
    out.levels.push_back(level);
    out.checks.push_back({"a1_coercive_n" + std::to_string(n), level.a1, 0.0, level.a1 > 0.0});
    out.checks.push_back({"a2_coercive_n" + std::to_string(n), level.a2, 0.0, level.a2 > 0.0});
  }
  if (out.levels.size() >= 2) {
    const double a = out.levels[out.levels.size() - 2].cB, b = out.levels.back().cB;
    const double factor = std::max(a, b) / std::min(a, b);
    at_most("cB_stability_factor", factor, 2.0);
  }
  const double cb = out.levels.back().cB;
  out.checks.push_back({"cB_finite", cb, 0.0, std::isfinite(cb) && cb > 0.0});

  auto& k = out.constants;
  k.c1_hat = estimate_coercivity(assemble_a1(V), V, H);
  k.c1p_hat = estimate_coercivity(assemble_a2(W), W);
  k.c2_hat = estimate_continuity(TrilinearForm::B, V, W, cfg.forms_samples, rng);
  k.c3_hat = estimate_continuity(TrilinearForm::C, V, W, cfg.forms_samples, rng);
  k.cB_hat = estimate_cB(V, cfg.forms_samples, rng);
  return out;
}

nlohmann::json to_json(const FormsSuiteResult& result) {
  nlohmann::json j;
  j["pass"] = result.pass();
  j["checks"] = nlohmann::json::array();
  for (const auto& c : result.checks)
    j["checks"].push_back({{"name", c.name}, {"value", c.value}, {"limit", c.limit}, {"pass", c.pass}});
  j["levels"] = nlohmann::json::array();
  for (const auto& l : result.levels)
    j["levels"].push_back({{"n", l.n}, {"a1", l.a1}, {"a2", l.a2}, {"cB", l.cB}});
  j["constants"] = nlohmann::json::parse(bouss::to_json(result.constants));
  return j;
}

}  // namespace bouss::cli
