#include "bouss/forms.hpp"

#include <cmath>
#include <limits>

#include <Eigen/SparseCholesky>
#include <Eigen/SparseLU>
#include <json.hpp>

#include "bouss/error.hpp"
#include "element_tabulation.hpp"

namespace bouss {

namespace {

using detail::ElementP2;
using detail::Tabulation;
using Triplet = Eigen::Triplet<double>;

// Collects entries, dropping any that touch a constrained row or column.
class TripletCollector {
 public:
  TripletCollector(const FunctionSpace& rows, const FunctionSpace& cols)
      : rows_(rows), cols_(cols) {}

  void add(int r, int c, double v) {
    if (rows_.is_constrained(r) || cols_.is_constrained(c)) return;
    entries_.emplace_back(r, c, v);
  }

  SparseMatrix build() const {
    SparseMatrix m(rows_.n_dofs(), cols_.n_dofs());
    m.setFromTriplets(entries_.begin(), entries_.end());
    return m;
  }

 private:
  const FunctionSpace& rows_;
  const FunctionSpace& cols_;
  std::vector<Triplet> entries_;
};

void require_kind(const FunctionSpace& s, SpaceKind kind, const char* what) {
  if (s.kind() != kind) throw InvalidArgument(std::string(what) + ": wrong space kind");
}

void require_same_mesh(const FunctionSpace& a, const FunctionSpace& b) {
  if (a.mesh_ptr() != b.mesh_ptr()) throw InvalidArgument("spaces live on different meshes");
}

// rot(φ e_c): c = 0 -> −∂φ/∂y, c = 1 -> ∂φ/∂x.
double rot_basis(const Vec2& grad, int c) { return c == 0 ? -grad.y() : grad.x(); }

}  // namespace

const char* to_string(OperatorKind kind) {
  switch (kind) {
    case OperatorKind::MassZ: return "mass_z";
    case OperatorKind::MassW: return "mass_w";
    case OperatorKind::MassHead: return "mass_head";
    case OperatorKind::A1: return "a1";
    case OperatorKind::A2: return "a2";
    case OperatorKind::H1Gram: return "h1_gram";
    case OperatorKind::Buoyancy: return "buoyancy";
    case OperatorKind::Divergence: return "divergence";
    case OperatorKind::BLinearized: return "b_linearized";
    case OperatorKind::BDerivative: return "b_derivative";
    case OperatorKind::CLinearized: return "c_linearized";
    case OperatorKind::CSkew: return "c_skew";
    case OperatorKind::CSkewDerivative: return "c_skew_derivative";
  }
  return "?";
}

AssembledOperator assemble_mass(const SpacePtr& space) {
  const FunctionSpace& s = *space;
  const Mesh& m = s.mesh();
  const Tabulation tab(volume_quadrature_degree);
  TripletCollector t(s, s);
  const int ns = s.n_scalar();
  const int nloc = s.dofs_per_element();
  for (int e = 0; e < m.n_elements(); ++e) {
    const double det = m.jacobian(e).determinant();
    const auto dofs = s.element_dofs(e);
    for (int i = 0; i < nloc; ++i) {
      for (int j = 0; j < nloc; ++j) {
        double v = 0.0;
        for (std::size_t q = 0; q < tab.rule.size(); ++q) {
          const double pi = nloc == 6 ? tab.p2[q][i] : tab.p1[q][i];
          const double pj = nloc == 6 ? tab.p2[q][j] : tab.p1[q][j];
          v += tab.rule.weights[q] * det * pi * pj;
        }
        for (int k = 0; k < s.n_components(); ++k) t.add(k * ns + dofs[i], k * ns + dofs[j], v);
      }
    }
  }
  const OperatorKind kind = s.kind() == SpaceKind::Velocity      ? OperatorKind::MassZ
                            : s.kind() == SpaceKind::Temperature ? OperatorKind::MassW
                                                                 : OperatorKind::MassHead;
  return {kind, t.build(), std::nullopt};
}

AssembledOperator assemble_a1(const SpacePtr& velocity, A1Form form) {
  const FunctionSpace& s = *velocity;
  require_kind(s, SpaceKind::Velocity, "assemble_a1");
  const Mesh& m = s.mesh();
  const Tabulation tab(volume_quadrature_degree);
  TripletCollector t(s, s);
  const int ns = s.n_scalar();
  for (int e = 0; e < m.n_elements(); ++e) {
    const ElementP2 el(m, e, tab);
    const auto dofs = s.element_dofs(e);
    for (int ci = 0; ci < 2; ++ci)
      for (int i = 0; i < fe::n_p2; ++i)
        for (int cj = 0; cj < 2; ++cj)
          for (int j = 0; j < fe::n_p2; ++j) {
            double v = 0.0;
            for (std::size_t q = 0; q < tab.rule.size(); ++q)
              v += el.jxw(tab, q) *
                   (rot_basis(el.grad[q][i], ci) * rot_basis(el.grad[q][j], cj) +
                    (form == A1Form::RotDiv ? el.grad[q][i][ci] * el.grad[q][j][cj] : 0.0));
            t.add(ci * ns + dofs[i], cj * ns + dofs[j], v);
          }
  }
  return {OperatorKind::A1, t.build(), std::nullopt};
}

AssembledOperator assemble_a2(const SpacePtr& temperature) {
  const FunctionSpace& s = *temperature;
  require_kind(s, SpaceKind::Temperature, "assemble_a2");
  const Mesh& m = s.mesh();
  const Tabulation tab(volume_quadrature_degree);
  TripletCollector t(s, s);
  for (int e = 0; e < m.n_elements(); ++e) {
    const ElementP2 el(m, e, tab);
    const auto dofs = s.element_dofs(e);
    for (int i = 0; i < fe::n_p2; ++i)
      for (int j = 0; j < fe::n_p2; ++j) {
        double v = 0.0;
        for (std::size_t q = 0; q < tab.rule.size(); ++q)
          v += el.jxw(tab, q) * el.grad[q][i].dot(el.grad[q][j]);
        t.add(dofs[i], dofs[j], v);
      }
  }
  return {OperatorKind::A2, t.build(), std::nullopt};
}

AssembledOperator assemble_h1_gram(const SpacePtr& space) {
  const FunctionSpace& s = *space;
  const Mesh& m = s.mesh();
  const Tabulation tab(volume_quadrature_degree);
  TripletCollector t(s, s);
  const int ns = s.n_scalar();
  const bool p2 = s.polynomial_degree() == 2;
  const int nloc = s.dofs_per_element();
  for (int e = 0; e < m.n_elements(); ++e) {
    const ElementP2 el(m, e, tab);
    const auto dofs = s.element_dofs(e);
    std::array<Vec2, 3> g1{};
    if (!p2) {
      const auto ref = fe::p1_reference_gradients();
      for (int i = 0; i < 3; ++i) g1[i] = el.geo.physical_gradient(ref[i]);
    }
    for (int i = 0; i < nloc; ++i)
      for (int j = 0; j < nloc; ++j) {
        double v = 0.0;
        for (std::size_t q = 0; q < tab.rule.size(); ++q) {
          const double val = p2 ? tab.p2[q][i] * tab.p2[q][j] : tab.p1[q][i] * tab.p1[q][j];
          const double grad = p2 ? el.grad[q][i].dot(el.grad[q][j]) : g1[i].dot(g1[j]);
          v += el.jxw(tab, q) * (val + grad);
        }
        for (int k = 0; k < s.n_components(); ++k) t.add(k * ns + dofs[i], k * ns + dofs[j], v);
      }
  }
  return {OperatorKind::H1Gram, t.build(), std::nullopt};
}

AssembledOperator assemble_divergence(const SpacePtr& velocity, const SpacePtr& head) {
  const FunctionSpace& v = *velocity;
  const FunctionSpace& h = *head;
  require_kind(v, SpaceKind::Velocity, "assemble_divergence");
  require_kind(h, SpaceKind::Head, "assemble_divergence");
  require_same_mesh(v, h);
  const Mesh& m = v.mesh();
  const Tabulation tab(volume_quadrature_degree);
  TripletCollector t(h, v);
  const int ns = v.n_scalar();
  for (int e = 0; e < m.n_elements(); ++e) {
    const ElementP2 el(m, e, tab);
    const auto vd = v.element_dofs(e);
    const auto hd = h.element_dofs(e);
    for (int a = 0; a < fe::n_p1; ++a)
      for (int c = 0; c < 2; ++c)
        for (int j = 0; j < fe::n_p2; ++j) {
          double val = 0.0;
          for (std::size_t q = 0; q < tab.rule.size(); ++q)
            val += el.jxw(tab, q) * tab.p1[q][a] * el.grad[q][j][c];
          t.add(hd[a], c * ns + vd[j], val);
        }
  }
  return {OperatorKind::Divergence, t.build(), std::nullopt};
}

AssembledOperator assemble_buoyancy(const SpacePtr& velocity, const SpacePtr& temperature,
                                    const Vec2& g, double beta) {
  const FunctionSpace& v = *velocity;
  const FunctionSpace& w = *temperature;
  require_kind(v, SpaceKind::Velocity, "assemble_buoyancy");
  require_kind(w, SpaceKind::Temperature, "assemble_buoyancy");
  require_same_mesh(v, w);
  const Mesh& m = v.mesh();
  const Tabulation tab(volume_quadrature_degree);
  TripletCollector t(v, w);
  const int ns = v.n_scalar();
  for (int e = 0; e < m.n_elements(); ++e) {
    const double det = m.jacobian(e).determinant();
    const auto vd = v.element_dofs(e);
    const auto wd = w.element_dofs(e);
    for (int i = 0; i < fe::n_p2; ++i)
      for (int j = 0; j < fe::n_p2; ++j) {
        double mass = 0.0;
        for (std::size_t q = 0; q < tab.rule.size(); ++q)
          mass += tab.rule.weights[q] * det * tab.p2[q][i] * tab.p2[q][j];
        for (int c = 0; c < 2; ++c) {
          const double val = beta * g[c] * mass;
          if (val != 0.0) t.add(c * ns + vd[i], wd[j], val);
        }
      }
  }
  return {OperatorKind::Buoyancy, t.build(), std::nullopt};
}

AssembledOperator assemble_b_linearized(const DiscreteField& z) {
  const FunctionSpace& s = z.space();
  require_kind(s, SpaceKind::Velocity, "assemble_b_linearized");
  const Mesh& m = s.mesh();
  const Tabulation tab(volume_quadrature_degree);
  TripletCollector t(s, s);
  const int ns = s.n_scalar();
  std::vector<double> omega(tab.rule.size());
  for (int e = 0; e < m.n_elements(); ++e) {
    const ElementP2 el(m, e, tab);
    const auto dofs = s.element_dofs(e);
    for (std::size_t q = 0; q < tab.rule.size(); ++q) {
      Vec2 val;
      Mat2 grad;
      detail::p2_sample(z, e, tab, el, q, val, grad);
      omega[q] = grad(1, 0) - grad(0, 1);
    }
    for (int i = 0; i < fe::n_p2; ++i)
      for (int j = 0; j < fe::n_p2; ++j) {
        double v = 0.0;
        for (std::size_t q = 0; q < tab.rule.size(); ++q)
          v += el.jxw(tab, q) * omega[q] * tab.p2[q][i] * tab.p2[q][j];
        // (ω × φⱼe₀)·φᵢe₁ = ω φⱼφᵢ, (ω × φⱼe₁)·φᵢe₀ = −ω φⱼφᵢ
        t.add(ns + dofs[i], dofs[j], v);
        t.add(dofs[i], ns + dofs[j], -v);
      }
  }
  return {OperatorKind::BLinearized, t.build(), z};
}

AssembledOperator assemble_b_derivative(const DiscreteField& v) {
  const FunctionSpace& s = v.space();
  require_kind(s, SpaceKind::Velocity, "assemble_b_derivative");
  const Mesh& m = s.mesh();
  const Tabulation tab(volume_quadrature_degree);
  TripletCollector t(s, s);
  const int ns = s.n_scalar();
  std::vector<Vec2> vq(tab.rule.size());
  for (int e = 0; e < m.n_elements(); ++e) {
    const ElementP2 el(m, e, tab);
    const auto dofs = s.element_dofs(e);
    for (std::size_t q = 0; q < tab.rule.size(); ++q) {
      Mat2 grad;
      detail::p2_sample(v, e, tab, el, q, vq[q], grad);
    }
    for (int ci = 0; ci < 2; ++ci)
      for (int i = 0; i < fe::n_p2; ++i)
        for (int cj = 0; cj < 2; ++cj)
          for (int j = 0; j < fe::n_p2; ++j) {
            double val = 0.0;
            for (std::size_t q = 0; q < tab.rule.size(); ++q) {
              // (v₁w₂ − v₂w₁) with w = φᵢ e_ci
              const double cross = ci == 0 ? -vq[q].y() * tab.p2[q][i] : vq[q].x() * tab.p2[q][i];
              val += el.jxw(tab, q) * rot_basis(el.grad[q][j], cj) * cross;
            }
            t.add(ci * ns + dofs[i], cj * ns + dofs[j], val);
          }
  }
  return {OperatorKind::BDerivative, t.build(), v};
}

namespace {

enum class CVariant { Plain, Skew };

AssembledOperator assemble_c_impl(const DiscreteField& z, const SpacePtr& temperature,
                                  CVariant variant) {
  const FunctionSpace& vs = z.space();
  const FunctionSpace& ts = *temperature;
  require_kind(vs, SpaceKind::Velocity, "assemble_c");
  require_kind(ts, SpaceKind::Temperature, "assemble_c");
  require_same_mesh(vs, ts);
  const Mesh& m = ts.mesh();
  const Tabulation tab(volume_quadrature_degree);
  TripletCollector t(ts, ts);
  std::vector<Vec2> zq(tab.rule.size());
  for (int e = 0; e < m.n_elements(); ++e) {
    const ElementP2 el(m, e, tab);
    const auto dofs = ts.element_dofs(e);
    for (std::size_t q = 0; q < tab.rule.size(); ++q) {
      Mat2 grad;
      detail::p2_sample(z, e, tab, el, q, zq[q], grad);
    }
    for (int i = 0; i < fe::n_p2; ++i)
      for (int j = 0; j < fe::n_p2; ++j) {
        double val = 0.0;
        for (std::size_t q = 0; q < tab.rule.size(); ++q) {
          const double forward = zq[q].dot(el.grad[q][j]) * tab.p2[q][i];
          if (variant == CVariant::Plain) {
            val += el.jxw(tab, q) * forward;
          } else {
            const double backward = zq[q].dot(el.grad[q][i]) * tab.p2[q][j];
            val += el.jxw(tab, q) * 0.5 * (forward - backward);
          }
        }
        t.add(dofs[i], dofs[j], val);
      }
  }
  return {variant == CVariant::Plain ? OperatorKind::CLinearized : OperatorKind::CSkew, t.build(),
          z};
}

}  // namespace

AssembledOperator assemble_c_linearized(const DiscreteField& z, const SpacePtr& temperature) {
  return assemble_c_impl(z, temperature, CVariant::Plain);
}

AssembledOperator assemble_c_skew(const DiscreteField& z, const SpacePtr& temperature) {
  return assemble_c_impl(z, temperature, CVariant::Skew);
}

AssembledOperator assemble_c_skew_derivative(const DiscreteField& w, const SpacePtr& velocity) {
  const FunctionSpace& ts = w.space();
  const FunctionSpace& vs = *velocity;
  require_kind(ts, SpaceKind::Temperature, "assemble_c_skew_derivative");
  require_kind(vs, SpaceKind::Velocity, "assemble_c_skew_derivative");
  require_same_mesh(vs, ts);
  const Mesh& m = ts.mesh();
  const Tabulation tab(volume_quadrature_degree);
  TripletCollector t(ts, vs);
  const int ns = vs.n_scalar();
  std::vector<double> wq(tab.rule.size());
  std::vector<Vec2> gwq(tab.rule.size());
  for (int e = 0; e < m.n_elements(); ++e) {
    const ElementP2 el(m, e, tab);
    const auto td = ts.element_dofs(e);
    const auto vd = vs.element_dofs(e);
    for (std::size_t q = 0; q < tab.rule.size(); ++q) {
      Vec2 val;
      Mat2 grad;
      detail::p2_sample(w, e, tab, el, q, val, grad);
      wq[q] = val[0];
      gwq[q] = grad.row(0).transpose();
    }
    for (int i = 0; i < fe::n_p2; ++i)
      for (int c = 0; c < 2; ++c)
        for (int j = 0; j < fe::n_p2; ++j) {
          double val = 0.0;
          for (std::size_t q = 0; q < tab.rule.size(); ++q) {
            const double pj = tab.p2[q][j];
            val += el.jxw(tab, q) * 0.5 *
                   (pj * gwq[q][c] * tab.p2[q][i] - pj * el.grad[q][i][c] * wq[q]);
          }
          t.add(td[i], c * ns + vd[j], val);
        }
  }
  return {OperatorKind::CSkewDerivative, t.build(), w};
}

namespace {

// Samples a vector argument at quadrature point q of element e.
struct Sampler {
  const Tabulation& tab;
  const ElementP2& el;
  int e;
  Vec2 x;  // physical point

  void vector(const VectorArg& a, Vec2& val, Mat2& grad, std::size_t q) const {
    if (const auto* f = std::get_if<const DiscreteField*>(&a.get())) {
      detail::p2_sample(**f, e, tab, el, q, val, grad);
    } else {
      const auto* p = std::get<const PolynomialVectorField*>(a.get());
      val = p->value(x);
      grad = p->gradient(x);
    }
  }

  void scalar(const ScalarArg& a, double& val, Vec2& grad, std::size_t q) const {
    if (const auto* f = std::get_if<const DiscreteField*>(&a.get())) {
      Vec2 v;
      Mat2 g;
      detail::p2_sample(**f, e, tab, el, q, v, g);
      val = v[0];
      grad = g.row(0).transpose();
    } else {
      const auto* p = std::get<const Polynomial2*>(a.get());
      val = (*p)(x);
      grad = Vec2(p->dx()(x), p->dy()(x));
    }
  }
};

const FunctionSpace* discrete_space(const VectorArg& a) {
  if (const auto* f = std::get_if<const DiscreteField*>(&a.get())) return &(*f)->space();
  return nullptr;
}

const FunctionSpace* discrete_space(const ScalarArg& a) {
  if (const auto* f = std::get_if<const DiscreteField*>(&a.get())) return &(*f)->space();
  return nullptr;
}

const Mesh& common_mesh(std::initializer_list<const FunctionSpace*> spaces) {
  const FunctionSpace* first = nullptr;
  for (const auto* s : spaces) {
    if (!s) continue;
    if (s->polynomial_degree() != 2)
      throw InvalidArgument("trilinear forms take P2 fields only");
    if (!first) first = s;
    else if (s->mesh_ptr() != first->mesh_ptr())
      throw InvalidArgument("trilinear form arguments live on different meshes");
  }
  if (!first) throw InvalidArgument("trilinear form needs at least one discrete argument");
  return first->mesh();
}

}  // namespace

double eval_b(VectorArg u, VectorArg v, VectorArg w, int degree) {
  const Mesh& m = common_mesh({discrete_space(u), discrete_space(v), discrete_space(w)});
  const Tabulation tab(degree);
  double total = 0.0;
  for (int e = 0; e < m.n_elements(); ++e) {
    const ElementP2 el(m, e, tab);
    for (std::size_t q = 0; q < tab.rule.size(); ++q) {
      const Sampler s{tab, el, e, el.geo.map(tab.rule.points[q][0], tab.rule.points[q][1])};
      Vec2 uv, vv, wv;
      Mat2 ug, vg, wg;
      s.vector(u, uv, ug, q);
      s.vector(v, vv, vg, q);
      s.vector(w, wv, wg, q);
      const double omega = ug(1, 0) - ug(0, 1);
      // v₁w₂ − v₂w₁ vanishes exactly in floating point when v = w.
      total += el.jxw(tab, q) * omega * (vv.x() * wv.y() - vv.y() * wv.x());
    }
  }
  return total;
}

double eval_c(VectorArg z, ScalarArg w, ScalarArg phi, int degree) {
  const Mesh& m = common_mesh({discrete_space(z), discrete_space(w), discrete_space(phi)});
  const Tabulation tab(degree);
  double total = 0.0;
  for (int e = 0; e < m.n_elements(); ++e) {
    const ElementP2 el(m, e, tab);
    for (std::size_t q = 0; q < tab.rule.size(); ++q) {
      const Sampler s{tab, el, e, el.geo.map(tab.rule.points[q][0], tab.rule.points[q][1])};
      Vec2 zv, wg, pg;
      Mat2 zg;
      double wv = 0.0, pv = 0.0;
      s.vector(z, zv, zg, q);
      s.scalar(w, wv, wg, q);
      s.scalar(phi, pv, pg, q);
      total += el.jxw(tab, q) * zv.dot(wg) * pv;
    }
  }
  return total;
}

namespace {

struct EdgePoint {
  Vec2 x;
  double jxw;  // weight × edge length
  std::array<double, 3> trace;
};

template <typename Fn>
void for_each_edge_point(const Mesh& m, int b, const EdgeQuadrature& rule, Fn&& fn) {
  const auto& be = m.boundary_edges()[b];
  const Vec2 a = m.nodes()[be.nodes[0]];
  const Vec2 d = m.nodes()[be.nodes[1]] - a;
  const double len = d.norm();
  for (std::size_t q = 0; q < rule.size(); ++q)
    fn(EdgePoint{a + rule.points[q] * d, rule.weights[q] * len, fe::p2_trace_values(rule.points[q])});
}

}  // namespace

Eigen::VectorXd assemble_L1(const SpacePtr& velocity, const BoundaryVectorData& v1) {
  const FunctionSpace& s = *velocity;
  require_kind(s, SpaceKind::Velocity, "assemble_L1");
  const Mesh& m = s.mesh();
  const auto rule = edge_quadrature(edge_quadrature_degree);
  Eigen::VectorXd load = Eigen::VectorXd::Zero(s.n_dofs());
  for (int b = 0; b < static_cast<int>(m.boundary_edges().size()); ++b) {
    const auto& be = m.boundary_edges()[b];
    if (be.tag != BoundaryTag::Gamma1) continue;
    const Vec2 n = outward_normal(be.side);
    const auto dofs = s.boundary_edge_dofs(b);
    for_each_edge_point(m, b, rule, [&](const EdgePoint& p) {
      const double vn = v1(p.x).dot(n);
      for (int k = 0; k < 3; ++k)
        for (int c = 0; c < 2; ++c) {
          const int dof = s.component_dof(dofs[k], c);
          if (!s.is_constrained(dof)) load[dof] += p.jxw * vn * p.trace[k] * n[c];
        }
    });
  }
  return load;
}

Eigen::VectorXd assemble_L2(const SpacePtr& temperature, const BoundaryScalarData& v2) {
  const FunctionSpace& s = *temperature;
  require_kind(s, SpaceKind::Temperature, "assemble_L2");
  const Mesh& m = s.mesh();
  const auto rule = edge_quadrature(edge_quadrature_degree);
  Eigen::VectorXd load = Eigen::VectorXd::Zero(s.n_dofs());
  for (int b = 0; b < static_cast<int>(m.boundary_edges().size()); ++b) {
    const auto& be = m.boundary_edges()[b];
    if (be.tag != BoundaryTag::Gamma2) continue;
    const auto dofs = s.boundary_edge_dofs(b);
    for_each_edge_point(m, b, rule, [&](const EdgePoint& p) {
      const double val = v2(p.x);
      for (int k = 0; k < 3; ++k)
        if (!s.is_constrained(dofs[k])) load[dofs[k]] += p.jxw * val * p.trace[k];
    });
  }
  return load;
}

SparseMatrix load_matrix_L1(const SpacePtr& velocity, const BoundaryTrace& gamma1) {
  const FunctionSpace& s = *velocity;
  require_kind(s, SpaceKind::Velocity, "load_matrix_L1");
  if (gamma1.tag != BoundaryTag::Gamma1) throw InvalidArgument("load_matrix_L1: Γ₁ trace required");
  const Mesh& m = s.mesh();
  const auto rule = edge_quadrature(edge_quadrature_degree);
  std::vector<Triplet> entries;
  for (int b : gamma1.edges) {
    const Vec2 n = outward_normal(m.boundary_edges()[b].side);
    const auto dofs = s.boundary_edge_dofs(b);
    std::array<int, 3> cols{};
    for (int k = 0; k < 3; ++k) cols[k] = gamma1.index_of(dofs[k]);
    for_each_edge_point(m, b, rule, [&](const EdgePoint& p) {
      for (int k = 0; k < 3; ++k)        // test
        for (int l = 0; l < 3; ++l)      // data
          for (int cr = 0; cr < 2; ++cr) // test component
            for (int cd = 0; cd < 2; ++cd) {
              const int row = s.component_dof(dofs[k], cr);
              const double val = p.jxw * p.trace[k] * p.trace[l] * n[cr] * n[cd];
              if (!s.is_constrained(row) && val != 0.0) entries.emplace_back(row, 2 * cols[l] + cd, val);
            }
    });
  }
  SparseMatrix mat(s.n_dofs(), 2 * gamma1.size());
  mat.setFromTriplets(entries.begin(), entries.end());
  return mat;
}

SparseMatrix load_matrix_L2(const SpacePtr& temperature, const BoundaryTrace& gamma2) {
  const FunctionSpace& s = *temperature;
  require_kind(s, SpaceKind::Temperature, "load_matrix_L2");
  if (gamma2.tag != BoundaryTag::Gamma2) throw InvalidArgument("load_matrix_L2: Γ₂ trace required");
  const Mesh& m = s.mesh();
  const auto rule = edge_quadrature(edge_quadrature_degree);
  std::vector<Triplet> entries;
  for (int b : gamma2.edges) {
    const auto dofs = s.boundary_edge_dofs(b);
    std::array<int, 3> cols{};
    for (int k = 0; k < 3; ++k) cols[k] = gamma2.index_of(dofs[k]);
    for_each_edge_point(m, b, rule, [&](const EdgePoint& p) {
      for (int k = 0; k < 3; ++k)
        for (int l = 0; l < 3; ++l)
          if (!s.is_constrained(dofs[k]))
            entries.emplace_back(dofs[k], cols[l], p.jxw * p.trace[k] * p.trace[l]);
    });
  }
  SparseMatrix mat(s.n_dofs(), gamma2.size());
  mat.setFromTriplets(entries.begin(), entries.end());
  return mat;
}

SparseMatrix trace_mass_matrix(const FunctionSpace& space, const BoundaryTrace& trace) {
  const Mesh& m = space.mesh();
  const auto rule = edge_quadrature(edge_quadrature_degree);
  std::vector<Triplet> entries;
  for (int b : trace.edges) {
    const auto dofs = space.boundary_edge_dofs(b);
    for_each_edge_point(m, b, rule, [&](const EdgePoint& p) {
      for (int k = 0; k < 3; ++k)
        for (int l = 0; l < 3; ++l)
          entries.emplace_back(trace.index_of(dofs[k]), trace.index_of(dofs[l]),
                               p.jxw * p.trace[k] * p.trace[l]);
    });
  }
  SparseMatrix mat(trace.size(), trace.size());
  mat.setFromTriplets(entries.begin(), entries.end());
  return mat;
}

Eigen::VectorXd trace_moments(const FunctionSpace& space, const BoundaryTrace& trace,
                              const BoundaryScalarData& f) {
  const Mesh& m = space.mesh();
  const auto rule = edge_quadrature(edge_quadrature_degree);
  Eigen::VectorXd out = Eigen::VectorXd::Zero(trace.size());
  for (int b : trace.edges) {
    const auto dofs = space.boundary_edge_dofs(b);
    for_each_edge_point(m, b, rule, [&](const EdgePoint& p) {
      const double val = f(p.x);
      for (int k = 0; k < 3; ++k) out[trace.index_of(dofs[k])] += p.jxw * val * p.trace[k];
    });
  }
  return out;
}

Eigen::VectorXd assemble_source(const SpacePtr& space, const VectorFunction& f) {
  const FunctionSpace& s = *space;
  require_kind(s, SpaceKind::Velocity, "assemble_source");
  const Mesh& m = s.mesh();
  const Tabulation tab(volume_quadrature_degree);
  const int ns = s.n_scalar();
  Eigen::VectorXd load = Eigen::VectorXd::Zero(s.n_dofs());
  for (int e = 0; e < m.n_elements(); ++e) {
    const fe::ElementGeometry geo(m, e);
    const auto dofs = s.element_dofs(e);
    for (std::size_t q = 0; q < tab.rule.size(); ++q) {
      const Vec2 fx = f(geo.map(tab.rule.points[q][0], tab.rule.points[q][1]));
      const double jw = tab.rule.weights[q] * geo.det;
      for (int i = 0; i < fe::n_p2; ++i)
        for (int c = 0; c < 2; ++c) load[c * ns + dofs[i]] += jw * fx[c] * tab.p2[q][i];
    }
  }
  for (const auto& c : s.constraints()) load[c.dof] = 0.0;
  return load;
}

Eigen::VectorXd assemble_source(const SpacePtr& space, const ScalarFunction& f) {
  const FunctionSpace& s = *space;
  require_kind(s, SpaceKind::Temperature, "assemble_source");
  const Mesh& m = s.mesh();
  const Tabulation tab(volume_quadrature_degree);
  Eigen::VectorXd load = Eigen::VectorXd::Zero(s.n_dofs());
  for (int e = 0; e < m.n_elements(); ++e) {
    const fe::ElementGeometry geo(m, e);
    const auto dofs = s.element_dofs(e);
    for (std::size_t q = 0; q < tab.rule.size(); ++q) {
      const double fx = f(geo.map(tab.rule.points[q][0], tab.rule.points[q][1]));
      const double jw = tab.rule.weights[q] * geo.det;
      for (int i = 0; i < fe::n_p2; ++i) load[dofs[i]] += jw * fx * tab.p2[q][i];
    }
  }
  for (const auto& c : s.constraints()) load[c.dof] = 0.0;
  return load;
}

SparseMatrix restrict_matrix(const SparseMatrix& a, const std::vector<int>& rows,
                             const std::vector<int>& cols) {
  std::vector<int> row_map(static_cast<std::size_t>(a.rows()), -1);
  std::vector<int> col_map(static_cast<std::size_t>(a.cols()), -1);
  for (std::size_t i = 0; i < rows.size(); ++i) row_map[rows[i]] = static_cast<int>(i);
  for (std::size_t j = 0; j < cols.size(); ++j) col_map[cols[j]] = static_cast<int>(j);
  std::vector<Triplet> entries;
  entries.reserve(static_cast<std::size_t>(a.nonZeros()));
  for (int k = 0; k < a.outerSize(); ++k)
    for (SparseMatrix::InnerIterator it(a, k); it; ++it) {
      const int r = row_map[it.row()];
      const int c = col_map[it.col()];
      if (r >= 0 && c >= 0) entries.emplace_back(r, c, it.value());
    }
  SparseMatrix out(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(cols.size()));
  out.setFromTriplets(entries.begin(), entries.end());
  return out;
}

double smallest_generalized_eigenvalue(const SparseMatrix& a, const SparseMatrix& g,
                                       const SparseMatrix* constraint, const EigenOptions& opts) {
  const Eigen::Index n = a.rows();
  const Eigen::Index mc = constraint ? constraint->rows() : 0;
  SparseMatrix k(n + mc, n + mc);
  {
    std::vector<Triplet> entries;
    for (int c = 0; c < a.outerSize(); ++c)
      for (SparseMatrix::InnerIterator it(a, c); it; ++it)
        entries.emplace_back(it.row(), it.col(), it.value());
    if (constraint) {
      for (int c = 0; c < constraint->outerSize(); ++c)
        for (SparseMatrix::InnerIterator it(*constraint, c); it; ++it) {
          entries.emplace_back(n + it.row(), it.col(), it.value());
          entries.emplace_back(it.col(), n + it.row(), it.value());
        }
    }
    k.setFromTriplets(entries.begin(), entries.end());
  }
  Eigen::SparseLU<SparseMatrix> lu;
  lu.analyzePattern(k);
  lu.factorize(k);
  if (lu.info() != Eigen::Success) throw LinearSolveFailed("eigenvalue estimate: factorization failed");

  Rng rng(0x5eedULL);
  Eigen::VectorXd x(n);
  for (Eigen::Index i = 0; i < n; ++i) x[i] = rng.uniform(0.5, 1.5);
  double lambda = std::numeric_limits<double>::infinity();
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n + mc);
  for (int it = 0; it < opts.max_iterations; ++it) {
    rhs.head(n) = g * x;
    const Eigen::VectorXd y = lu.solve(rhs);
    x = y.head(n);
    const double gnorm = std::sqrt(x.dot(g * x));
    if (!(gnorm > 0.0)) throw Error("eigenvalue estimate: iterate collapsed");
    x /= gnorm;
    const double next = x.dot(a * x);
    if (std::abs(next - lambda) <= opts.tolerance * std::abs(next)) return next;
    lambda = next;
  }
  throw Error("eigenvalue estimate: inverse iteration did not converge");
}

double estimate_coercivity(const AssembledOperator& form, const SpacePtr& space,
                           const SpacePtr& head, const EigenOptions& opts) {
  const auto& free = space->free_dofs();
  const SparseMatrix a = restrict_matrix(form.matrix, free, free);
  const SparseMatrix g = restrict_matrix(assemble_h1_gram(space).matrix, free, free);
  if (!head) return smallest_generalized_eigenvalue(a, g, nullptr, opts);
  std::vector<int> head_dofs(static_cast<std::size_t>(head->n_dofs()));
  for (int i = 0; i < head->n_dofs(); ++i) head_dofs[i] = i;
  const SparseMatrix d = restrict_matrix(assemble_divergence(space, head).matrix, head_dofs, free);
  return smallest_generalized_eigenvalue(a, g, &d, opts);
}

double estimate_continuity(TrilinearForm form, const SpacePtr& velocity,
                           const SpacePtr& temperature, int n_samples, Rng& rng) {
  double worst = 0.0;
  for (int s = 0; s < n_samples; ++s) {
    double ratio = 0.0;
    if (form == TrilinearForm::B) {
      const auto u = random_smooth_field(velocity, rng);
      const auto v = random_smooth_field(velocity, rng);
      const auto w = random_smooth_field(velocity, rng);
      const double denom = h1_norm(u) * h1_norm(v) * h1_norm(w);
      if (denom == 0.0) continue;
      ratio = std::abs(eval_b(u, v, w)) / denom;
    } else {
      const auto z = random_smooth_field(velocity, rng);
      const auto w = random_smooth_field(temperature, rng);
      const auto phi = random_smooth_field(temperature, rng);
      const double denom = h1_norm(z) * h1_norm(w) * h1_norm(phi);
      if (denom == 0.0) continue;
      ratio = std::abs(eval_c(z, w, phi)) / denom;
    }
    worst = std::max(worst, ratio);
  }
  return worst;
}

namespace {

double dual_norm_with(const DiscreteField& z, const Eigen::SimplicialLDLT<SparseMatrix>& gram) {
  const Eigen::VectorXd r_full = assemble_b_linearized(z).matrix * z.coeffs();
  const auto& free = z.space().free_dofs();
  Eigen::VectorXd r(static_cast<Eigen::Index>(free.size()));
  for (std::size_t i = 0; i < free.size(); ++i) r[static_cast<Eigen::Index>(i)] = r_full[free[i]];
  const Eigen::VectorXd y = gram.solve(r);
  return std::sqrt(std::max(r.dot(y), 0.0));
}

}  // namespace

double dual_norm_B(const DiscreteField& z, const SparseMatrix& h1_gram_free) {
  Eigen::SimplicialLDLT<SparseMatrix> gram(h1_gram_free);
  if (gram.info() != Eigen::Success) throw LinearSolveFailed("dual_norm_B: Gram factorization failed");
  return dual_norm_with(z, gram);
}

double estimate_cB(const SpacePtr& velocity, int n_samples, Rng& rng) {
  const auto& free = velocity->free_dofs();
  Eigen::SimplicialLDLT<SparseMatrix> gram(
      restrict_matrix(assemble_h1_gram(velocity).matrix, free, free));
  if (gram.info() != Eigen::Success) throw LinearSolveFailed("estimate_cB: Gram factorization failed");
  double worst = 0.0;
  for (int s = 0; s < n_samples; ++s) {
    const auto z = random_smooth_field(velocity, rng);
    const double nz = h1_norm(z);
    if (nz == 0.0) continue;
    worst = std::max(worst, dual_norm_with(z, gram) / (nz * nz));
  }
  return worst;
}

std::string to_json(const ConstantsReport& report) {
  nlohmann::ordered_json j;
  j["c1_hat"] = report.c1_hat;
  j["c1p_hat"] = report.c1p_hat;
  j["c2_hat"] = report.c2_hat;
  j["c3_hat"] = report.c3_hat;
  j["cB_hat"] = report.cB_hat;
  return j.dump(2);
}

}  // namespace bouss
