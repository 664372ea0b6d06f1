#include "bouss/spaces.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <unordered_map>

#include "bouss/error.hpp"
#include "bouss/fe.hpp"
#include "bouss/quadrature.hpp"

namespace bouss {

namespace {

constexpr int norm_quadrature_degree = 6;

int tangential_component(Side s) {
  return (s == Side::Bottom || s == Side::Top) ? 0 : 1;
}

}  // namespace

SpacePtr build_space(std::shared_ptr<const Mesh> mesh, SpaceKind kind, ConstraintMode mode) {
  if (!mesh) throw InvalidArgument("build_space: null mesh");
  auto space = std::make_shared<FunctionSpace>();
  space->kind_ = kind;
  space->mode_ = mode;
  space->mesh_ = mesh;
  const Mesh& m = *mesh;
  const int nn = m.n_nodes();
  const auto key = [nn](int a, int b) {
    return static_cast<long long>(std::min(a, b)) * nn + std::max(a, b);
  };

  space->dof_points_ = m.nodes();
  space->dof_sides_.resize(static_cast<std::size_t>(nn));
  for (int i = 0; i < nn; ++i) space->dof_sides_[i] = m.node_sides(i);

  if (space->polynomial_degree() == 1) {
    space->element_dofs_.reserve(static_cast<std::size_t>(3 * m.n_elements()));
    for (const auto& t : m.elements())
      space->element_dofs_.insert(space->element_dofs_.end(), t.begin(), t.end());
    for (const auto& be : m.boundary_edges())
      space->boundary_edge_dofs_.push_back({be.nodes[0], be.nodes[1], -1});
  } else {
    std::unordered_map<long long, int> edge_dof;
    space->element_dofs_.reserve(static_cast<std::size_t>(6 * m.n_elements()));
    for (const auto& t : m.elements()) {
      space->element_dofs_.insert(space->element_dofs_.end(), t.begin(), t.end());
      for (const auto& [a, b] : fe::p2_edge_vertices) {
        const auto [it, inserted] =
            edge_dof.try_emplace(key(t[a], t[b]), static_cast<int>(space->dof_points_.size()));
        if (inserted) {
          space->dof_points_.push_back(0.5 * (m.nodes()[t[a]] + m.nodes()[t[b]]));
          space->dof_sides_.emplace_back();
        }
        space->element_dofs_.push_back(it->second);
      }
    }
    for (const auto& be : m.boundary_edges()) {
      const int mid = edge_dof.at(key(be.nodes[0], be.nodes[1]));
      space->dof_sides_[mid] = {be.side};
      space->boundary_edge_dofs_.push_back({be.nodes[0], be.nodes[1], mid});
    }
  }

  const int ns = space->n_scalar();
  std::vector<char> fixed(static_cast<std::size_t>(space->n_dofs()), 0);
  if (mode == ConstraintMode::Essential && kind != SpaceKind::Head) {
    const SideTagging& tags = m.tagging();
    for (int d = 0; d < ns; ++d) {
      const auto& sides = space->dof_sides_[d];
      if (sides.empty()) continue;
      if (kind == SpaceKind::Temperature) {
        if (std::ranges::any_of(sides, [&](Side s) { return tags.of(s) == BoundaryTag::Gamma1; })) {
          fixed[d] = 1;
          space->constraints_.push_back({d, ConstraintType::Full, 0});
        }
        continue;
      }
      bool full = false;
      std::array<bool, 2> comp{false, false};
      for (Side s : sides) {
        if (tags.of(s) == BoundaryTag::Gamma2) {
          full = true;
          comp = {true, true};
        } else {
          comp[tangential_component(s)] = true;
        }
      }
      for (int c = 0; c < 2; ++c) {
        if (!comp[c]) continue;
        const int dof = c * ns + d;
        fixed[dof] = 1;
        space->constraints_.push_back(
            {dof, full ? ConstraintType::Full : ConstraintType::Tangential, c});
      }
    }
    std::ranges::sort(space->constraints_, {}, &ConstrainedDof::dof);
  }

  space->free_index_.assign(fixed.size(), -1);
  for (int d = 0; d < space->n_dofs(); ++d) {
    if (fixed[d]) continue;
    space->free_index_[d] = static_cast<int>(space->free_dofs_.size());
    space->free_dofs_.push_back(d);
  }
  return space;
}

DiscreteField::DiscreteField(SpacePtr space)
    : space_(std::move(space)), coeffs_(Eigen::VectorXd::Zero(space_->n_dofs())) {}

DiscreteField::DiscreteField(SpacePtr space, Eigen::VectorXd coeffs)
    : space_(std::move(space)), coeffs_(std::move(coeffs)) {
  if (coeffs_.size() != space_->n_dofs())
    throw InvalidArgument("DiscreteField: coefficient vector has wrong length");
  enforce_constraints();
}

DiscreteField DiscreteField::from_free(SpacePtr space, const Eigen::VectorXd& free_values) {
  if (free_values.size() != space->n_free())
    throw InvalidArgument("DiscreteField::from_free: wrong length");
  DiscreteField f(std::move(space));
  const auto& free = f.space().free_dofs();
  for (std::size_t i = 0; i < free.size(); ++i)
    f.coeffs_[free[i]] = free_values[static_cast<Eigen::Index>(i)];
  return f;
}

void DiscreteField::set_coeffs(Eigen::VectorXd coeffs) {
  if (coeffs.size() != space_->n_dofs())
    throw InvalidArgument("DiscreteField::set_coeffs: wrong length");
  coeffs_ = std::move(coeffs);
  enforce_constraints();
}

Eigen::VectorXd DiscreteField::free_values() const {
  const auto& free = space_->free_dofs();
  Eigen::VectorXd v(static_cast<Eigen::Index>(free.size()));
  for (std::size_t i = 0; i < free.size(); ++i) v[static_cast<Eigen::Index>(i)] = coeffs_[free[i]];
  return v;
}

DiscreteField& DiscreteField::operator+=(const DiscreteField& o) {
  if (o.space_ != space_) throw InvalidArgument("DiscreteField: space mismatch");
  coeffs_ += o.coeffs_;
  return *this;
}

DiscreteField& DiscreteField::operator*=(double s) {
  coeffs_ *= s;
  return *this;
}

void DiscreteField::enforce_constraints() {
  for (const auto& c : space_->constraints()) coeffs_[c.dof] = 0.0;
}

double DiscreteField::value(int e, double xi, double eta, int component) const {
  const auto dofs = space_->element_dofs(e);
  const int offset = component * space_->n_scalar();
  double v = 0.0;
  if (space_->polynomial_degree() == 2) {
    const auto phi = fe::p2_values(xi, eta);
    for (int i = 0; i < fe::n_p2; ++i) v += coeffs_[offset + dofs[i]] * phi[i];
  } else {
    const auto phi = fe::p1_values(xi, eta);
    for (int i = 0; i < fe::n_p1; ++i) v += coeffs_[offset + dofs[i]] * phi[i];
  }
  return v;
}

double DiscreteField::value_at(const Vec2& p, int component) const {
  const Mesh& m = space_->mesh();
  const int e = m.locate(p);
  const fe::ElementGeometry geo(m, e);
  const Vec2 ref = geo.jacobian.inverse() * (p - geo.origin);
  return value(e, ref.x(), ref.y(), component);
}

DiscreteField interpolate(SpacePtr space, const ScalarFunction& f) {
  if (space->n_components() != 1) throw InvalidArgument("interpolate: scalar function on vector space");
  Eigen::VectorXd c(space->n_dofs());
  for (int d = 0; d < space->n_scalar(); ++d) c[d] = f(space->dof_point(d));
  return DiscreteField(std::move(space), std::move(c));
}

DiscreteField interpolate(SpacePtr space, const VectorFunction& f) {
  if (space->n_components() != 2) throw InvalidArgument("interpolate: vector function on scalar space");
  const int ns = space->n_scalar();
  Eigen::VectorXd c(space->n_dofs());
  for (int d = 0; d < ns; ++d) {
    const Vec2 v = f(space->dof_point(d));
    c[d] = v.x();
    c[ns + d] = v.y();
  }
  return DiscreteField(std::move(space), std::move(c));
}

namespace {

// Accumulates ∫ over Ω of (value², |grad|², rot²) for a field.
struct NormParts {
  double l2 = 0.0;
  double grad = 0.0;
  double rot = 0.0;
};

NormParts norm_parts(const DiscreteField& field) {
  const FunctionSpace& s = field.space();
  const Mesh& m = s.mesh();
  const auto rule = triangle_quadrature(norm_quadrature_degree);
  const int nc = s.n_components();
  const int ns = s.n_scalar();
  const auto& c = field.coeffs();
  NormParts parts;
  for (int e = 0; e < m.n_elements(); ++e) {
    const fe::ElementGeometry geo(m, e);
    const auto dofs = s.element_dofs(e);
    for (std::size_t q = 0; q < rule.size(); ++q) {
      const double xi = rule.points[q][0], eta = rule.points[q][1];
      const double jw = rule.weights[q] * geo.det;
      std::array<double, 2> val{0.0, 0.0};
      std::array<Vec2, 2> grad{Vec2::Zero(), Vec2::Zero()};
      if (s.polynomial_degree() == 2) {
        const auto phi = fe::p2_values(xi, eta);
        const auto dphi = fe::p2_reference_gradients(xi, eta);
        for (int i = 0; i < fe::n_p2; ++i) {
          const Vec2 g = geo.physical_gradient(dphi[i]);
          for (int k = 0; k < nc; ++k) {
            const double ci = c[k * ns + dofs[i]];
            val[k] += ci * phi[i];
            grad[k] += ci * g;
          }
        }
      } else {
        const auto phi = fe::p1_values(xi, eta);
        const auto dphi = fe::p1_reference_gradients();
        for (int i = 0; i < fe::n_p1; ++i) {
          val[0] += c[dofs[i]] * phi[i];
          grad[0] += c[dofs[i]] * geo.physical_gradient(dphi[i]);
        }
      }
      for (int k = 0; k < nc; ++k) {
        parts.l2 += jw * val[k] * val[k];
        parts.grad += jw * grad[k].squaredNorm();
      }
      if (nc == 2) {
        const double rot = grad[1].x() - grad[0].y();
        parts.rot += jw * rot * rot;
      }
    }
  }
  return parts;
}

}  // namespace

double l2_norm(const DiscreteField& field) { return std::sqrt(norm_parts(field).l2); }

double h1_seminorm(const DiscreteField& field) { return std::sqrt(norm_parts(field).grad); }

double h1_norm(const DiscreteField& field) {
  const auto p = norm_parts(field);
  return std::sqrt(p.l2 + p.grad);
}

double rot_seminorm(const DiscreteField& field) {
  if (field.space().kind() != SpaceKind::Velocity)
    throw InvalidArgument("rot_seminorm: velocity field required");
  return std::sqrt(norm_parts(field).rot);
}

namespace {

template <typename Exact>
double l2_error_impl(const DiscreteField& field, Exact&& diff_sq) {
  const Mesh& m = field.space().mesh();
  const auto rule = triangle_quadrature(8);
  double total = 0.0;
  for (int e = 0; e < m.n_elements(); ++e) {
    const fe::ElementGeometry geo(m, e);
    for (std::size_t q = 0; q < rule.size(); ++q) {
      const double xi = rule.points[q][0], eta = rule.points[q][1];
      total += rule.weights[q] * geo.det * diff_sq(e, xi, eta, geo.map(xi, eta));
    }
  }
  return std::sqrt(total);
}

}  // namespace

double l2_error(const DiscreteField& field, const ScalarFunction& exact) {
  if (field.space().n_components() != 1) throw InvalidArgument("l2_error: scalar field required");
  return l2_error_impl(field, [&](int e, double xi, double eta, const Vec2& x) {
    const double d = field.value(e, xi, eta) - exact(x);
    return d * d;
  });
}

double l2_error(const DiscreteField& field, const VectorFunction& exact) {
  if (field.space().n_components() != 2) throw InvalidArgument("l2_error: vector field required");
  return l2_error_impl(field, [&](int e, double xi, double eta, const Vec2& x) {
    const Vec2 f = exact(x);
    const double d0 = field.value(e, xi, eta, 0) - f[0];
    const double d1 = field.value(e, xi, eta, 1) - f[1];
    return d0 * d0 + d1 * d1;
  });
}

DiscreteField random_coefficients(SpacePtr space, Rng& rng) {
  Eigen::VectorXd v(space->n_free());
  for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = rng.uniform(-1.0, 1.0);
  return DiscreteField::from_free(std::move(space), v);
}

DiscreteField random_smooth_field(SpacePtr space, Rng& rng) {
  using std::numbers::pi;
  switch (space->kind()) {
    case SpaceKind::Velocity: {
      // ψ = Σ a_mn cos(mπx) gₙ(y), gₙ = y²(1−y)²(2y−1)ⁿ
      std::array<std::array<double, 3>, 4> a{};
      for (auto& row : a)
        for (double& v : row) v = rng.uniform(-1.0, 1.0);
      const auto f = [a](const Vec2& p) {
        const double x = p.x(), y = p.y();
        const double b = y * y * (1 - y) * (1 - y);
        const double db = 2 * y * (1 - y) * (1 - 2 * y);
        Vec2 z = Vec2::Zero();
        for (int mm = 0; mm < 4; ++mm) {
          for (int n = 0; n < 3; ++n) {
            const double s = std::pow(2 * y - 1, n);
            const double ds = n == 0 ? 0.0 : 2.0 * n * std::pow(2 * y - 1, n - 1);
            const double amp = a[mm][n] / (1.0 + mm + n);
            z.x() += amp * std::cos(mm * pi * x) * (db * s + b * ds);
            z.y() += amp * mm * pi * std::sin(mm * pi * x) * b * s;
          }
        }
        return z;
      };
      return interpolate(std::move(space), VectorFunction(f));
    }
    case SpaceKind::Temperature: {
      std::array<std::array<double, 3>, 3> a{};
      for (auto& row : a)
        for (double& v : row) v = rng.uniform(-1.0, 1.0);
      const auto f = [a](const Vec2& p) {
        double w = 0.0;
        for (int mm = 1; mm <= 3; ++mm)
          for (int n = 0; n < 3; ++n)
            w += a[mm - 1][n] / (mm + n) * std::sin(mm * pi * p.x()) * std::cos(n * pi * p.y());
        return w;
      };
      return interpolate(std::move(space), ScalarFunction(f));
    }
    case SpaceKind::Head: {
      std::array<double, 4> a{};
      for (double& v : a) v = rng.uniform(-1.0, 1.0);
      return interpolate(std::move(space), ScalarFunction([a](const Vec2& p) {
                           return a[0] + a[1] * p.x() + a[2] * p.y() + a[3] * p.x() * p.y();
                         }));
    }
  }
  return DiscreteField(std::move(space));
}

int BoundaryTrace::index_of(int scalar_dof) const {
  const auto it = std::ranges::lower_bound(scalar_dofs, scalar_dof);
  if (it == scalar_dofs.end() || *it != scalar_dof) return -1;
  return static_cast<int>(it - scalar_dofs.begin());
}

BoundaryTrace build_trace(const FunctionSpace& space, BoundaryTag tag) {
  if (space.polynomial_degree() != 2) throw InvalidArgument("build_trace: P2 space required");
  BoundaryTrace trace{tag, {}, {}, {}};
  const auto& edges = space.mesh().boundary_edges();
  for (int b = 0; b < static_cast<int>(edges.size()); ++b) {
    if (edges[b].tag != tag) continue;
    trace.edges.push_back(b);
    for (int d : space.boundary_edge_dofs(b)) trace.scalar_dofs.push_back(d);
  }
  std::ranges::sort(trace.scalar_dofs);
  const auto dup = std::ranges::unique(trace.scalar_dofs);
  trace.scalar_dofs.erase(dup.begin(), dup.end());
  for (int d : trace.scalar_dofs) trace.points.push_back(space.dof_point(d));
  return trace;
}

void write_field_csv(const DiscreteField& field, const std::filesystem::path& file) {
  if (file.has_parent_path()) std::filesystem::create_directories(file.parent_path());
  std::ofstream os(file);
  os.precision(17);
  const auto& c = field.coeffs();
  if (field.space().kind() == SpaceKind::Velocity) {
    const int ns = field.space().n_scalar();
    os << "node_id,zx,zy\n";
    for (int i = 0; i < field.space().mesh().n_nodes(); ++i)
      os << i << ',' << c[i] << ',' << c[ns + i] << '\n';
  } else {
    os << "dof_id,value\n";
    for (Eigen::Index i = 0; i < c.size(); ++i) os << i << ',' << c[i] << '\n';
  }
}

}  // namespace bouss
