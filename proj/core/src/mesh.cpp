#include "bouss/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "bouss/error.hpp"

namespace bouss {

const char* to_string(BoundaryTag tag) {
  return tag == BoundaryTag::Gamma1 ? "Gamma1" : "Gamma2";
}

const char* to_string(Side side) {
  switch (side) {
    case Side::Bottom: return "bottom";
    case Side::Right: return "right";
    case Side::Top: return "top";
    case Side::Left: return "left";
  }
  return "?";
}

Vec2 outward_normal(Side side) {
  switch (side) {
    case Side::Bottom: return {0.0, -1.0};
    case Side::Right: return {1.0, 0.0};
    case Side::Top: return {0.0, 1.0};
    case Side::Left: return {-1.0, 0.0};
  }
  return {0.0, 0.0};
}

Vec2 unit_tangent(Side side) {
  const Vec2 n = outward_normal(side);
  return {-n.y(), n.x()};
}

BoundaryTag SideTagging::of(Side side) const {
  switch (side) {
    case Side::Bottom: return bottom;
    case Side::Right: return right;
    case Side::Top: return top;
    case Side::Left: return left;
  }
  return BoundaryTag::Gamma2;
}

bool SideTagging::has(BoundaryTag tag) const {
  return std::ranges::any_of(all_sides, [&](Side s) { return of(s) == tag; });
}

Mat2 Mesh::jacobian(int e) const {
  const auto& t = elements_[e];
  Mat2 J;
  J.col(0) = nodes_[t[1]] - nodes_[t[0]];
  J.col(1) = nodes_[t[2]] - nodes_[t[0]];
  return J;
}

double Mesh::area(int e) const { return 0.5 * jacobian(e).determinant(); }

std::vector<Side> Mesh::node_sides(int i) const {
  const int ix = i % (nx_ + 1);
  const int iy = i / (nx_ + 1);
  std::vector<Side> sides;
  if (iy == 0) sides.push_back(Side::Bottom);
  if (ix == nx_) sides.push_back(Side::Right);
  if (iy == ny_) sides.push_back(Side::Top);
  if (ix == 0) sides.push_back(Side::Left);
  return sides;
}

int Mesh::locate(const Vec2& p) const {
  const double sx = std::clamp(p.x(), 0.0, 1.0) * nx_;
  const double sy = std::clamp(p.y(), 0.0, 1.0) * ny_;
  const int i = std::min(static_cast<int>(sx), nx_ - 1);
  const int j = std::min(static_cast<int>(sy), ny_ - 1);
  const double fx = sx - i;
  const double fy = sy - j;
  return 2 * (i + j * nx_) + (fy > fx ? 1 : 0);
}

Mesh build_unit_square_mesh(int nx, int ny, SideTagging tagging) {
  if (nx < 1 || ny < 1) throw InvalidArgument("mesh subdivision counts must be >= 1");
  if (!tagging.has(BoundaryTag::Gamma2))
    throw InvalidArgument("boundary tagging must assign at least one side to Gamma2");

  Mesh m;
  m.nx_ = nx;
  m.ny_ = ny;
  m.h_ = std::max(1.0 / nx, 1.0 / ny);
  m.tagging_ = tagging;

  const auto node = [nx](int i, int j) { return i + j * (nx + 1); };

  m.nodes_.reserve(static_cast<std::size_t>((nx + 1) * (ny + 1)));
  for (int j = 0; j <= ny; ++j)
    for (int i = 0; i <= nx; ++i)
      m.nodes_.emplace_back(static_cast<double>(i) / nx, static_cast<double>(j) / ny);

  m.elements_.reserve(static_cast<std::size_t>(2 * nx * ny));
  for (int j = 0; j < ny; ++j) {
    for (int i = 0; i < nx; ++i) {
      const int n00 = node(i, j), n10 = node(i + 1, j);
      const int n01 = node(i, j + 1), n11 = node(i + 1, j + 1);
      m.elements_.push_back({n00, n10, n11});
      m.elements_.push_back({n00, n11, n01});
    }
  }

  for (int i = 0; i < nx; ++i)
    m.boundary_edges_.push_back({{node(i, 0), node(i + 1, 0)}, Side::Bottom, tagging.bottom});
  for (int j = 0; j < ny; ++j)
    m.boundary_edges_.push_back({{node(nx, j), node(nx, j + 1)}, Side::Right, tagging.right});
  for (int i = nx; i > 0; --i)
    m.boundary_edges_.push_back({{node(i, ny), node(i - 1, ny)}, Side::Top, tagging.top});
  for (int j = ny; j > 0; --j)
    m.boundary_edges_.push_back({{node(0, j), node(0, j - 1)}, Side::Left, tagging.left});

  return m;
}

void write_mesh_csv(const Mesh& mesh, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  std::ofstream nodes(dir / "nodes.csv");
  nodes.precision(17);
  nodes << "id,x,y\n";
  for (int i = 0; i < mesh.n_nodes(); ++i)
    nodes << i << ',' << mesh.nodes()[i].x() << ',' << mesh.nodes()[i].y() << '\n';

  std::ofstream elems(dir / "elements.csv");
  elems << "id,n0,n1,n2\n";
  for (int e = 0; e < mesh.n_elements(); ++e) {
    const auto& t = mesh.elements()[e];
    elems << e << ',' << t[0] << ',' << t[1] << ',' << t[2] << '\n';
  }

  std::ofstream bnd(dir / "boundary.csv");
  bnd << "id,n0,n1,tag\n";
  for (std::size_t b = 0; b < mesh.boundary_edges().size(); ++b) {
    const auto& be = mesh.boundary_edges()[b];
    bnd << b << ',' << be.nodes[0] << ',' << be.nodes[1] << ',' << to_string(be.tag) << '\n';
  }
}

}  // namespace bouss
