#pragma once

#include <array>
#include <filesystem>
#include <vector>

#include <Eigen/Dense>

namespace bouss {

using Vec2 = Eigen::Vector2d;
using Mat2 = Eigen::Matrix2d;

enum class BoundaryTag { Gamma1, Gamma2 };

/// Sides of the unit square, listed counter-clockwise starting at y = 0.
enum class Side { Bottom = 0, Right = 1, Top = 2, Left = 3 };

inline constexpr std::array<Side, 4> all_sides{Side::Bottom, Side::Right, Side::Top,
                                               Side::Left};

const char* to_string(BoundaryTag tag);
const char* to_string(Side side);

/// Outward unit normal of an axis-aligned side.
Vec2 outward_normal(Side side);

/// Unit tangent of an axis-aligned side (counter-clockwise traversal).
Vec2 unit_tangent(Side side);

/// Assignment of each side of the square to Γ₁ (pressure / Dirichlet
/// temperature) or Γ₂ (no-slip / heat flux). The default is
/// Γ₁ = {x=0} ∪ {x=1}, Γ₂ = {y=0} ∪ {y=1}.
struct SideTagging {
  BoundaryTag bottom = BoundaryTag::Gamma2;
  BoundaryTag right = BoundaryTag::Gamma1;
  BoundaryTag top = BoundaryTag::Gamma2;
  BoundaryTag left = BoundaryTag::Gamma1;

  BoundaryTag of(Side side) const;
  bool has(BoundaryTag tag) const;
  friend bool operator==(const SideTagging&, const SideTagging&) = default;
};

struct BoundaryEdge {
  std::array<int, 2> nodes;  // counter-clockwise along ∂Ω
  Side side;
  BoundaryTag tag;
};

/// Structured triangulation of Ω = (0,1)². Every cell is split along the
/// diagonal from its lower-left to its upper-right corner; both triangles are
/// stored counter-clockwise. Immutable after construction.
class Mesh {
 public:
  int nx() const noexcept { return nx_; }
  int ny() const noexcept { return ny_; }
  const SideTagging& tagging() const noexcept { return tagging_; }

  const std::vector<Vec2>& nodes() const noexcept { return nodes_; }
  const std::vector<std::array<int, 3>>& elements() const noexcept { return elements_; }
  const std::vector<BoundaryEdge>& boundary_edges() const noexcept { return boundary_edges_; }

  int n_nodes() const noexcept { return static_cast<int>(nodes_.size()); }
  int n_elements() const noexcept { return static_cast<int>(elements_.size()); }

  /// Longest cell side, max(1/nx, 1/ny).
  double h() const noexcept { return h_; }

  /// Jacobian of the affine map from the reference triangle
  /// (0,0),(1,0),(0,1) onto element e; columns are the two edge vectors.
  Mat2 jacobian(int e) const;
  double area(int e) const;

  /// Sides on which node i lies (empty for interior nodes).
  std::vector<Side> node_sides(int i) const;

  /// Element containing point p (ties resolved towards the lower cell index).
  int locate(const Vec2& p) const;

 private:
  friend Mesh build_unit_square_mesh(int, int, SideTagging);

  int nx_ = 0;
  int ny_ = 0;
  double h_ = 0.0;
  SideTagging tagging_;
  std::vector<Vec2> nodes_;
  std::vector<std::array<int, 3>> elements_;
  std::vector<BoundaryEdge> boundary_edges_;
};

/// Builds the nx-by-ny structured mesh of the unit square.
/// Throws InvalidArgument for nx or ny < 1 or a tagging without any Γ₂ side.
Mesh build_unit_square_mesh(int nx, int ny, SideTagging tagging = {});

/// Writes nodes.csv, elements.csv and boundary.csv into dir.
void write_mesh_csv(const Mesh& mesh, const std::filesystem::path& dir);

}  // namespace bouss
