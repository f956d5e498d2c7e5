#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Core>

namespace perilps {

using Vec2 = Eigen::Vector2d;

struct SquareShape {
  Vec2 center{0.0, 0.0};
  double half_width{0.5};
};

// Centered at the origin, like the polar lattice that discretizes it.
struct AnnulusShape {
  double r_inner{1.0};
  double r_outer{1.5};
};

/// Benchmark domain: an axis-aligned square or an origin-centered annulus.
///
/// All distance queries are analytic. `signed_distance` is negative inside,
/// zero on the boundary and positive outside.
class Domain {
 public:
  static Domain square(Vec2 center, double half_width);
  static Domain annulus(double r_inner, double r_outer);

  bool is_square() const { return std::holds_alternative<SquareShape>(shape_); }
  bool is_annulus() const { return std::holds_alternative<AnnulusShape>(shape_); }
  const SquareShape& square_shape() const { return std::get<SquareShape>(shape_); }
  const AnnulusShape& annulus_shape() const { return std::get<AnnulusShape>(shape_); }
  int dim() const { return 2; }

  double signed_distance(const Vec2& x) const;
  double boundary_distance(const Vec2& x) const;
  /// Closest point on the boundary. Square points in a corner's Voronoi
  /// region project onto the corner; annulus points project radially onto the
  /// nearer circle. Throws for the annulus center, which has no unique
  /// projection.
  Vec2 project(const Vec2& x) const;
  double area() const;
  /// Smallest width across the domain (square side, annulus wall thickness).
  double extent() const;
  std::string describe() const;

 private:
  explicit Domain(std::variant<SquareShape, AnnulusShape> shape) : shape_(shape) {}
  std::variant<SquareShape, AnnulusShape> shape_;
};

/// Interior: Ω minus Γ⁻_2δ. InnerCollar: Γ⁻_2δ (including ∂Ω).
/// OuterCollar: Γ⁺_2δ, exterior nodes with 0 < dist ≤ 2δ.
enum class Region : std::uint8_t { Interior, InnerCollar, OuterCollar };

struct RegionTag {
  Region region{Region::Interior};
  /// Γ⁻_δ membership for inside nodes (dist < δ), Γ⁺_δ membership for
  /// exterior nodes (dist ≤ δ, closed to match closed-ball neighborhoods).
  bool within_delta{false};

  bool in_domain() const { return region != Region::OuterCollar; }
  bool exterior() const { return region == Region::OuterCollar; }
  /// Node belongs to Ω⁺_δ, where the dilatation is evaluated.
  bool in_omega_plus_delta() const { return in_domain() || within_delta; }
};

const char* region_name(Region r);

/// Compressed neighbor lists: neighbors of node i are
/// indices[offsets[i] .. offsets[i+1]), sorted ascending.
struct NeighborLists {
  std::vector<std::size_t> offsets;
  std::vector<std::uint32_t> indices;

  std::size_t count(std::size_t i) const { return offsets[i + 1] - offsets[i]; }
  const std::uint32_t* begin(std::size_t i) const { return indices.data() + offsets[i]; }
  const std::uint32_t* end(std::size_t i) const { return indices.data() + offsets[i + 1]; }
  std::size_t total() const { return indices.size(); }
};

enum class GridKind { Cartesian, Polar };
const char* grid_name(GridKind g);

struct PointCloud {
  Domain domain = Domain::square({0.0, 0.0}, 0.5);
  GridKind grid{GridKind::Cartesian};
  bool mirror{false};
  double h{0.0};
  double delta{0.0};
  std::vector<Vec2> positions;
  std::vector<RegionTag> tags;
  std::vector<double> distances;  // unsigned distance to ∂Ω
  std::vector<double> cell_areas;
  /// Exterior nodes of mirror grids: index of the node at 2x̄ − x; -1 otherwise.
  std::vector<std::int64_t> mirror_partner;
  NeighborLists neighbors;

  std::size_t size() const { return positions.size(); }
};

/// Lattice cloud X_h = {(p₁h, p₂h)} restricted to Ω⁺_2δ. With `mirror` the
/// exterior collar is built by reflecting Γ⁻_2δ nodes across ∂Ω (square faces
/// per face, corners through the corner point; annulus radially).
PointCloud build_cartesian_cloud(const Domain& domain, double h, double delta, bool mirror);

/// Polar lattice {(p₁h cos(πp₂h/5), p₁h sin(πp₂h/5))} on an annulus. Requires
/// 10/h to be an integer so the angular rows close the circle.
PointCloud build_polar_cloud(const Domain& domain, double h, double delta, bool mirror);

/// Recomputes tags and distances from the analytic signed distance. Throws if
/// any node lies farther than 2δ outside Ω.
void classify_regions(PointCloud& cloud, const Domain& domain, double delta);

/// Closed-ball neighbor lists (‖x_j − x_i‖ ≤ δ, j ≠ i) via a cell list.
NeighborLists neighbors(const std::vector<Vec2>& positions, double delta);

/// Half the minimum pairwise distance.
double separation_distance(const PointCloud& cloud);
/// Largest nearest-neighbor distance, a computable proxy for fill distance.
double fill_distance_estimate(const PointCloud& cloud);

/// Header `x,y,tag,area`, one row per node.
void write_cloud_csv(std::ostream& out, const PointCloud& cloud);

}  // namespace perilps
