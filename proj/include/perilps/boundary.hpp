#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "perilps/dofs.hpp"
#include "perilps/geometry.hpp"

namespace perilps {

enum class ExtensionStrategy {
  Smooth,    // u_D(x) = u₀(x)
  Constant,  // u_D(x) = u₀(x̄)
  Linear,    // u_D(x) = 2u₀(x̄) − u_δ(2x̄ − x)
};

const char* strategy_name(ExtensionStrategy s);
ExtensionStrategy parse_strategy(const std::string& name);

/// Local solution u₀(t, x).
using VectorFunction = std::function<Vec2(double, const Vec2&)>;

/// Closest point of ∂Ω.
inline Vec2 project_boundary(const Domain& domain, const Vec2& x) { return domain.project(x); }

/// u_D on one exterior node: constant + coefficient · u[partner].
struct AffineRelation {
  std::size_t node{0};
  Vec2 constant{Vec2::Zero()};
  std::int64_t partner{-1};
  double coefficient{0.0};
};

/// Dirichlet volume-constraint data for the exterior collar Γ⁺_2δ.
class BoundaryPlan {
 public:
  BoundaryPlan(ExtensionStrategy strategy, VectorFunction local_solution, const PointCloud& cloud);

  ExtensionStrategy strategy() const { return strategy_; }
  const VectorFunction& local_solution() const { return local_solution_; }
  const std::vector<std::size_t>& exterior_nodes() const { return exterior_; }
  const Vec2& projection(std::size_t k) const { return projections_[k]; }
  std::int64_t partner(std::size_t k) const { return partners_[k]; }

  /// Per-exterior-node relations at time t (constant extensions have no
  /// partner). Re-evaluated for every time step.
  std::vector<AffineRelation> relations(double t) const;

  /// u_all = P u_unknown + c at time t.
  AffineExtension extension(double t, const DofMap& dofs) const;

 private:
  ExtensionStrategy strategy_;
  VectorFunction local_solution_;
  std::vector<std::size_t> exterior_;  // cloud indices of Γ⁺_2δ nodes
  std::vector<Vec2> positions_;
  std::vector<Vec2> projections_;      // x̄ per exterior node
  std::vector<std::int64_t> partners_;  // mirror partner per exterior node (Linear)
};

/// Exterior values as full-length vectors (zero on nodes in Ω).
std::vector<Vec2> smooth_extension_values(const VectorFunction& u0, double t, const PointCloud& cloud);
std::vector<Vec2> constant_extension_values(const VectorFunction& u0, double t, const PointCloud& cloud);
/// Affine relations u_D(x) = 2u₀(t, x̄) − u[mirror(x)]; throws when the cloud has
/// no mirror partner for some exterior node.
std::vector<AffineRelation> linear_extension_plan(const VectorFunction& u0, double t, const PointCloud& cloud);

}  // namespace perilps
