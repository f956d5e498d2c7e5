#include "perilps/boundary.hpp"

#include <cmath>
#include <sstream>

#include "perilps/error.hpp"

namespace perilps {

const char* strategy_name(ExtensionStrategy s) {
  switch (s) {
    case ExtensionStrategy::Smooth: return "smooth";
    case ExtensionStrategy::Constant: return "constant";
    case ExtensionStrategy::Linear: return "linear";
  }
  return "?";
}

ExtensionStrategy parse_strategy(const std::string& name) {
  if (name == "smooth") return ExtensionStrategy::Smooth;
  if (name == "constant") return ExtensionStrategy::Constant;
  if (name == "linear") return ExtensionStrategy::Linear;
  throw InputError("unknown extension strategy '" + name + "'");
}

BoundaryPlan::BoundaryPlan(ExtensionStrategy strategy, VectorFunction local_solution, const PointCloud& cloud)
    : strategy_(strategy), local_solution_(std::move(local_solution)) {
  const double tol = 1e-8 * cloud.delta;
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    if (!cloud.tags[i].exterior()) continue;
    const Vec2 xbar = cloud.domain.project(cloud.positions[i]);
    exterior_.push_back(i);
    positions_.push_back(cloud.positions[i]);
    projections_.push_back(xbar);
    std::int64_t partner = -1;
    if (strategy == ExtensionStrategy::Linear) {
      partner = cloud.mirror_partner.empty() ? -1 : cloud.mirror_partner[i];
      if (partner < 0) {
        std::ostringstream msg;
        msg << "exterior node " << i << " has no mirror partner; linear extension needs a mirror grid";
        throw InputError(msg.str());
      }
      const auto p = static_cast<std::size_t>(partner);
      const Vec2 reflected = 2.0 * xbar - cloud.positions[i];
      if (!cloud.tags[p].in_domain() || (cloud.positions[p] - reflected).norm() > tol) {
        std::ostringstream msg;
        msg << "mirror partner " << p << " of exterior node " << i << " is not the reflection 2x̄ - x";
        throw InputError(msg.str());
      }
    }
    partners_.push_back(partner);
  }
}

std::vector<AffineRelation> BoundaryPlan::relations(double t) const {
  std::vector<AffineRelation> out(exterior_.size());
  for (std::size_t k = 0; k < exterior_.size(); ++k) {
    AffineRelation& r = out[k];
    r.node = exterior_[k];
    switch (strategy_) {
      case ExtensionStrategy::Smooth:
        r.constant = local_solution_(t, positions_[k]);
        break;
      case ExtensionStrategy::Constant:
        r.constant = local_solution_(t, projections_[k]);
        break;
      case ExtensionStrategy::Linear:
        r.constant = 2.0 * local_solution_(t, projections_[k]);
        r.partner = partners_[k];
        r.coefficient = -1.0;
        break;
    }
  }
  return out;
}

AffineExtension BoundaryPlan::extension(double t, const DofMap& dofs) const {
  const auto n_full = 2 * static_cast<Eigen::Index>(dofs.node_count());
  const auto n_unknown = 2 * static_cast<Eigen::Index>(dofs.unknown_nodes());
  AffineExtension ext;
  ext.c = Eigen::VectorXd::Zero(n_full);
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(static_cast<std::size_t>(n_unknown));
  for (std::size_t k = 0; k < dofs.unknown_nodes(); ++k) {
    const auto i = static_cast<int>(dofs.node_of_unknown[k]);
    trip.emplace_back(2 * i, static_cast<int>(2 * k), 1.0);
    trip.emplace_back(2 * i + 1, static_cast<int>(2 * k + 1), 1.0);
  }
  const auto rel = relations(t);
  for (std::size_t k = 0; k < rel.size(); ++k) {
    const auto i = static_cast<Eigen::Index>(rel[k].node);
    ext.c.segment<2>(2 * i) = rel[k].constant;
    if (rel[k].partner >= 0) {
      const auto slot = dofs.unknown_of_node[static_cast<std::size_t>(rel[k].partner)];
      trip.emplace_back(static_cast<int>(2 * i), static_cast<int>(2 * slot), rel[k].coefficient);
      trip.emplace_back(static_cast<int>(2 * i + 1), static_cast<int>(2 * slot + 1), rel[k].coefficient);
    }
  }
  ext.P.resize(n_full, n_unknown);
  ext.P.setFromTriplets(trip.begin(), trip.end());
  return ext;
}

std::vector<Vec2> smooth_extension_values(const VectorFunction& u0, double t, const PointCloud& cloud) {
  std::vector<Vec2> out(cloud.size(), Vec2::Zero());
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    if (cloud.tags[i].exterior()) out[i] = u0(t, cloud.positions[i]);
  }
  return out;
}

std::vector<Vec2> constant_extension_values(const VectorFunction& u0, double t, const PointCloud& cloud) {
  std::vector<Vec2> out(cloud.size(), Vec2::Zero());
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    if (cloud.tags[i].exterior()) out[i] = u0(t, cloud.domain.project(cloud.positions[i]));
  }
  return out;
}

std::vector<AffineRelation> linear_extension_plan(const VectorFunction& u0, double t, const PointCloud& cloud) {
  return BoundaryPlan(ExtensionStrategy::Linear, u0, cloud).relations(t);
}

}  // namespace perilps
