#include "perilps/dofs.hpp"

namespace perilps {

DofMap DofMap::build(const PointCloud& cloud) {
  DofMap m;
  const std::size_t n = cloud.size();
  m.unknown_of_node.assign(n, -1);
  m.theta_of_node.assign(n, -1);
  for (std::size_t i = 0; i < n; ++i) {
    if (cloud.tags[i].in_domain()) {
      m.unknown_of_node[i] = static_cast<std::int64_t>(m.node_of_unknown.size());
      m.node_of_unknown.push_back(i);
    }
    if (cloud.tags[i].in_omega_plus_delta()) {
      m.theta_of_node[i] = static_cast<std::int64_t>(m.node_of_theta.size());
      m.node_of_theta.push_back(i);
    }
  }
  return m;
}

Eigen::VectorXd DofMap::restrict(const Eigen::VectorXd& full) const {
  Eigen::VectorXd out(2 * static_cast<Eigen::Index>(unknown_nodes()));
  for (std::size_t k = 0; k < unknown_nodes(); ++k) {
    const auto i = static_cast<Eigen::Index>(node_of_unknown[k]);
    out.segment<2>(2 * static_cast<Eigen::Index>(k)) = full.segment<2>(2 * i);
  }
  return out;
}

}  // namespace perilps
