#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include "perilps/geometry.hpp"

namespace perilps {

using SparseMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor>;

/// Slot maps between cloud nodes, displacement unknowns (nodes in Ω, two
/// components each, interleaved) and dilatation slots (nodes in Ω⁺_δ).
///
/// Full nodal vectors are interleaved as well: entry 2i + a is component a
/// of node i.
struct DofMap {
  std::vector<std::int64_t> unknown_of_node;  // -1 for exterior nodes
  std::vector<std::size_t> node_of_unknown;
  std::vector<std::int64_t> theta_of_node;  // -1 outside Ω⁺_δ
  std::vector<std::size_t> node_of_theta;

  static DofMap build(const PointCloud& cloud);

  std::size_t node_count() const { return unknown_of_node.size(); }
  std::size_t unknown_nodes() const { return node_of_unknown.size(); }
  std::size_t theta_count() const { return node_of_theta.size(); }

  /// Restricts a full interleaved field to the unknown slots.
  Eigen::VectorXd restrict(const Eigen::VectorXd& full) const;
};

/// Affine description of the full nodal field in terms of the unknowns:
/// u_all = P u_unknown + c. Exterior rows of P are empty for fixed values
/// and carry −1 couplings to mirror partners for the linear extension.
struct AffineExtension {
  SparseMatrix P;
  Eigen::VectorXd c;

  Eigen::VectorXd expand(const Eigen::VectorXd& unknowns) const { return P * unknowns + c; }
};

}  // namespace perilps
