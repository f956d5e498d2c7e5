#include "perilps/operators.hpp"

#include <cmath>
#include <limits>
#include <ostream>
#include <sstream>

#include "perilps/error.hpp"

namespace perilps {

namespace {

using Triplets = std::vector<Eigen::Triplet<double>>;

Vec2 node_value(const Eigen::VectorXd& u, std::size_t node) {
  return u.segment<2>(2 * static_cast<Eigen::Index>(node));
}

void require_finite(const Eigen::VectorXd& u, std::size_t node, std::size_t needed_by) {
  if (!node_value(u, node).allFinite()) {
    std::ostringstream msg;
    msg << "displacement at node " << node << " is missing (needed by node " << needed_by << ")";
    throw InputError(msg.str());
  }
}

}  // namespace

Eigen::VectorXd sample_field(const PointCloud& cloud, const std::function<Vec2(const Vec2&)>& f) {
  Eigen::VectorXd u(2 * static_cast<Eigen::Index>(cloud.size()));
  for (std::size_t i = 0; i < cloud.size(); ++i) u.segment<2>(2 * static_cast<Eigen::Index>(i)) = f(cloud.positions[i]);
  return u;
}

Eigen::VectorXd dilatation(const PointCloud& cloud, const QuadratureRule& rule, const KernelSpec& kernel,
                           const Eigen::VectorXd& u) {
  const auto n = static_cast<long>(cloud.size());
  Eigen::VectorXd theta = Eigen::VectorXd::Constant(n, std::numeric_limits<double>::quiet_NaN());
  const double d = kernel.dim();
  std::string failure;
#pragma omp parallel for schedule(static)
  for (long ii = 0; ii < n; ++ii) {
    const auto i = static_cast<std::size_t>(ii);
    if (!cloud.tags[i].in_omega_plus_delta()) continue;
    try {
      if (!rule.has(i)) throw InputError("node " + std::to_string(i) + " has no quadrature weights");
      require_finite(u, i, i);
      const auto w = rule.weights(i);
      const auto* nb = cloud.neighbors.begin(i);
      const Vec2 ui = node_value(u, i);
      double sum = 0.0;
      for (std::size_t c = 0; c < w.size(); ++c) {
        const std::size_t j = nb[c];
        require_finite(u, j, i);
        const Vec2 z = cloud.positions[j] - cloud.positions[i];
        sum += kernel.vector(z).dot(node_value(u, j) - ui) * w[c];
      }
      theta[ii] = d * sum;
    } catch (const InputError& e) {
#pragma omp critical
      if (failure.empty()) failure = e.what();
    }
  }
  if (!failure.empty()) throw InputError(failure);
  return theta;
}

Eigen::VectorXd apply_lps(const PointCloud& cloud, const QuadratureRule& rule, const KernelSpec& kernel,
                          const Material& material, const Eigen::VectorXd& u, const Eigen::VectorXd& theta) {
  const auto n = static_cast<long>(cloud.size());
  Eigen::VectorXd out = Eigen::VectorXd::Zero(2 * n);
  const double ca = kernel.c_a() * (material.lambda - material.mu);
  const double cb = kernel.c_b() * material.mu;
  std::string failure;
#pragma omp parallel for schedule(static)
  for (long ii = 0; ii < n; ++ii) {
    const auto i = static_cast<std::size_t>(ii);
    if (!cloud.tags[i].in_domain()) continue;
    const auto w = rule.weights(i);
    const auto* nb = cloud.neighbors.begin(i);
    const Vec2 ui = node_value(u, i);
    Vec2 dil = Vec2::Zero();
    Vec2 bond = Vec2::Zero();
    for (std::size_t c = 0; c < w.size(); ++c) {
      const std::size_t j = nb[c];
      if (!std::isfinite(theta[static_cast<Eigen::Index>(j)])) {
#pragma omp critical
        if (failure.empty()) failure = "dilatation missing at node " + std::to_string(j) + " (neighbor of " + std::to_string(i) + ")";
        continue;
      }
      const Vec2 z = cloud.positions[j] - cloud.positions[i];
      const Vec2 kz = kernel.vector(z);
      dil += kz * ((theta[ii] + theta[static_cast<Eigen::Index>(j)]) * w[c]);
      bond += kz * (z.dot(node_value(u, j) - ui) / z.squaredNorm() * w[c]);
    }
    out.segment<2>(2 * ii) = -ca * dil - cb * bond;
  }
  if (!failure.empty()) throw InputError(failure);
  return out;
}

double g_operator_linf(const PointCloud& cloud, const QuadratureRule& rule, const KernelSpec& kernel,
                       const Eigen::VectorXd& v) {
  double worst = 0.0;
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    if (cloud.tags[i].region != Region::InnerCollar) continue;
    const auto w = rule.weights(i);
    const auto* nb = cloud.neighbors.begin(i);
    const Vec2 vi = node_value(v, i);
    double sum = 0.0;
    for (std::size_t c = 0; c < w.size(); ++c) {
      const Vec2 z = cloud.positions[nb[c]] - cloud.positions[i];
      sum += kernel.vector(z).norm() * (node_value(v, nb[c]) - vi).norm() * w[c];
    }
    worst = std::max(worst, std::abs(sum));
  }
  return worst;
}

// ---------------------------------------------------------------------------

LpsOperator LpsOperator::build(const PointCloud& cloud, const QuadratureRule& rule, const KernelSpec& kernel) {
  LpsOperator op;
  op.dofs = DofMap::build(cloud);
  const auto& dofs = op.dofs;
  const int n_full = 2 * static_cast<int>(cloud.size());
  const int n_unknown = 2 * static_cast<int>(dofs.unknown_nodes());
  const int n_theta = static_cast<int>(dofs.theta_count());
  const double d = kernel.dim();

  Triplets dil;
  for (std::size_t t = 0; t < dofs.theta_count(); ++t) {
    const std::size_t i = dofs.node_of_theta[t];
    if (!rule.has(i)) throw InputError("node " + std::to_string(i) + " has no quadrature weights");
    const auto w = rule.weights(i);
    const auto* nb = cloud.neighbors.begin(i);
    Vec2 self = Vec2::Zero();
    for (std::size_t c = 0; c < w.size(); ++c) {
      const int j = static_cast<int>(nb[c]);
      const Vec2 coef = d * w[c] * kernel.vector(Vec2(cloud.positions[nb[c]] - cloud.positions[i]));
      dil.emplace_back(static_cast<int>(t), 2 * j, coef.x());
      dil.emplace_back(static_cast<int>(t), 2 * j + 1, coef.y());
      self += coef;
    }
    dil.emplace_back(static_cast<int>(t), 2 * static_cast<int>(i), -self.x());
    dil.emplace_back(static_cast<int>(t), 2 * static_cast<int>(i) + 1, -self.y());
  }
  op.dilatation.resize(n_theta, n_full);
  op.dilatation.setFromTriplets(dil.begin(), dil.end());
  Triplets().swap(dil);

  Triplets bond, coupling;
  for (std::size_t k = 0; k < dofs.unknown_nodes(); ++k) {
    const std::size_t i = dofs.node_of_unknown[k];
    const auto w = rule.weights(i);
    const auto* nb = cloud.neighbors.begin(i);
    const int row = 2 * static_cast<int>(k);
    const int ti = static_cast<int>(dofs.theta_of_node[i]);
    Eigen::Matrix2d self_bond = Eigen::Matrix2d::Zero();
    Vec2 self_coupling = Vec2::Zero();
    for (std::size_t c = 0; c < w.size(); ++c) {
      const std::size_t j = nb[c];
      const Vec2 z = cloud.positions[j] - cloud.positions[i];
      const Vec2 kz = kernel.vector(z);
      const Eigen::Matrix2d m = (-kernel.c_b() * w[c] / z.squaredNorm()) * kz * z.transpose();
      const int col = 2 * static_cast<int>(j);
      for (int a = 0; a < 2; ++a)
        for (int b = 0; b < 2; ++b) bond.emplace_back(row + a, col + b, m(a, b));
      self_bond += m;
      const Vec2 v = -kernel.c_a() * w[c] * kz;
      const int tj = static_cast<int>(dofs.theta_of_node[j]);
      if (tj < 0) throw InputError("neighbor " + std::to_string(j) + " of node " + std::to_string(i) + " lies outside the dilatation region");
      coupling.emplace_back(row, tj, v.x());
      coupling.emplace_back(row + 1, tj, v.y());
      self_coupling += v;
    }
    const int col = 2 * static_cast<int>(i);
    for (int a = 0; a < 2; ++a)
      for (int b = 0; b < 2; ++b) bond.emplace_back(row + a, col + b, -self_bond(a, b));
    coupling.emplace_back(row, ti, self_coupling.x());
    coupling.emplace_back(row + 1, ti, self_coupling.y());
  }
  op.bond.resize(n_unknown, n_full);
  op.bond.setFromTriplets(bond.begin(), bond.end());
  op.coupling.resize(n_unknown, n_theta);
  op.coupling.setFromTriplets(coupling.begin(), coupling.end());
  return op;
}

Eigen::VectorXd LpsOperator::apply(const Material& material, const Eigen::VectorXd& u_full) const {
  Eigen::VectorXd theta = dilatation * u_full;
  Eigen::VectorXd out = material.mu * (bond * u_full);
  out.noalias() += (material.lambda - material.mu) * (coupling * theta);
  return out;
}

SparseMatrix reduced_matrix(const LpsOperator& op, const Material& material, const AffineExtension& ext) {
  SparseMatrix dp = op.dilatation * ext.P;
  SparseMatrix two_hop = op.coupling * dp;
  dp.resize(0, 0);
  SparseMatrix bp = op.bond * ext.P;
  SparseMatrix out = material.mu * bp + (material.lambda - material.mu) * two_hop;
  out.makeCompressed();
  return out;
}

Eigen::VectorXd reduced_rhs(const LpsOperator& op, const Material& material, const AffineExtension& ext,
                            const PointCloud& cloud, const BodyForce& force, double t) {
  Eigen::VectorXd rhs(2 * static_cast<Eigen::Index>(op.dofs.unknown_nodes()));
  for (std::size_t k = 0; k < op.dofs.unknown_nodes(); ++k) {
    rhs.segment<2>(2 * static_cast<Eigen::Index>(k)) = force(t, cloud.positions[op.dofs.node_of_unknown[k]]);
  }
  rhs -= op.apply(material, ext.c);
  return rhs;
}

StiffnessSystem assemble(const LpsOperator& op, const Material& material, const BoundaryPlan& plan,
                         const PointCloud& cloud, const BodyForce& force, double t) {
  StiffnessSystem sys;
  sys.extension = plan.extension(t, op.dofs);
  sys.matrix = reduced_matrix(op, material, sys.extension);
  sys.rhs = reduced_rhs(op, material, sys.extension, cloud, force, t);
  sys.fixed_exterior = plan.strategy() != ExtensionStrategy::Linear;
  return sys;
}

void write_coo(std::ostream& out, const SparseMatrix& m) {
  const auto old = out.precision(17);
  for (int r = 0; r < m.outerSize(); ++r) {
    for (SparseMatrix::InnerIterator it(m, r); it; ++it) out << it.row() << ' ' << it.col() << ' ' << it.value() << '\n';
  }
  out.precision(old);
}

}  // namespace perilps
