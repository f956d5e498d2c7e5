#pragma once

#include <functional>
#include <iosfwd>

#include <Eigen/Core>

#include "perilps/boundary.hpp"
#include "perilps/dofs.hpp"
#include "perilps/geometry.hpp"
#include "perilps/kernel.hpp"
#include "perilps/quadrature.hpp"

namespace perilps {

/// Interleaved full-length vector from a per-node function.
Eigen::VectorXd sample_field(const PointCloud& cloud, const std::function<Vec2(const Vec2&)>& f);

// Matrix-free evaluation -----------------------------------------------------

/// θ_i = d Σ_j (K/m)(|z|) z·(u_j − u_i) ω_{j,i} on Ω⁺_δ nodes, NaN elsewhere.
/// Throws if a needed displacement is not finite.
Eigen::VectorXd dilatation(const PointCloud& cloud, const QuadratureRule& rule, const KernelSpec& kernel,
                           const Eigen::VectorXd& u);

/// (L_δ^h u)_i on nodes in Ω, interleaved full length (zero on exterior nodes):
///   −C_A (λ−μ) Σ_j (K/m) z (θ_i + θ_j) ω − C_B μ Σ_j (K/m) (z⊗z/|z|²)(u_j − u_i) ω.
Eigen::VectorXd apply_lps(const PointCloud& cloud, const QuadratureRule& rule, const KernelSpec& kernel,
                          const Material& material, const Eigen::VectorXd& u, const Eigen::VectorXd& theta);

/// ‖G v‖ over Γ⁻_2δ nodes, G v(x_i) = Σ_j (K/m)(|z|) |z| |v_j − v_i| ω_{j,i}.
double g_operator_linf(const PointCloud& cloud, const QuadratureRule& rule, const KernelSpec& kernel,
                       const Eigen::VectorXd& v);

// Sparse assembly ------------------------------------------------------------

/// The discrete operator split into material-independent sparse pieces:
///   θ = D u,   L u = μ·bond·u + (λ − μ)·coupling·θ.
struct LpsOperator {
  DofMap dofs;
  SparseMatrix dilatation;  // theta slots × full dofs
  SparseMatrix bond;        // unknown dofs × full dofs
  SparseMatrix coupling;    // unknown dofs × theta slots

  static LpsOperator build(const PointCloud& cloud, const QuadratureRule& rule, const KernelSpec& kernel);

  /// L u restricted to the unknown rows.
  Eigen::VectorXd apply(const Material& material, const Eigen::VectorXd& u_full) const;
};

/// Reduced linear system on the unknowns after eliminating θ and the
/// exterior collar: matrix · u = rhs, with u_all = extension.expand(u).
struct StiffnessSystem {
  SparseMatrix matrix;
  Eigen::VectorXd rhs;
  AffineExtension extension;
  /// Whether the extension pins the exterior (Smooth/Constant); only then is
  /// symmetry expected, and only on symmetric stencils.
  bool fixed_exterior{true};
};

/// Body force f(t, x).
using BodyForce = std::function<Vec2(double, const Vec2&)>;

/// Eliminates θ (two-hop stencil) and folds the boundary plan at time t:
/// matrix = L P, rhs = f − L c.
StiffnessSystem assemble(const LpsOperator& op, const Material& material, const BoundaryPlan& plan,
                         const PointCloud& cloud, const BodyForce& force, double t);

/// Only the reduced matrix L P.
SparseMatrix reduced_matrix(const LpsOperator& op, const Material& material, const AffineExtension& ext);

/// Right-hand side f − L c for an extension at some time.
Eigen::VectorXd reduced_rhs(const LpsOperator& op, const Material& material, const AffineExtension& ext,
                            const PointCloud& cloud, const BodyForce& force, double t);

/// `row col value` per line, zero-based, 17 significant digits.
void write_coo(std::ostream& out, const SparseMatrix& m);

}  // namespace perilps
