#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "perilps/geometry.hpp"
#include "perilps/kernel.hpp"

namespace perilps {

using MultiIndex = std::array<int, 3>;

inline int degree(const MultiIndex& a) { return a[0] + a[1] + a[2]; }

/// V_h = { p(z)/|z|^s : p ∈ P_max_degree, ∫_{B_δ} p/|z|^s < ∞ }, spanned by
/// the integrable monomials z^α/|z|^s, i.e. |α| ≥ s − d + 1.
struct ReproducingSpace {
  int dim{2};
  int max_degree{5};
  int singularity_power{3};
  std::vector<MultiIndex> exponents;

  static ReproducingSpace make(int dim, int max_degree, int singularity_power);
  static ReproducingSpace for_kernel(const KernelSpec& kernel) {
    return make(kernel.dim(), 5, kernel.singularity_power());
  }
  std::size_t size() const { return exponents.size(); }
};

/// ∫_{B_δ} z^α/|z|^s dz in closed form (radial power integral times the
/// Beta-function angular moment, zero for any odd exponent).
double exact_moment(const MultiIndex& alpha, double delta, int dim = 2, int singularity_power = 3);

struct NodeWeights {
  std::vector<double> weights;  // aligned with cloud.neighbors of the node
  int rank{0};
  double residual{0.0};  // ‖Bω − g‖_∞ / ‖g‖_∞ in horizon-scaled units
};

/// Minimum-ℓ² weights with I_h[q] = I[q] for every q in `space`. The
/// constraint rows are scaled by δ so the system is dimensionless; the
/// minimum-norm solution is computed with a complete orthogonal decomposition
/// (rank threshold 1e-10 relative to the largest pivot).
NodeWeights compute_weights(const PointCloud& cloud, std::size_t node, const ReproducingSpace& space);

/// Per-node quadrature weights over the closed δ-ball neighbors, stored
/// aligned with `cloud.neighbors`.
class QuadratureRule {
 public:
  QuadratureRule() = default;
  explicit QuadratureRule(const PointCloud& cloud);

  bool has(std::size_t node) const { return computed_[node] != 0; }
  std::span<const double> weights(std::size_t node) const {
    return {weights_.data() + offsets_[node], offsets_[node + 1] - offsets_[node]};
  }
  std::span<double> weights(std::size_t node) {
    return {weights_.data() + offsets_[node], offsets_[node + 1] - offsets_[node]};
  }
  int rank(std::size_t node) const { return rank_[node]; }
  double residual(std::size_t node) const { return residual_[node]; }
  std::size_t node_count() const { return computed_.size(); }

  void set(std::size_t node, const NodeWeights& w);

  /// Σ_j f(x_i, x_j) ω_{j,i}.
  double integrate(const PointCloud& cloud, std::size_t node,
                   const std::function<double(const Vec2&, const Vec2&)>& f) const;

 private:
  std::vector<std::size_t> offsets_;
  std::vector<double> weights_;
  std::vector<std::uint8_t> computed_;
  std::vector<int> rank_;
  std::vector<double> residual_;
};

/// Weights for every node of Ω⁺_δ (all nodes where the discrete sums are
/// evaluated). Throws NumericalError naming the first infeasible node.
QuadratureRule build_quadrature(const PointCloud& cloud, const ReproducingSpace& space);

/// Largest reproduction error over the basis moments at one node, each
/// relative to its natural scale δ^(|α| − s + d).
double reproduction_error(const PointCloud& cloud, const QuadratureRule& rule, std::size_t node,
                          const ReproducingSpace& space);

/// Discrete normalization residuals at one node.
NormalizationResidual check_normalization(const KernelSpec& kernel, const PointCloud& cloud,
                                          const QuadratureRule& rule, std::size_t node);

/// Binary weight cache: per computed node, little-endian records of
/// (u32 node id, u32 neighbor count, u32 neighbor ids[], f64 weights[]).
void write_weight_cache(std::ostream& out, const PointCloud& cloud, const QuadratureRule& rule);
/// Reads a cache written for `cloud`; throws InputError when the records do not
/// match the cloud's neighbor lists.
QuadratureRule read_weight_cache(std::istream& in, const PointCloud& cloud);
/// File name keyed by domain, grid type, h, δ and kernel family.
std::string weight_cache_name(const PointCloud& cloud, KernelFamily family);

}  // namespace perilps
