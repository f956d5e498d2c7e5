#include "perilps/quadrature.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <istream>
#include <ostream>
#include <sstream>

#include <Eigen/Dense>

#include "perilps/error.hpp"

namespace perilps {

ReproducingSpace ReproducingSpace::make(int dim, int max_degree, int singularity_power) {
  if (dim != 2 && dim != 3) throw InputError("reproducing space dimension must be 2 or 3");
  ReproducingSpace space;
  space.dim = dim;
  space.max_degree = max_degree;
  space.singularity_power = singularity_power;
  const int min_degree = std::max(0, singularity_power - dim + 1);
  for (int total = min_degree; total <= max_degree; ++total) {
    if (dim == 2) {
      for (int a = total; a >= 0; --a) space.exponents.push_back({a, total - a, 0});
    } else {
      for (int a = total; a >= 0; --a) {
        for (int b = total - a; b >= 0; --b) space.exponents.push_back({a, b, total - a - b});
      }
    }
  }
  return space;
}

double exact_moment(const MultiIndex& alpha, double delta, int dim, int singularity_power) {
  const int n = degree(alpha);
  const int radial_power = n - singularity_power + dim - 1;  // ∫ r^radial_power dr
  if (radial_power <= -1) {
    std::ostringstream msg;
    msg << "moment of degree " << n << " is not integrable against |z|^-" << singularity_power << " in " << dim
        << "D";
    throw InputError(msg.str());
  }
  if (dim == 2 && alpha[2] != 0) throw InputError("2D multi-index has a third exponent");
  for (int k = 0; k < dim; ++k) {
    if (alpha[k] % 2 != 0) return 0.0;
  }
  const double radial = std::pow(delta, radial_power + 1) / (radial_power + 1);
  // ∫_{S^{d-1}} n^α = 2 Π Γ((α_k+1)/2) / Γ((|α|+d)/2)
  double log_angular = std::log(2.0) - std::lgamma(0.5 * (n + dim));
  for (int k = 0; k < dim; ++k) log_angular += std::lgamma(0.5 * (alpha[k] + 1));
  return radial * std::exp(log_angular);
}

namespace {

double monomial(const Vec2& z, const MultiIndex& a) {
  double v = 1.0;
  for (int k = 0; k < a[0]; ++k) v *= z.x();
  for (int k = 0; k < a[1]; ++k) v *= z.y();
  return v;
}

}  // namespace

NodeWeights compute_weights(const PointCloud& cloud, std::size_t node, const ReproducingSpace& space) {
  if (space.dim != 2) throw InputError("point clouds are two-dimensional");
  const auto& nb = cloud.neighbors;
  const std::size_t n = nb.count(node);
  if (n == 0) {
    std::ostringstream msg;
    msg << "node " << node << " has an empty neighborhood; quadrature weights are undefined";
    throw NumericalError(msg.str());
  }
  const double delta = cloud.delta;
  const std::size_t m = space.size();
  Eigen::MatrixXd b(m, n);
  Eigen::VectorXd g(m);
  const Vec2& xi = cloud.positions[node];
  for (std::size_t c = 0; c < n; ++c) {
    const Vec2 z = (cloud.positions[nb.begin(node)[c]] - xi) / delta;
    const double inv = std::pow(z.norm(), -space.singularity_power);
    for (std::size_t r = 0; r < m; ++r) b(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = monomial(z, space.exponents[r]) * inv;
  }
  for (std::size_t r = 0; r < m; ++r) g(static_cast<Eigen::Index>(r)) = exact_moment(space.exponents[r], 1.0, 2, space.singularity_power);

  Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod;
  cod.setThreshold(1e-10);
  cod.compute(b);
  const Eigen::VectorXd w = cod.solve(g);

  NodeWeights out;
  out.rank = static_cast<int>(cod.rank());
  out.residual = (b * w - g).lpNorm<Eigen::Infinity>() / g.lpNorm<Eigen::Infinity>();
  if (!(out.residual <= 1e-10)) {
    std::ostringstream msg;
    msg << "quadrature constraints infeasible at node " << node << " (" << n << " neighbors, rank " << out.rank
        << "/" << m << ", residual " << out.residual << "); delta/h is likely too small";
    throw NumericalError(msg.str());
  }
  const double scale = delta * delta;
  out.weights.resize(n);
  for (std::size_t c = 0; c < n; ++c) out.weights[c] = scale * w(static_cast<Eigen::Index>(c));
  return out;
}

QuadratureRule::QuadratureRule(const PointCloud& cloud)
    : offsets_(cloud.neighbors.offsets),
      weights_(cloud.neighbors.total(), 0.0),
      computed_(cloud.size(), 0),
      rank_(cloud.size(), 0),
      residual_(cloud.size(), 0.0) {}

void QuadratureRule::set(std::size_t node, const NodeWeights& w) {
  auto dst = weights(node);
  if (dst.size() != w.weights.size()) throw InputError("weight count does not match the neighbor list");
  std::copy(w.weights.begin(), w.weights.end(), dst.begin());
  rank_[node] = w.rank;
  residual_[node] = w.residual;
  computed_[node] = 1;
}

double QuadratureRule::integrate(const PointCloud& cloud, std::size_t node,
                                 const std::function<double(const Vec2&, const Vec2&)>& f) const {
  const auto w = weights(node);
  const auto* nb = cloud.neighbors.begin(node);
  const Vec2& xi = cloud.positions[node];
  double sum = 0.0;
  for (std::size_t c = 0; c < w.size(); ++c) sum += f(xi, cloud.positions[nb[c]]) * w[c];
  return sum;
}

QuadratureRule build_quadrature(const PointCloud& cloud, const ReproducingSpace& space) {
  QuadratureRule rule(cloud);
  const auto n = static_cast<long>(cloud.size());
  std::string failure;
#pragma omp parallel for schedule(dynamic, 64)
  for (long i = 0; i < n; ++i) {
    const auto node = static_cast<std::size_t>(i);
    if (!cloud.tags[node].in_omega_plus_delta()) continue;
    try {
      rule.set(node, compute_weights(cloud, node, space));
    } catch (const NumericalError& e) {
#pragma omp critical
      if (failure.empty()) failure = e.what();
    }
  }
  if (!failure.empty()) throw NumericalError(failure);
  return rule;
}

double reproduction_error(const PointCloud& cloud, const QuadratureRule& rule, std::size_t node,
                          const ReproducingSpace& space) {
  double worst = 0.0;
  for (const auto& alpha : space.exponents) {
    const double exact = exact_moment(alpha, cloud.delta, 2, space.singularity_power);
    const double approx = rule.integrate(cloud, node, [&](const Vec2& x, const Vec2& y) {
      const Vec2 z = y - x;
      return monomial(z, alpha) * std::pow(z.norm(), -space.singularity_power);
    });
    const double scale = std::pow(cloud.delta, degree(alpha) - space.singularity_power + space.dim);
    worst = std::max(worst, std::abs(approx - exact) / scale);
  }
  return worst;
}

NormalizationResidual check_normalization(const KernelSpec& kernel, const PointCloud& cloud,
                                          const QuadratureRule& rule, std::size_t node) {
  Eigen::Matrix2d a = Eigen::Matrix2d::Zero();
  double b[2][2][2][2] = {};
  const auto w = rule.weights(node);
  const auto* nb = cloud.neighbors.begin(node);
  for (std::size_t c = 0; c < w.size(); ++c) {
    const Vec2 z = cloud.positions[nb[c]] - cloud.positions[node];
    const Vec2 kz = kernel.vector(z);
    a += w[c] * kz * z.transpose();
    const double r2 = z.squaredNorm();
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j)
        for (int k = 0; k < 2; ++k)
          for (int l = 0; l < 2; ++l) b[i][j][k][l] += w[c] * kz[i] * z[j] * z[k] * z[l] / r2;
  }
  NormalizationResidual res;
  res.a = (kernel.c_a() * a - Eigen::Matrix2d::Identity()).cwiseAbs().maxCoeff();
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j)
      for (int k = 0; k < 2; ++k)
        for (int l = 0; l < 2; ++l)
          res.b = std::max(res.b, std::abs(kernel.c_b() * b[i][j][k][l] - b_normalization_target(i, j, k, l)));
  return res;
}

// ---------------------------------------------------------------------------
// Cache

namespace {

template <class T>
void put(std::ostream& out, T value) {
  if constexpr (std::endian::native == std::endian::big) {
    auto bytes = std::bit_cast<std::array<char, sizeof(T)>>(value);
    std::reverse(bytes.begin(), bytes.end());
    out.write(bytes.data(), sizeof(T));
  } else {
    out.write(reinterpret_cast<const char*>(&value), sizeof(T));
  }
}

template <class T>
T get(std::istream& in) {
  std::array<char, sizeof(T)> bytes{};
  in.read(bytes.data(), sizeof(T));
  if (!in) throw InputError("weight cache is truncated");
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes.begin(), bytes.end());
  return std::bit_cast<T>(bytes);
}

}  // namespace

void write_weight_cache(std::ostream& out, const PointCloud& cloud, const QuadratureRule& rule) {
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    if (!rule.has(i)) continue;
    const auto w = rule.weights(i);
    put<std::uint32_t>(out, static_cast<std::uint32_t>(i));
    put<std::uint32_t>(out, static_cast<std::uint32_t>(w.size()));
    for (const auto* j = cloud.neighbors.begin(i); j != cloud.neighbors.end(i); ++j) put<std::uint32_t>(out, *j);
    for (double v : w) put<double>(out, v);
  }
}

QuadratureRule read_weight_cache(std::istream& in, const PointCloud& cloud) {
  QuadratureRule rule(cloud);
  while (in.peek() != std::char_traits<char>::eof()) {
    const auto node = get<std::uint32_t>(in);
    const auto count = get<std::uint32_t>(in);
    if (node >= cloud.size() || count != cloud.neighbors.count(node)) {
      std::ostringstream msg;
      msg << "weight cache record for node " << node << " does not match the cloud";
      throw InputError(msg.str());
    }
    const auto* expected = cloud.neighbors.begin(node);
    for (std::uint32_t c = 0; c < count; ++c) {
      if (get<std::uint32_t>(in) != expected[c]) {
        std::ostringstream msg;
        msg << "weight cache neighbor ids for node " << node << " do not match the cloud";
        throw InputError(msg.str());
      }
    }
    NodeWeights w;
    w.weights.resize(count);
    for (auto& v : w.weights) v = get<double>(in);
    rule.set(node, w);
  }
  return rule;
}

std::string weight_cache_name(const PointCloud& cloud, KernelFamily family) {
  std::ostringstream s;
  s.precision(12);
  s << "weights_" << cloud.domain.describe() << '_' << grid_name(cloud.grid) << (cloud.mirror ? "_mirror" : "")
    << "_h" << cloud.h << "_d" << cloud.delta << '_' << kernel_name(family) << ".bin";
  std::string name = s.str();
  for (char& c : name) {
    if (c == '(' || c == ')' || c == ',' || c == '=') c = '_';
  }
  return name;
}

}  // namespace perilps
