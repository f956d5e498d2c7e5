#include <doctest.h>

#include <cmath>
#include <random>
#include <sstream>

#include <Eigen/Eigenvalues>

#include "perilps/boundary.hpp"
#include "perilps/error.hpp"
#include "perilps/harness.hpp"
#include "perilps/operators.hpp"

using namespace perilps;

namespace {

struct Fixture {
  PointCloud cloud;
  KernelSpec kernel;
  QuadratureRule rule;

  Fixture(const PointCloud& c, KernelFamily family)
      : cloud(c), kernel(family, c.delta), rule(build_quadrature(cloud, ReproducingSpace::for_kernel(kernel))) {}
};

Fixture square_fixture(KernelFamily family, double delta = 0.1, bool mirror = false) {
  return Fixture(build_cartesian_cloud(Domain::square({0, 0}, 0.5), delta / 4, delta, mirror), family);
}

Eigen::VectorXd random_field(std::size_t n, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> d(-1.0, 1.0);
  Eigen::VectorXd u(2 * static_cast<Eigen::Index>(n));
  for (auto& v : u) v = d(rng);
  return u;
}

Vec2 at(const Eigen::VectorXd& v, std::size_t i) { return v.segment<2>(2 * static_cast<Eigen::Index>(i)); }

double slope(double e1, double e2) { return std::log(e1 / e2) / std::log(2.0); }

}  // namespace

TEST_CASE("dilatation on simple fields") {
  for (const auto family : {KernelFamily::InverseR, KernelFamily::Constant}) {
    const auto f = square_fixture(family);
    const auto& c = f.cloud;
    const auto theta_const = dilatation(c, f.rule, f.kernel, sample_field(c, [](const Vec2&) { return Vec2(1.5, -2.0); }));
    const auto theta_patch =
        dilatation(c, f.rule, f.kernel, sample_field(c, [](const Vec2& x) { return Vec2(3 * x.x() + 2 * x.y(), -x.x() + 2 * x.y()); }));
    const auto theta_rot = dilatation(c, f.rule, f.kernel, sample_field(c, [](const Vec2& x) { return Vec2(-x.y(), x.x()); }));
    const auto theta_sq = dilatation(c, f.rule, f.kernel, sample_field(c, [](const Vec2& x) { return Vec2(x.x() * x.x(), 0.0); }));
    for (std::size_t i = 0; i < c.size(); ++i) {
      if (!c.tags[i].in_omega_plus_delta()) {
        CHECK(std::isnan(theta_const[static_cast<Eigen::Index>(i)]));
        continue;
      }
      const auto k = static_cast<Eigen::Index>(i);
      CHECK(std::abs(theta_const[k]) < 1e-10);
      CHECK(std::abs(theta_patch[k] - 5.0) < 1e-10);
      CHECK(std::abs(theta_rot[k]) < 1e-10);
      CHECK(std::abs(theta_sq[k] - 2 * c.positions[i].x()) < 1e-10);
    }
  }
}

TEST_CASE("dilatation rejects missing displacements it needs") {
  const auto f = square_fixture(KernelFamily::InverseR, 0.2);
  Eigen::VectorXd u = Eigen::VectorXd::Zero(2 * static_cast<Eigen::Index>(f.cloud.size()));
  u[0] = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(dilatation(f.cloud, f.rule, f.kernel, u), InputError);
}

TEST_CASE("local operator vanishes on affine fields and is translation invariant") {
  const Material m = Material::plane_strain(1.0, 0.3);
  for (const auto family : {KernelFamily::InverseR, KernelFamily::Constant}) {
    const auto f = square_fixture(family);
    const auto& c = f.cloud;
    auto lps = [&](const Eigen::VectorXd& u) { return apply_lps(c, f.rule, f.kernel, m, u, dilatation(c, f.rule, f.kernel, u)); };
    const auto patch = lps(sample_field(c, [](const Vec2& x) { return Vec2(3 * x.x() + 2 * x.y(), -x.x() + 2 * x.y()); }));
    CHECK(patch.lpNorm<Eigen::Infinity>() < 1e-9);
    CHECK(lps(Eigen::VectorXd::Zero(2 * static_cast<Eigen::Index>(c.size()))).lpNorm<Eigen::Infinity>() == 0.0);
    const Eigen::VectorXd u = random_field(c.size(), 3);
    const Eigen::VectorXd shifted = u + sample_field(c, [](const Vec2&) { return Vec2(0.7, -0.2); });
    CHECK((lps(u) - lps(shifted)).lpNorm<Eigen::Infinity>() < 1e-12 * lps(u).lpNorm<Eigen::Infinity>());
  }
}

TEST_CASE("quadratic exactness on the polar grid") {
  const Material m = Material::plane_strain(1.0, 0.49);
  const Fixture f(build_polar_cloud(Domain::annulus(1.0, 1.5), 0.025, 0.1, false), KernelFamily::InverseR);
  const auto& c = f.cloud;
  // u = (x² + xy, y² − 3x²): div = 2x + y + 2y, and the Navier operator
  // −(λ+μ)∇div − μΔ gives −(λ+μ)(2, 3) − μ(2, −4).
  const auto u = sample_field(c, [](const Vec2& x) {
    return Vec2(x.x() * x.x() + x.x() * x.y(), x.y() * x.y() - 3 * x.x() * x.x());
  });
  const auto theta = dilatation(c, f.rule, f.kernel, u);
  const auto lu = apply_lps(c, f.rule, f.kernel, m, u, theta);
  const Vec2 expected = -(m.lambda + m.mu) * Vec2(2, 3) - m.mu * Vec2(2, -4);
  for (std::size_t i = 0; i < c.size(); ++i) {
    const Vec2& x = c.positions[i];
    if (c.tags[i].in_omega_plus_delta()) CHECK(std::abs(theta[static_cast<Eigen::Index>(i)] - (2 * x.x() + 3 * x.y())) < 1e-9);
    if (c.tags[i].in_domain()) CHECK((at(lu, i) - expected).cwiseAbs().maxCoeff() < 1e-9);
  }
}

TEST_CASE("operator consistency converges at second order") {
  const Material m = Material::plane_strain(1.0, 0.3);
  const double cc = 1.4, b = 1.6;
  std::vector<double> point_err, l2_err;
  for (const double delta : {0.2, 0.1, 0.05}) {
    const auto f = square_fixture(KernelFamily::InverseR, delta);
    const auto& c = f.cloud;
    auto lps = [&](const Eigen::VectorXd& u) { return apply_lps(c, f.rule, f.kernel, m, u, dilatation(c, f.rule, f.kernel, u)); };
    const auto s = lps(sample_field(c, [&](const Vec2& x) { return Vec2(cc * std::sin(b * x.x()), 0.0); }));
    const auto t = lps(sample_field(c, [](const Vec2& x) { return Vec2(std::sin(x.x()), std::cos(x.y())); }));
    double pe = 0.0, sum = 0.0;
    for (std::size_t i = 0; i < c.size(); ++i) {
      const Vec2& x = c.positions[i];
      if ((x - Vec2(0.1, 0.0)).norm() < 1e-12) {
        pe = std::abs(at(s, i).x() - (m.lambda + 2 * m.mu) * b * b * cc * std::sin(b * x.x()));
        CHECK(std::abs(at(s, i).y()) < 1e-9);
      }
      if (std::abs(x.x()) <= 0.25 && std::abs(x.y()) <= 0.25) {
        // −(λ+μ)∇div − μΔ of (sin x, cos y) is (λ+2μ)(sin x, cos y).
        const Vec2 exact = (m.lambda + 2 * m.mu) * Vec2(std::sin(x.x()), std::cos(x.y()));
        sum += c.cell_areas[i] * (at(t, i) - exact).squaredNorm();
      }
    }
    point_err.push_back(pe);
    l2_err.push_back(std::sqrt(sum));
  }
  for (std::size_t k = 1; k < point_err.size(); ++k) {
    CHECK(slope(point_err[k - 1], point_err[k]) > 1.8);
    CHECK(slope(l2_err[k - 1], l2_err[k]) > 1.8);
  }
}

TEST_CASE("assembled operator matches the matrix-free evaluation") {
  for (const double nu : {0.3, 0.49}) {
    const Material m = Material::plane_strain(1.0, nu);
    for (const auto family : {KernelFamily::InverseR, KernelFamily::Constant}) {
      for (const bool polar : {false, true}) {
        const Fixture f(polar ? build_polar_cloud(Domain::annulus(1.0, 1.5), 0.05, 0.2, true)
                              : build_cartesian_cloud(Domain::square({0, 0}, 0.5), 0.05, 0.2, true),
                        family);
        const auto op = LpsOperator::build(f.cloud, f.rule, f.kernel);
        const auto u = random_field(f.cloud.size(), 17);
        const auto full = apply_lps(f.cloud, f.rule, f.kernel, m, u, dilatation(f.cloud, f.rule, f.kernel, u));
        const auto reference = op.dofs.restrict(full);
        CHECK((op.apply(m, u) - reference).lpNorm<Eigen::Infinity>() < 1e-12 * reference.lpNorm<Eigen::Infinity>());
      }
    }
  }
}

TEST_CASE("eliminated matrix is symmetric positive semidefinite for fixed exteriors") {
  const Material m = Material::plane_strain(1.0, 0.3);
  const auto u0 = [](double, const Vec2& x) { return Vec2(std::sin(x.x()), x.y()); };
  const auto zero = [](double, const Vec2&) { return Vec2::Zero().eval(); };
  for (const auto strategy : {ExtensionStrategy::Smooth, ExtensionStrategy::Constant}) {
    for (const auto family : {KernelFamily::InverseR, KernelFamily::Constant}) {
      const auto f = square_fixture(family, 0.2);
      const auto op = LpsOperator::build(f.cloud, f.rule, f.kernel);
      const BoundaryPlan plan(strategy, u0, f.cloud);
      const auto sys = assemble(op, m, plan, f.cloud, zero, 0.0);
      CHECK(sys.fixed_exterior);
      const Eigen::MatrixXd a(sys.matrix);
      const double norm = a.cwiseAbs().maxCoeff();
      CHECK((a - a.transpose()).cwiseAbs().maxCoeff() <= 1e-9 * norm);
      std::mt19937_64 rng(23);
      std::normal_distribution<double> g;
      for (int trial = 0; trial < 20; ++trial) {
        Eigen::VectorXd v(a.rows());
        for (auto& x : v) x = g(rng);
        CHECK(v.dot(a * v) >= -1e-9 * norm * v.squaredNorm());
      }
      const Eigen::VectorXd eig = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(0.5 * (a + a.transpose())).eigenvalues();
      CHECK(eig.minCoeff() > 0.0);
    }
  }
}

TEST_CASE("assembled system residual at the local solution is the truncation error") {
  const Material m = Material::plane_strain(1.0, 0.3);
  const auto bench = find_case("nonlinear-static", m);
  std::vector<double> res;
  for (const double delta : {0.2, 0.1, 0.05}) {
    const auto f = square_fixture(KernelFamily::InverseR, delta);
    const auto op = LpsOperator::build(f.cloud, f.rule, f.kernel);
    const BoundaryPlan plan(ExtensionStrategy::Smooth, bench.u0, f.cloud);
    const auto sys = assemble(op, m, plan, f.cloud, bench.force, 0.0);
    const Eigen::VectorXd exact = op.dofs.restrict(sample_field(f.cloud, [&](const Vec2& x) { return bench.u0(0.0, x); }));
    const Eigen::VectorXd r = sys.matrix * exact - sys.rhs;
    double sum = 0.0;
    for (std::size_t k = 0; k < op.dofs.unknown_nodes(); ++k)
      sum += f.cloud.cell_areas[op.dofs.node_of_unknown[k]] * r.segment<2>(2 * static_cast<Eigen::Index>(k)).squaredNorm();
    res.push_back(std::sqrt(sum));
  }
  CHECK(slope(res[0], res[1]) > 1.8);
  CHECK(slope(res[1], res[2]) > 1.8);
}

TEST_CASE("G operator") {
  for (const auto family : {KernelFamily::InverseR, KernelFamily::Constant}) {
    const auto f = square_fixture(family);
    const auto& c = f.cloud;
    CHECK(g_operator_linf(c, f.rule, f.kernel, sample_field(c, [](const Vec2&) { return Vec2(2.0, 1.0); })) < 1e-12);
    // |v_j − v_i| = |c| |z|, and Σ k |z|² ω reproduces ∫ (K/m) |z|² = 1.
    const double cs = -0.75;
    CHECK(g_operator_linf(c, f.rule, f.kernel, sample_field(c, [&](const Vec2& x) { return Vec2(cs * x); })) ==
          doctest::Approx(std::abs(cs)).epsilon(1e-10));
  }
}

TEST_CASE("COO export round-trips every value exactly") {
  SparseMatrix m(2, 3);
  m.insert(0, 1) = 1.0 / 3.0;
  m.insert(1, 2) = -2.5e-17;
  m.insert(1, 0) = std::nextafter(1.0, 2.0);
  m.makeCompressed();
  std::ostringstream out;
  write_coo(out, m);
  std::istringstream in(out.str());
  int r, c;
  std::string text;
  std::size_t count = 0;
  while (in >> r >> c >> text) {
    CHECK(std::stod(text) == m.coeff(r, c));
    ++count;
  }
  CHECK(count == 3);
  CHECK(out.str().find("0.33333333333333331") != std::string::npos);
  CHECK(out.str().find("1.0000000000000002") != std::string::npos);
}
