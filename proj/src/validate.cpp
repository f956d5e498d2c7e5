#include "perilps/validate.hpp"

#include <cmath>
#include <iomanip>
#include <numbers>
#include <ostream>
#include <random>
#include <sstream>

#include "perilps/error.hpp"
#include "perilps/harness.hpp"

namespace perilps {

namespace {

constexpr double kFd = 1e-3;

using Field = std::function<Vec2(double, const Vec2&)>;

// Fourth-order central differences.
Vec2 d1(const Field& u, double t, const Vec2& x, int axis) {
  Vec2 e = Vec2::Zero();
  e[axis] = kFd;
  return (u(t, x - 2 * e) - 8.0 * u(t, x - e) + 8.0 * u(t, x + e) - u(t, x + 2 * e)) / (12.0 * kFd);
}

Vec2 d2(const Field& u, double t, const Vec2& x, int axis) {
  Vec2 e = Vec2::Zero();
  e[axis] = kFd;
  return (-u(t, x - 2 * e) + 16.0 * u(t, x - e) - 30.0 * u(t, x) + 16.0 * u(t, x + e) - u(t, x + 2 * e)) /
         (12.0 * kFd * kFd);
}

Vec2 dxy(const Field& u, double t, const Vec2& x) {
  const Field ux = [&](double s, const Vec2& y) { return d1(u, s, y, 0); };
  return d1(ux, t, x, 1);
}

Vec2 dtt(const Field& u, double t, const Vec2& x) {
  const double k = kFd;
  return (-u(t - 2 * k, x) + 16.0 * u(t - k, x) - 30.0 * u(t, x) + 16.0 * u(t + k, x) - u(t + 2 * k, x)) /
         (12.0 * k * k);
}

Vec2 sample_point(const Domain& domain, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  if (domain.is_square()) {
    const auto& sq = domain.square_shape();
    return sq.center + Vec2((2.0 * unit(rng) - 1.0) * sq.half_width, (2.0 * unit(rng) - 1.0) * sq.half_width);
  }
  const auto& an = domain.annulus_shape();
  const double r = an.r_inner + unit(rng) * (an.r_outer - an.r_inner);
  const double phi = 2.0 * std::numbers::pi * unit(rng);
  return Vec2(r * std::cos(phi), r * std::sin(phi));
}

CheckResult make_check(std::string name, double measured, double tolerance, std::string detail = {}) {
  CheckResult c;
  c.name = std::move(name);
  c.measured = measured;
  c.tolerance = tolerance;
  c.passed = std::isfinite(measured) && measured <= tolerance;
  c.detail = std::move(detail);
  return c;
}

CheckResult failed_check(std::string name, double tolerance, const std::exception& e) {
  CheckResult c;
  c.name = std::move(name);
  c.measured = std::numeric_limits<double>::quiet_NaN();
  c.tolerance = tolerance;
  c.detail = e.what();
  return c;
}

// Monomial field of degree ≤ 2 in one component, with analytic div and
// analytic local operator −(λ+μ)∇div u − μΔu.
struct QuadraticField {
  int component;
  int px, py;

  Vec2 value(const Vec2& x) const {
    Vec2 v = Vec2::Zero();
    v[component] = std::pow(x.x(), px) * std::pow(x.y(), py);
    return v;
  }
  static double deriv(int p, double s, int order) {
    if (order == 0) return std::pow(s, p);
    if (order == 1) return p == 0 ? 0.0 : p * std::pow(s, p - 1);
    return p < 2 ? 0.0 : p * (p - 1) * std::pow(s, p - 2);
  }
  double partial(const Vec2& x, int ox, int oy) const { return deriv(px, x.x(), ox) * deriv(py, x.y(), oy); }
  double div(const Vec2& x) const { return component == 0 ? partial(x, 1, 0) : partial(x, 0, 1); }
  Vec2 local_operator(const Vec2& x, const Material& m) const {
    const double lap = partial(x, 2, 0) + partial(x, 0, 2);
    Vec2 grad_div;
    if (component == 0) {
      grad_div = Vec2(partial(x, 2, 0), partial(x, 1, 1));
    } else {
      grad_div = Vec2(partial(x, 1, 1), partial(x, 0, 2));
    }
    Vec2 out = -(m.lambda + m.mu) * grad_div;
    out[component] -= m.mu * lap;
    return out;
  }
};

std::vector<QuadraticField> quadratic_fields() {
  std::vector<QuadraticField> out;
  for (int c = 0; c < 2; ++c) {
    for (int total = 0; total <= 2; ++total) {
      for (int px = total; px >= 0; --px) out.push_back({c, px, total - px});
    }
  }
  return out;
}

}  // namespace

double manufactured_residual(const std::string& case_name, double nu, int samples) {
  const Material m = Material::plane_strain(1.0, nu);
  const BenchmarkCase c = find_case(case_name, m);
  std::mt19937_64 rng(20240611);
  double worst = 0.0;
  const Field& u = c.u0;
  for (int k = 0; k < samples; ++k) {
    const Vec2 x = sample_point(c.domain, rng);
    const double t = c.dynamic ? 0.05 + 0.05 * static_cast<double>(k) / samples : 0.0;
    const Vec2 uxx = d2(u, t, x, 0);
    const Vec2 uyy = d2(u, t, x, 1);
    const Vec2 uxy = dxy(u, t, x);
    const Vec2 grad_div(uxx.x() + uxy.y(), uxy.x() + uyy.y());
    const Vec2 lap = uxx + uyy;
    Vec2 r = -(m.lambda + m.mu) * grad_div - m.mu * lap - c.force(t, x);
    if (c.dynamic) r += m.rho * dtt(u, t, x);
    worst = std::max(worst, r.cwiseAbs().maxCoeff());
  }
  return worst;
}

std::vector<CheckResult> run_validation(const RunConfig& config) {
  std::vector<CheckResult> checks;

  {
    const struct {
      double nu, lambda, mu;
    } lame[] = {{0.3, 15.0 / 26.0, 5.0 / 13.0}, {0.49, 2450.0 / 149.0, 50.0 / 149.0}};
    double worst = 0.0;
    for (const auto& l : lame) {
      const Material m = Material::plane_strain(1.0, l.nu);
      worst = std::max({worst, std::abs(m.lambda - l.lambda) / l.lambda, std::abs(m.mu - l.mu) / l.mu});
    }
    checks.push_back(make_check("lame_constants", worst, 1e-14));
  }

  const double delta = 0.1;
  const double h = delta / 4.0;
  const Domain square = Domain::square({0.0, 0.0}, 0.5);
  const Material mat = Material::plane_strain(1.0, config.nu);
  for (const KernelFamily family : {KernelFamily::InverseR, KernelFamily::Constant}) {
    const std::string tag = std::string("[") + kernel_name(family) + "]";
    std::shared_ptr<const Setup> setup;
    try {
      setup = build_setup(square, GridKind::Cartesian, false, family, delta, h, config.cache_dir());
    } catch (const std::exception& e) {
      checks.push_back(failed_check("quadrature_reproduction" + tag, 1e-10, e));
      continue;
    }
    const auto& cloud = setup->cloud;
    const auto space = ReproducingSpace::for_kernel(setup->kernel);

    double norm_worst = 0.0;
    double repro_worst = 0.0;
    for (std::size_t i = 0; i < cloud.size(); ++i) {
      if (!cloud.tags[i].in_omega_plus_delta()) continue;
      repro_worst = std::max(repro_worst, reproduction_error(cloud, setup->rule, i, space));
      if (cloud.tags[i].region == Region::Interior) {
        const auto r = check_normalization(setup->kernel, cloud, setup->rule, i);
        norm_worst = std::max({norm_worst, r.a, r.b});
      }
    }
    double anti_worst = 0.0;
    for (std::size_t i = 0; i < cloud.size(); ++i) {
      const auto* nb = cloud.neighbors.begin(i);
      for (std::size_t k = 0; k < cloud.neighbors.count(i); ++k) {
        const Vec2 z = cloud.positions[nb[k]] - cloud.positions[i];
        const Vec2 fwd = setup->kernel.vector(z);
        const Vec2 back = setup->kernel.vector(Vec2(-z));
        anti_worst = std::max(anti_worst, (fwd + back).norm() / std::max(fwd.norm(), 1e-300));
      }
    }
    checks.push_back(make_check("kernel_antisymmetry" + tag, anti_worst, 1e-10));
    checks.push_back(make_check("kernel_normalization" + tag, norm_worst, 1e-10));
    checks.push_back(make_check("quadrature_reproduction" + tag, repro_worst, 1e-10));

    double theta_worst = 0.0;
    double op_worst = 0.0;
    for (const auto& q : quadratic_fields()) {
      const Eigen::VectorXd u = sample_field(cloud, [&](const Vec2& x) { return q.value(x); });
      const Eigen::VectorXd theta = dilatation(cloud, setup->rule, setup->kernel, u);
      const Eigen::VectorXd lu = apply_lps(cloud, setup->rule, setup->kernel, mat, u, theta);
      for (std::size_t i = 0; i < cloud.size(); ++i) {
        const Vec2& x = cloud.positions[i];
        if (cloud.tags[i].in_omega_plus_delta()) {
          theta_worst = std::max(theta_worst, std::abs(theta[static_cast<Eigen::Index>(i)] - q.div(x)));
        }
        if (cloud.tags[i].in_domain()) {
          const Vec2 diff = lu.segment<2>(2 * static_cast<Eigen::Index>(i)) - q.local_operator(x, mat);
          op_worst = std::max(op_worst, diff.cwiseAbs().maxCoeff());
        }
      }
    }
    checks.push_back(make_check("quadratic_exactness_theta" + tag, theta_worst, 1e-9));
    checks.push_back(make_check("quadratic_exactness_operator" + tag, op_worst, 1e-9));

    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    Eigen::VectorXd u(2 * static_cast<Eigen::Index>(cloud.size()));
    for (auto& v : u) v = dist(rng);
    const Eigen::VectorXd theta = dilatation(cloud, setup->rule, setup->kernel, u);
    const Eigen::VectorXd full = apply_lps(cloud, setup->rule, setup->kernel, mat, u, theta);
    const Eigen::VectorXd assembled = setup->op.apply(mat, u);
    const Eigen::VectorXd reference = setup->op.dofs.restrict(full);
    checks.push_back(make_check("assembly_vs_matrix_free" + tag,
                                (assembled - reference).lpNorm<Eigen::Infinity>() /
                                    reference.lpNorm<Eigen::Infinity>(),
                                1e-12));
  }

  {
    double worst = 0.0;
    for (const auto& name : case_names()) {
      for (const double nu : {0.3, 0.49}) worst = std::max(worst, manufactured_residual(name, nu));
    }
    checks.push_back(make_check("manufactured_residual", worst, 1e-6));
  }

  if (config.quick) return checks;

  RunOptions options;
  options.solve.method = config.method;
  options.solve.rel_tolerance = config.rel_tolerance;
  options.cache_dir = config.cache_dir();
  options.dt = config.dt;
  options.final_time = config.final_time;
  for (const std::string name : {"patch-static", "patch-dynamic"}) {
    for (const ExtensionStrategy s : {ExtensionStrategy::Smooth, ExtensionStrategy::Linear}) {
      const std::string label = name + "[" + strategy_name(s) + "]";
      try {
        const BenchmarkCase bench = find_case(name, mat);
        const bool mirror = s == ExtensionStrategy::Linear;
        const auto setup = build_setup(bench.domain, GridKind::Cartesian, mirror, config.kernel, delta, h,
                                       config.cache_dir());
        const SingleRun run = run_single(bench, *setup, s, mat, options);
        checks.push_back(make_check(label, run.l2_error, 1e-10));
      } catch (const std::exception& e) {
        checks.push_back(failed_check(label, 1e-10, e));
      }
    }
  }
  return checks;
}

void print_checks(std::ostream& out, const std::vector<CheckResult>& checks) {
  std::size_t width = 5;
  for (const auto& c : checks) width = std::max(width, c.name.size());
  const auto flags = out.flags();
  const auto prec = out.precision(3);
  for (const auto& c : checks) {
    out << (c.passed ? "PASS  " : "FAIL  ") << std::left << std::setw(static_cast<int>(width)) << c.name
        << "  measured " << std::scientific << c.measured << "  tolerance " << c.tolerance;
    if (!c.detail.empty()) out << "  (" << c.detail << ")";
    out << '\n';
    out.flags(flags);
  }
  out.precision(prec);
}

}  // namespace perilps
