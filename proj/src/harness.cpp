#include "perilps/harness.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <numbers>
#include <ostream>

#include <boost/math/distributions/students_t.hpp>

#include "perilps/error.hpp"

namespace perilps {

namespace {

constexpr double kEps = std::numeric_limits<double>::epsilon();

BenchmarkCase patch_static() {
  BenchmarkCase c;
  c.name = "patch-static";
  c.patch = true;
  c.domain = Domain::square({0.0, 0.0}, 0.25);
  c.u0 = [](double, const Vec2& x) { return Vec2(3.0 * x.x() + 2.0 * x.y(), -x.x() + 2.0 * x.y()); };
  c.force = [](double, const Vec2&) { return Vec2::Zero().eval(); };
  c.default_deltas = {0.2, 0.1, 0.05, 0.025};
  return c;
}

BenchmarkCase patch_dynamic() {
  BenchmarkCase c;
  c.name = "patch-dynamic";
  c.dynamic = true;
  c.patch = true;
  c.domain = Domain::square({0.0, 0.0}, 0.25);
  c.u0 = [](double t, const Vec2& x) { return Vec2(t + 3.0 * x.x() + 2.0 * x.y(), t - x.x() + 2.0 * x.y()); };
  c.force = [](double, const Vec2&) { return Vec2::Zero().eval(); };
  c.phi = [](double, const Vec2& x) { return Vec2(3.0 * x.x() + 2.0 * x.y(), -x.x() + 2.0 * x.y()); };
  c.psi = [](double, const Vec2&) { return Vec2(1.0, 1.0); };
  c.default_deltas = {0.2, 0.1, 0.05, 0.025};
  return c;
}

BenchmarkCase nonlinear_static(const Material& m) {
  BenchmarkCase c;
  c.name = "nonlinear-static";
  c.domain = Domain::square({0.0, 0.0}, 0.5);
  const double a = 0.9, cc = 1.4, b = 1.6;
  c.params = {{"A", a}, {"C", cc}, {"b", b}};
  c.u0 = [=](double, const Vec2& x) { return Vec2(a * x.x() + cc * std::sin(b * x.x()), 0.0); };
  const double stiff = m.lambda + 2.0 * m.mu;
  c.force = [=](double, const Vec2& x) { return Vec2(stiff * b * b * cc * std::sin(b * x.x()), 0.0); };
  c.default_deltas = {0.2, 0.1, 0.05, 0.025};
  return c;
}

BenchmarkCase nonlinear_dynamic(const Material& m) {
  BenchmarkCase c;
  c.name = "nonlinear-dynamic";
  c.dynamic = true;
  c.domain = Domain::square({0.0, 0.0}, 0.5);
  const double a_lin = 0.9, b_amp = 0.1, cc = 1.4, a = 1.0, b = 1.2;
  c.params = {{"A", a_lin}, {"B", b_amp}, {"C", cc}, {"a", a}, {"b", b}};
  c.u0 = [=](double t, const Vec2& x) {
    return Vec2(a_lin * x.x() + b_amp * std::sin(a * t) * x.x() + cc * std::sin(b * x.x()), 0.0);
  };
  const double stiff = m.lambda + 2.0 * m.mu;
  const double rho = m.rho;
  c.force = [=](double t, const Vec2& x) {
    return Vec2(stiff * b * b * cc * std::sin(b * x.x()) - rho * a * a * b_amp * x.x() * std::sin(a * t), 0.0);
  };
  c.phi = [=](double, const Vec2& x) { return Vec2(a_lin * x.x() + cc * std::sin(b * x.x()), 0.0); };
  c.psi = [=](double, const Vec2& x) { return Vec2(b_amp * a * x.x(), 0.0); };
  c.default_deltas = {0.2, 0.1, 0.05, 0.025};
  return c;
}

std::pair<double, double> cylinder_constants(const Material& m, double p0, double r0, double r1) {
  const double k = m.youngs;
  const double nu = m.poisson;
  const double denom = k * (r1 * r1 - r0 * r0);
  return {(1.0 + nu) * (1.0 - 2.0 * nu) * p0 * r0 * r0 / denom, (1.0 + nu) * p0 * r0 * r0 * r1 * r1 / denom};
}

BenchmarkCase cylinder(const Material& m, bool dynamic) {
  BenchmarkCase c;
  c.name = dynamic ? "cylinder-dynamic" : "cylinder-static";
  c.dynamic = dynamic;
  const double r0 = 1.0, r1 = 1.5, p0 = 0.1;
  c.domain = Domain::annulus(r0, r1);
  const auto [a, b] = cylinder_constants(m, p0, r0, r1);
  c.params = {{"R0", r0}, {"R1", r1}, {"p0", p0}, {"A", a}, {"B", b}, {"K", m.youngs}};
  auto shape = [a = a, b = b](const Vec2& x) { return Vec2(a * x + b * x / x.squaredNorm()); };
  if (dynamic) {
    c.u0 = [shape](double t, const Vec2& x) { return Vec2(t * shape(x)); };
    c.phi = [](double, const Vec2&) { return Vec2::Zero().eval(); };
    c.psi = [shape](double, const Vec2& x) { return shape(x); };
  } else {
    c.u0 = [shape](double, const Vec2& x) { return shape(x); };
  }
  c.force = [](double, const Vec2&) { return Vec2::Zero().eval(); };
  c.default_deltas = {0.2, 0.1, 0.05};
  return c;
}

}  // namespace

std::vector<BenchmarkCase> case_catalog(const Material& material) {
  return {patch_static(),         nonlinear_static(material), cylinder(material, false),
          patch_dynamic(),        nonlinear_dynamic(material), cylinder(material, true)};
}

std::vector<std::string> case_names() {
  return {"patch-static", "nonlinear-static", "cylinder-static", "patch-dynamic", "nonlinear-dynamic",
          "cylinder-dynamic"};
}

BenchmarkCase find_case(const std::string& name, const Material& material) {
  for (auto& c : case_catalog(material)) {
    if (c.name == name) return c;
  }
  throw InputError("unknown case '" + name + "'");
}

double l2_error(const PointCloud& cloud, const Eigen::VectorXd& u, const VectorFunction& u0, double t) {
  double sum = 0.0;
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    if (!cloud.tags[i].in_domain()) continue;
    const Vec2 e = u.segment<2>(2 * static_cast<Eigen::Index>(i)) - u0(t, cloud.positions[i]);
    sum += cloud.cell_areas[i] * e.squaredNorm();
  }
  return std::sqrt(sum);
}

Eigen::VectorXd error_field(const PointCloud& cloud, const Eigen::VectorXd& u, const VectorFunction& u0, double t) {
  Eigen::VectorXd v = Eigen::VectorXd::Zero(u.size());
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    if (!cloud.tags[i].in_domain()) continue;
    const auto seg = 2 * static_cast<Eigen::Index>(i);
    v.segment<2>(seg) = u.segment<2>(seg) - u0(t, cloud.positions[i]);
  }
  return v;
}

RateFit fit_rate(const std::vector<std::pair<double, double>>& rows) {
  RateFit fit;
  std::vector<std::pair<double, double>> logs;
  for (const auto& [delta, err] : rows) {
    if (!(delta > 0.0)) throw InputError("fit_rate needs positive δ values");
    if (std::isfinite(err) && err > 100.0 * kEps) logs.emplace_back(std::log(delta), std::log(err));
  }
  fit.used = logs.size();
  if (logs.empty() && !rows.empty()) {
    fit.exact = true;
    return fit;
  }
  if (logs.size() < 2) throw InputError("fit_rate needs at least two rows above the round-off floor");
  const double n = static_cast<double>(logs.size());
  double mx = 0.0, my = 0.0;
  for (const auto& [x, y] : logs) {
    mx += x;
    my += y;
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0;
  for (const auto& [x, y] : logs) {
    sxx += (x - mx) * (x - mx);
    sxy += (x - mx) * (y - my);
  }
  if (sxx == 0.0) throw InputError("fit_rate needs distinct δ values");
  fit.rate = sxy / sxx;
  if (logs.size() > 2) {
    double ssr = 0.0;
    for (const auto& [x, y] : logs) {
      const double r = y - (my + fit.rate * (x - mx));
      ssr += r * r;
    }
    const double dof = n - 2.0;
    const double se = std::sqrt(ssr / dof / sxx);
    const boost::math::students_t dist(dof);
    fit.halfwidth = boost::math::quantile(boost::math::complement(dist, 0.025)) * se;
  }
  return fit;
}

double theoretical_rate(ExtensionStrategy s) {
  switch (s) {
    case ExtensionStrategy::Smooth: return 2.0;
    case ExtensionStrategy::Constant: return 0.5;
    case ExtensionStrategy::Linear: return 1.5;
  }
  return 0.0;
}

std::shared_ptr<const Setup> build_setup(const Domain& domain, GridKind grid, bool mirror, KernelFamily family,
                                         double delta, double h, const std::string& cache_dir) {
  PointCloud cloud = grid == GridKind::Polar ? build_polar_cloud(domain, h, delta, mirror)
                                              : build_cartesian_cloud(domain, h, delta, mirror);
  KernelSpec kernel(family, delta);
  QuadratureRule rule;
  bool loaded = false;
  std::filesystem::path path;
  if (!cache_dir.empty()) {
    path = std::filesystem::path(cache_dir) / weight_cache_name(cloud, family);
    if (std::filesystem::exists(path)) {
      std::ifstream in(path, std::ios::binary);
      rule = read_weight_cache(in, cloud);
      loaded = true;
    }
  }
  if (!loaded) {
    rule = build_quadrature(cloud, ReproducingSpace::for_kernel(kernel));
    if (!cache_dir.empty()) {
      std::filesystem::create_directories(cache_dir);
      std::ofstream out(path, std::ios::binary);
      write_weight_cache(out, cloud, rule);
    }
  }
  LpsOperator op = LpsOperator::build(cloud, rule, kernel);
  return std::make_shared<const Setup>(Setup{std::move(cloud), std::move(rule), kernel, std::move(op)});
}

SingleRun run_single(const BenchmarkCase& bench, const Setup& setup, ExtensionStrategy strategy,
                     const Material& material, const RunOptions& options,
                     const std::function<void(std::size_t, const NewmarkState&)>& on_step) {
  const BoundaryPlan plan(strategy, bench.u0, setup.cloud);
  const Discretization disc{&setup.cloud, &setup.rule, setup.kernel, material, &setup.op};
  SingleRun run;
  run.delta = setup.cloud.delta;
  run.h = setup.cloud.h;
  if (bench.dynamic) {
    DynamicConfig cfg;
    cfg.dt = options.dt;
    cfg.final_time = options.final_time;
    cfg.solve = options.solve;
    cfg.on_step = on_step;
    const DynamicResult result = run_dynamic(disc, plan, bench.force, bench.phi, bench.psi, cfg);
    run.u = result.final_state.u;
    run.final_time = result.final_state.t;
    run.certified_residual = result.max_certified_residual;
  } else {
    const StaticSolution sol = solve_static(disc, plan, bench.force, 0.0, options.solve);
    run.u = sol.u;
    run.certified_residual = sol.certified_residual;
  }
  run.l2_error = l2_error(setup.cloud, run.u, bench.u0, run.final_time);
  run.g_inf = g_operator_linf(setup.cloud, setup.rule, setup.kernel,
                              error_field(setup.cloud, run.u, bench.u0, run.final_time));
  return run;
}

bool ConvergenceReport::complete() const {
  return std::all_of(rows.begin(), rows.end(), [](const ConvergenceRow& r) { return r.ok; });
}

namespace {

void fit_report(ConvergenceReport& report, bool patch) {
  std::vector<std::pair<double, double>> l2, g;
  for (const auto& r : report.rows) {
    if (!r.ok) continue;
    l2.emplace_back(r.delta, r.l2_error);
    g.emplace_back(r.delta, r.g_inf);
  }
  auto safe_fit = [&](const std::vector<std::pair<double, double>>& rows) {
    if (patch) {
      RateFit f;
      f.exact = true;
      return f;
    }
    try {
      return fit_rate(rows);
    } catch (const InputError&) {
      RateFit f;
      f.rate = std::numeric_limits<double>::quiet_NaN();
      return f;
    }
  };
  report.l2_rate = safe_fit(l2);
  report.g_rate = safe_fit(g);
}

}  // namespace

std::vector<ConvergenceReport> run_study(const std::string& case_name, const std::vector<StudyVariant>& variants,
                                         KernelFamily kernel, GridKind grid, const std::vector<double>& deltas,
                                         const RunOptions& options) {
  if (deltas.empty()) throw InputError("δ sequence is empty");
  for (std::size_t k = 1; k < deltas.size(); ++k) {
    if (!(deltas[k] < deltas[k - 1])) throw InputError("δ sequence must be strictly decreasing");
  }
  if (!(options.delta_over_h > 0.0)) throw InputError("delta_over_h must be positive");

  std::vector<ConvergenceReport> reports;
  std::vector<BenchmarkCase> cases;
  std::vector<Material> materials;
  for (const auto& v : variants) {
    const Material m = Material::plane_strain(1.0, v.nu);
    materials.push_back(m);
    cases.push_back(find_case(case_name, m));
    ConvergenceReport r;
    r.case_name = case_name;
    r.strategy = v.strategy;
    r.kernel = kernel;
    r.nu = v.nu;
    r.grid = grid;
    r.mirror = v.mirror.value_or(v.strategy == ExtensionStrategy::Linear);
    r.theoretical = theoretical_rate(v.strategy);
    reports.push_back(r);
  }
  const Domain domain = cases.front().domain;

  for (const double delta : deltas) {
    const double h = delta / options.delta_over_h;
    for (const bool mirror : {false, true}) {
      std::vector<std::size_t> members;
      for (std::size_t k = 0; k < variants.size(); ++k) {
        if (reports[k].mirror == mirror) members.push_back(k);
      }
      if (members.empty()) continue;
      std::shared_ptr<const Setup> setup;
      std::string setup_error;
      try {
        setup = build_setup(domain, grid, mirror, kernel, delta, h, options.cache_dir);
      } catch (const std::exception& e) {
        setup_error = e.what();
      }
      for (const std::size_t k : members) {
        ConvergenceRow row;
        row.delta = delta;
        row.h = h;
        if (!setup) {
          row.ok = false;
          row.message = setup_error;
        } else {
          try {
            const SingleRun run = run_single(cases[k], *setup, variants[k].strategy, materials[k], options);
            row.l2_error = run.l2_error;
            row.g_inf = run.g_inf;
          } catch (const std::exception& e) {
            row.ok = false;
            row.message = e.what();
          }
        }
        reports[k].rows.push_back(row);
      }
    }
  }
  for (std::size_t k = 0; k < reports.size(); ++k) fit_report(reports[k], cases[k].patch);
  return reports;
}

ConvergenceReport run_convergence(const std::string& case_name, ExtensionStrategy strategy, KernelFamily kernel,
                                  double nu, GridKind grid, const std::vector<double>& deltas,
                                  const RunOptions& options) {
  return run_study(case_name, {{strategy, nu, std::nullopt}}, kernel, grid, deltas, options).front();
}

namespace {

void write_number(std::ostream& out, double v) {
  if (std::isnan(v)) {
    out << "nan";
  } else {
    out << v;
  }
}

}  // namespace

void write_report_csv(std::ostream& out, const std::vector<ConvergenceReport>& reports) {
  const auto old = out.precision(17);
  out << "case,strategy,kernel,nu,grid,delta,h,l2_error,g_inf\n";
  for (const auto& r : reports) {
    for (const auto& row : r.rows) {
      out << r.case_name << ',' << strategy_name(r.strategy) << ',' << kernel_name(r.kernel) << ',' << r.nu << ','
          << grid_name(r.grid) << ',' << row.delta << ',' << row.h << ',';
      if (row.ok) {
        write_number(out, row.l2_error);
        out << ',';
        write_number(out, row.g_inf);
      } else {
        out << "missing,missing";
      }
      out << '\n';
    }
  }
  out.precision(old);
}

void write_rates_csv(std::ostream& out, const std::vector<ConvergenceReport>& reports) {
  const auto old = out.precision(6);
  out << "case,strategy,metric,rate,halfwidth\n";
  auto line = [&](const ConvergenceReport& r, const char* metric, const RateFit& f) {
    out << r.case_name << ',' << strategy_name(r.strategy) << ',' << metric << ',';
    if (f.exact) {
      out << "exact,0";
    } else {
      write_number(out, f.rate);
      out << ',';
      write_number(out, f.halfwidth);
    }
    out << '\n';
  };
  for (const auto& r : reports) {
    line(r, "l2", r.l2_rate);
    line(r, "g_inf", r.g_rate);
    out << r.case_name << ',' << strategy_name(r.strategy) << ",theory_l2," << r.theoretical << ",0\n";
  }
  out.precision(old);
}

}  // namespace perilps
