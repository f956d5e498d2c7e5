#include <doctest.h>

#include <cmath>
#include <cstring>
#include <sstream>

#include "perilps/error.hpp"
#include "perilps/harness.hpp"
#include "perilps/solver.hpp"

using namespace perilps;

namespace {

Vec2 at(const Eigen::VectorXd& v, std::size_t i) { return v.segment<2>(2 * static_cast<Eigen::Index>(i)); }

const BodyForce no_force = [](double, const Vec2&) { return Vec2::Zero().eval(); };
const VectorFunction zero_field = [](double, const Vec2&) { return Vec2::Zero().eval(); };

struct Problem {
  std::shared_ptr<const Setup> setup;
  Material material;
  Discretization disc() const { return {&setup->cloud, &setup->rule, setup->kernel, material, &setup->op}; }
};

Problem make_problem(const BenchmarkCase& bench, double delta, bool mirror, double nu = 0.3,
                     KernelFamily family = KernelFamily::InverseR) {
  return {build_setup(bench.domain, GridKind::Cartesian, mirror, family, delta, delta / 4), Material::plane_strain(1.0, nu)};
}

double max_nodal_error(const PointCloud& cloud, const Eigen::VectorXd& u, const VectorFunction& u0, double t) {
  double e = 0.0;
  for (std::size_t i = 0; i < cloud.size(); ++i)
    if (cloud.tags[i].in_domain()) e = std::max(e, (at(u, i) - u0(t, cloud.positions[i])).norm());
  return e;
}

}  // namespace

TEST_CASE("method names") {
  for (const auto m : {SolveMethod::Direct, SolveMethod::CG, SolveMethod::BiCGSTAB, SolveMethod::Auto})
    CHECK(parse_method(method_name(m)) == m);
  CHECK_THROWS_AS(parse_method("gmres"), InputError);
}

TEST_CASE("static patch test with every solver") {
  const Material m = Material::plane_strain(1.0, 0.3);
  const auto bench = find_case("patch-static", m);
  for (const auto s : {ExtensionStrategy::Smooth, ExtensionStrategy::Linear}) {
    const auto p = make_problem(bench, 0.05, s == ExtensionStrategy::Linear);
    const BoundaryPlan plan(s, bench.u0, p.setup->cloud);
    for (const auto method : {SolveMethod::Direct, SolveMethod::BiCGSTAB, SolveMethod::Auto, SolveMethod::CG}) {
      if (method == SolveMethod::CG && s == ExtensionStrategy::Linear) continue;
      StaticSolveConfig cfg;
      cfg.method = method;
      const auto sol = solve_static(p.disc(), plan, bench.force, 0.0, cfg);
      CAPTURE(method_name(method));
      CHECK(max_nodal_error(p.setup->cloud, sol.u, bench.u0, 0.0) < 1e-10);
      CHECK(sol.certified_residual < 1e-10);
      for (std::size_t i = 0; i < p.setup->cloud.size(); ++i) {
        if (p.setup->cloud.tags[i].in_omega_plus_delta()) {
          CHECK(std::abs(sol.theta[static_cast<Eigen::Index>(i)] - 5.0) < 1e-9);
        }
      }
    }
  }
}

TEST_CASE("zero data gives the zero solution") {
  const Material m = Material::plane_strain(1.0, 0.49);
  const auto bench = find_case("nonlinear-static", m);
  const auto p = make_problem(bench, 0.2, true, 0.49);
  for (const auto s : {ExtensionStrategy::Smooth, ExtensionStrategy::Constant, ExtensionStrategy::Linear}) {
    const BoundaryPlan plan(s, zero_field, p.setup->cloud);
    const auto sol = solve_static(p.disc(), plan, no_force, 0.0, {});
    CHECK(sol.u.lpNorm<Eigen::Infinity>() == 0.0);
  }
}

TEST_CASE("nonlinear static smooth solve matches the recorded baseline") {
  const Material m = Material::plane_strain(1.0, 0.3);
  const auto bench = find_case("nonlinear-static", m);
  const auto p = make_problem(bench, 0.05, false);
  const BoundaryPlan plan(ExtensionStrategy::Smooth, bench.u0, p.setup->cloud);
  const auto sol = solve_static(p.disc(), plan, bench.force, 0.0, {});
  const double err = l2_error(p.setup->cloud, sol.u, bench.u0, 0.0);
  // Baseline from the first verified convergence run (δ = 0.05, δ/h = 4).
  CHECK(err == doctest::Approx(1.14e-5).epsilon(0.02));
  CHECK(sol.certified_residual < 1e-9);
}

TEST_CASE("solver selection and failure reporting") {
  const Material m = Material::plane_strain(1.0, 0.3);
  const auto bench = find_case("nonlinear-static", m);
  const auto p = make_problem(bench, 0.1, true);
  const BoundaryPlan smooth(ExtensionStrategy::Smooth, bench.u0, p.setup->cloud);
  const BoundaryPlan linear(ExtensionStrategy::Linear, bench.u0, p.setup->cloud);
  const auto a_sym = assemble(p.setup->op, m, smooth, p.setup->cloud, bench.force, 0.0);
  const auto a_lin = assemble(p.setup->op, m, linear, p.setup->cloud, bench.force, 0.0);
  CHECK(is_numerically_symmetric(a_sym.matrix, 1e-9));
  CHECK_FALSE(is_numerically_symmetric(a_lin.matrix, 1e-9));

  StaticSolveConfig cfg;
  LinearSolver s1(a_sym.matrix, cfg);
  CHECK(s1.method() == SolveMethod::CG);
  const Eigen::VectorXd x1 = s1.solve(a_sym.rhs);
  CHECK((a_sym.matrix * x1 - a_sym.rhs).norm() <= 1e-11 * a_sym.rhs.norm());
  CHECK(s1.last_iterations() > 0);

  LinearSolver s2(a_lin.matrix, cfg);
  CHECK(s2.method() == SolveMethod::BiCGSTAB);
  const Eigen::VectorXd x2 = s2.solve(a_lin.rhs);
  CHECK((a_lin.matrix * x2 - a_lin.rhs).norm() <= 1e-11 * a_lin.rhs.norm());

  StaticSolveConfig starved;
  starved.max_iterations = 2;
  StaticSolveConfig fixed = starved;
  fixed.method = SolveMethod::CG;
  LinearSolver s3(a_sym.matrix, fixed);
  CHECK_THROWS_AS(s3.solve(a_sym.rhs), NumericalError);
  LinearSolver s4(a_lin.matrix, starved);
  const Eigen::VectorXd x4 = s4.solve(a_lin.rhs);
  CHECK(s4.method() == SolveMethod::Direct);
  CHECK((x4 - x2).norm() < 1e-9 * x2.norm());
}

TEST_CASE("step counts") {
  CHECK(step_count(0.1, 0.01) == 10);
  CHECK(step_count(0.0, 0.01) == 0);
  CHECK(step_count(0.105, 0.01) == 11);
  CHECK(step_count(1.0, 0.1) == 10);
}

TEST_CASE("dynamic patch test is exact at every step") {
  const Material m = Material::plane_strain(1.0, 0.3);
  const auto bench = find_case("patch-dynamic", m);
  for (const auto s : {ExtensionStrategy::Smooth, ExtensionStrategy::Linear}) {
    const auto p = make_problem(bench, 0.05, s == ExtensionStrategy::Linear);
    const BoundaryPlan plan(s, bench.u0, p.setup->cloud);
    DynamicConfig cfg;
    std::size_t calls = 0;
    double worst = 0.0;
    NewmarkState prev;
    cfg.on_step = [&](std::size_t n, const NewmarkState& st) {
      ++calls;
      worst = std::max(worst, max_nodal_error(p.setup->cloud, st.u, bench.u0, st.t));
      CHECK(st.t == doctest::Approx(0.01 * static_cast<double>(n)).epsilon(1e-14));
      if (n > 0) {
        // Newmark update identities, checked on the returned states.
        const double dt = st.dt;
        const Eigen::VectorXd a = (4.0 / (dt * dt)) * (st.u - prev.u - dt * prev.u_dot) - prev.u_ddot;
        CHECK((a - st.u_ddot).lpNorm<Eigen::Infinity>() < 1e-6);
        const Eigen::VectorXd v = prev.u_dot + 0.5 * dt * (prev.u_ddot + st.u_ddot);
        CHECK((v - st.u_dot).lpNorm<Eigen::Infinity>() < 1e-12);
      }
      prev = st;
    };
    const auto res = run_dynamic(p.disc(), plan, bench.force, bench.phi, bench.psi, cfg);
    CHECK(res.steps == 10);
    CHECK(calls == 11);
    CHECK(worst < 1e-10);
    CHECK(res.max_certified_residual < 1e-9);
  }
}

TEST_CASE("zero dynamic data stays zero and T = 0 returns the initial state") {
  const Material m = Material::plane_strain(1.0, 0.3);
  const auto bench = find_case("nonlinear-dynamic", m);
  const auto p = make_problem(bench, 0.2, false);
  const BoundaryPlan zero_plan(ExtensionStrategy::Smooth, zero_field, p.setup->cloud);
  DynamicConfig cfg;
  const auto res = run_dynamic(p.disc(), zero_plan, no_force, zero_field, zero_field, cfg);
  CHECK(res.final_state.u.lpNorm<Eigen::Infinity>() == 0.0);

  const BoundaryPlan plan(ExtensionStrategy::Smooth, bench.u0, p.setup->cloud);
  cfg.final_time = 0.0;
  const auto init = run_dynamic(p.disc(), plan, bench.force, bench.phi, bench.psi, cfg);
  CHECK(init.steps == 0);
  CHECK(init.final_state.t == 0.0);
  NewmarkStepper stepper(p.disc(), plan, bench.force, 0.01, {});
  const auto s0 = stepper.initial_state(bench.phi, bench.psi);
  CHECK((init.final_state.u - s0.u).lpNorm<Eigen::Infinity>() == 0.0);
}

TEST_CASE("each Newmark step satisfies the discrete momentum balance") {
  const Material m = Material::plane_strain(1.0, 0.49);
  const auto bench = find_case("nonlinear-dynamic", m);
  const auto p = make_problem(bench, 0.1, true, 0.49);
  const BoundaryPlan plan(ExtensionStrategy::Linear, bench.u0, p.setup->cloud);
  const auto disc = p.disc();
  NewmarkStepper stepper(disc, plan, bench.force, 0.01, {});
  auto st = stepper.initial_state(bench.phi, bench.psi);
  for (int n = 0; n < 3; ++n) {
    st = stepper.step(st);
    const auto& c = p.setup->cloud;
    const auto lu = apply_lps(c, p.setup->rule, p.setup->kernel, m, st.u, dilatation(c, p.setup->rule, p.setup->kernel, st.u));
    double worst = 0.0, scale = 0.0;
    for (std::size_t i = 0; i < c.size(); ++i) {
      if (!c.tags[i].in_domain()) continue;
      const Vec2 f = bench.force(st.t, c.positions[i]);
      worst = std::max(worst, (m.rho * at(st.u_ddot, i) + at(lu, i) - f).norm());
      scale = std::max(scale, at(lu, i).norm());
    }
    CHECK(worst < 1e-8 * scale);
  }
}

TEST_CASE("Newmark converges at second order in the time step") {
  const Material m = Material::plane_strain(1.0, 0.3);
  const auto bench = find_case("nonlinear-dynamic", m);
  const auto p = make_problem(bench, 0.2, false);
  const BoundaryPlan plan(ExtensionStrategy::Smooth, bench.u0, p.setup->cloud);
  std::vector<Eigen::VectorXd> finals;
  for (const double dt : {0.04, 0.02, 0.01}) {
    DynamicConfig cfg;
    cfg.dt = dt;
    cfg.final_time = 0.08;
    finals.push_back(run_dynamic(p.disc(), plan, bench.force, bench.phi, bench.psi, cfg).final_state.u);
  }
  const double d1 = (finals[0] - finals[1]).norm();
  const double d2 = (finals[1] - finals[2]).norm();
  CHECK(d1 / d2 == doctest::Approx(4.0).epsilon(0.15));
}

TEST_CASE("time error is subdominant at benchmark settings") {
  const Material m = Material::plane_strain(1.0, 0.3);
  const auto bench = find_case("nonlinear-dynamic", m);
  const auto p = make_problem(bench, 0.1, false);
  const BoundaryPlan plan(ExtensionStrategy::Smooth, bench.u0, p.setup->cloud);
  std::vector<double> errs;
  for (const double dt : {0.01, 0.005}) {
    DynamicConfig cfg;
    cfg.dt = dt;
    const auto res = run_dynamic(p.disc(), plan, bench.force, bench.phi, bench.psi, cfg);
    errs.push_back(l2_error(p.setup->cloud, res.final_state.u, bench.u0, 0.1));
  }
  CHECK(std::abs(errs[0] - errs[1]) < 0.05 * errs[0]);
}

TEST_CASE("a massless step solves the static problem at the new time") {
  Material m = Material::plane_strain(1.0, 0.3);
  m.rho = 0.0;
  const auto bench = find_case("nonlinear-dynamic", m);
  const auto p = Problem{make_problem(bench, 0.2, false).setup, m};
  const BoundaryPlan plan(ExtensionStrategy::Smooth, bench.u0, p.setup->cloud);
  NewmarkStepper stepper(p.disc(), plan, bench.force, 0.05, {});
  const auto st = stepper.step(stepper.initial_state(bench.phi, bench.psi));
  const auto sol = solve_static(p.disc(), plan, bench.force, 0.05, {});
  CHECK((st.u - sol.u).lpNorm<Eigen::Infinity>() < 1e-10 * sol.u.lpNorm<Eigen::Infinity>());
}

TEST_CASE("trajectories are bit-identical across runs") {
  const Material m = Material::plane_strain(1.0, 0.3);
  const auto bench = find_case("nonlinear-dynamic", m);
  const auto p = make_problem(bench, 0.2, true);
  const BoundaryPlan plan(ExtensionStrategy::Linear, bench.u0, p.setup->cloud);
  const auto a = run_dynamic(p.disc(), plan, bench.force, bench.phi, bench.psi, {});
  const auto b = run_dynamic(p.disc(), plan, bench.force, bench.phi, bench.psi, {});
  REQUIRE(a.final_state.u.size() == b.final_state.u.size());
  CHECK(std::memcmp(a.final_state.u.data(), b.final_state.u.data(),
                    sizeof(double) * static_cast<std::size_t>(a.final_state.u.size())) == 0);
}

TEST_CASE("snapshot CSV") {
  const auto cloud = build_cartesian_cloud(Domain::square({0, 0}, 0.25), 0.125, 0.25, false);
  const Eigen::VectorXd u = Eigen::VectorXd::Constant(2 * static_cast<Eigen::Index>(cloud.size()), 0.5);
  std::ostringstream out;
  write_snapshot_csv(out, cloud, u);
  std::istringstream in(out.str());
  std::string line;
  std::getline(in, line);
  CHECK(line == "node id,x,y,u1,u2");
  std::size_t rows = 0;
  while (std::getline(in, line)) ++rows;
  CHECK(rows == 25);
}
