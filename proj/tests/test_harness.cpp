#include <doctest.h>

#include <cmath>
#include <cstring>
#include <filesystem>
#include <random>
#include <sstream>

#include "perilps/error.hpp"
#include "perilps/harness.hpp"
#include "perilps/validate.hpp"

using namespace perilps;

namespace {

std::vector<std::string> lines(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) out.push_back(line);
  return out;
}

}  // namespace

TEST_CASE("catalog formulas") {
  const Material m = Material::plane_strain(1.0, 0.3);
  CHECK(case_names().size() == 6);
  for (const auto& name : case_names()) CHECK(find_case(name, m).name == name);
  CHECK_THROWS_AS(find_case("bogus", m), InputError);

  const auto ps = find_case("patch-static", m);
  CHECK((ps.u0(0.0, Vec2(0.3, 0.1)) - Vec2(1.1, -0.1)).norm() < 1e-15);
  CHECK(ps.force(0.0, Vec2(0.1, 0.2)).norm() == 0.0);
  CHECK(ps.domain.square_shape().half_width == 0.25);

  const auto pd = find_case("patch-dynamic", m);
  CHECK((pd.u0(0.1, Vec2(0.3, 0.1)) - Vec2(1.2, 0.0)).norm() < 1e-15);
  CHECK((pd.phi(0.0, Vec2(0.3, 0.1)) - Vec2(1.1, -0.1)).norm() < 1e-15);
  CHECK((pd.psi(0.0, Vec2(0.3, 0.1)) - Vec2(1.0, 1.0)).norm() == 0.0);

  const auto ns = find_case("nonlinear-static", m);
  CHECK(ns.u0(0.0, Vec2(0, 0)).norm() == 0.0);
  CHECK(ns.domain.square_shape().half_width == 0.5);

  const auto cs = find_case("cylinder-static", m);
  CHECK(cs.params.at("A") == doctest::Approx(0.0416).epsilon(1e-12));
  CHECK(cs.params.at("B") == doctest::Approx(0.234).epsilon(1e-12));
  const double a = cs.params.at("A"), b = cs.params.at("B");
  CHECK((cs.u0(0.0, Vec2(1.6, 0.0)) - Vec2(a * 1.6 + b / 1.6, 0.0)).norm() < 1e-15);

  const auto cd = find_case("cylinder-dynamic", m);
  CHECK((cd.u0(0.1, Vec2(1.2, 0.3)) - 0.1 * cs.u0(0.0, Vec2(1.2, 0.3))).norm() < 1e-15);
  CHECK(cd.phi(0.0, Vec2(1.2, 0.3)).norm() == 0.0);
  CHECK(cd.force(0.05, Vec2(1.2, 0.3)).norm() == 0.0);
  CHECK(cs.default_deltas.back() < 0.25);
}

TEST_CASE("manufactured solutions satisfy the local equations") {
  for (const auto& name : case_names()) {
    for (const double nu : {0.3, 0.49}) {
      CAPTURE(name);
      CHECK(manufactured_residual(name, nu) < 1e-6);
    }
  }
}

TEST_CASE("L2 error norm") {
  const auto cloud = build_cartesian_cloud(Domain::square({0, 0}, 0.5), 0.025, 0.1, false);
  const VectorFunction u0 = [](double, const Vec2& x) { return Vec2(std::sin(x.x()), x.y()); };
  const auto exact = sample_field(cloud, [&](const Vec2& x) { return u0(0.0, x); });
  CHECK(l2_error(cloud, exact, u0, 0.0) == 0.0);
  const double eps = 1e-3;
  const auto off = sample_field(cloud, [&](const Vec2& x) { return Vec2(u0(0.0, x) + Vec2(eps, 0.0)); });
  CHECK(l2_error(cloud, off, u0, 0.0) == doctest::Approx(eps).epsilon(0.05));
  const auto v = error_field(cloud, off, u0, 0.0);
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const Vec2 vi = v.segment<2>(2 * static_cast<Eigen::Index>(i));
    CHECK((vi - (cloud.tags[i].in_domain() ? Vec2(eps, 0.0) : Vec2(0.0, 0.0))).norm() < 1e-15);
  }
}

TEST_CASE("rate fitting") {
  CHECK(fit_rate({{0.2, 0.04}, {0.1, 0.01}}).rate == doctest::Approx(2.0).epsilon(1e-14));
  CHECK(fit_rate({{0.2, 0.04}, {0.1, 0.01}}).halfwidth == 0.0);
  CHECK(std::abs(fit_rate({{0.2, 0.3}, {0.1, 0.3}}).rate) < 1e-14);

  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> noise(-1.0, 1.0);
  std::vector<std::pair<double, double>> rows;
  for (const double d : {0.2, 0.1, 0.05, 0.025}) rows.emplace_back(d, 3 * std::pow(d, 1.5) * (1 + 0.01 * noise(rng)));
  const auto fit = fit_rate(rows);
  CHECK(fit.rate >= 1.4);
  CHECK(fit.rate <= 1.6);
  CHECK(fit.used == 4);

  // Half-width oracle: t_{0.975, 1} = 12.706204736174698 times the slope standard error.
  const std::vector<std::pair<double, double>> three = {{0.4, 1.0}, {0.2, 0.3}, {0.1, 0.06}};
  double mx = 0, my = 0;
  for (const auto& [d, e] : three) {
    mx += std::log(d) / 3;
    my += std::log(e) / 3;
  }
  double sxx = 0, sxy = 0;
  for (const auto& [d, e] : three) {
    sxx += std::pow(std::log(d) - mx, 2);
    sxy += (std::log(d) - mx) * (std::log(e) - my);
  }
  const double slope = sxy / sxx;
  double ssr = 0;
  for (const auto& [d, e] : three) ssr += std::pow(std::log(e) - my - slope * (std::log(d) - mx), 2);
  const auto f3 = fit_rate(three);
  CHECK(f3.rate == doctest::Approx(slope).epsilon(1e-13));
  CHECK(f3.halfwidth == doctest::Approx(12.706204736174698 * std::sqrt(ssr / sxx)).epsilon(1e-9));

  const auto floor = fit_rate({{0.2, 1e-15}, {0.1, 2e-16}});
  CHECK(floor.exact);
  const auto partial = fit_rate({{0.2, 1e-3}, {0.1, 2.5e-4}, {0.05, 1e-16}});
  CHECK(partial.used == 2);
  CHECK(partial.rate == doctest::Approx(2.0).epsilon(1e-12));
  CHECK_THROWS_AS(fit_rate({{0.2, 1e-3}, {0.1, 1e-17}}), InputError);
}

TEST_CASE("theoretical exponents") {
  CHECK(theoretical_rate(ExtensionStrategy::Smooth) == 2.0);
  CHECK(theoretical_rate(ExtensionStrategy::Constant) == 0.5);
  CHECK(theoretical_rate(ExtensionStrategy::Linear) == 1.5);
}

TEST_CASE("patch study is flagged exact and reports are well formed") {
  RunOptions opt;
  const auto reports = run_study("patch-static",
                                 {{ExtensionStrategy::Smooth, 0.3, std::nullopt}, {ExtensionStrategy::Linear, 0.49, std::nullopt}},
                                 KernelFamily::Constant, GridKind::Cartesian, {0.2, 0.1}, opt);
  REQUIRE(reports.size() == 2);
  for (const auto& r : reports) {
    CHECK(r.complete());
    CHECK(r.l2_rate.exact);
    for (const auto& row : r.rows) CHECK(row.l2_error < 1e-10);
  }
  CHECK(reports[1].mirror);
  CHECK_FALSE(reports[0].mirror);

  std::ostringstream rep, rates;
  write_report_csv(rep, reports);
  write_rates_csv(rates, reports);
  const auto rl = lines(rep.str());
  CHECK(rl.front() == "case,strategy,kernel,nu,grid,delta,h,l2_error,g_inf");
  CHECK(rl.size() == 5);
  for (std::size_t k = 1; k < rl.size(); ++k) CHECK(std::count(rl[k].begin(), rl[k].end(), ',') == 8);
  CHECK(rl[1].rfind("patch-static,smooth,constant,0.29999999999999999,cartesian,0.20000000000000001,0.050000000000000003,", 0) == 0);
  const auto ql = lines(rates.str());
  CHECK(ql.front() == "case,strategy,metric,rate,halfwidth");
  CHECK(ql[1] == "patch-static,smooth,l2,exact,0");
}

TEST_CASE("convergence study on the nonlinear case refines monotonically") {
  RunOptions opt;
  const auto r = run_convergence("nonlinear-static", ExtensionStrategy::Smooth, KernelFamily::InverseR, 0.3,
                                 GridKind::Cartesian, {0.2, 0.1}, opt);
  REQUIRE(r.rows.size() == 2);
  CHECK(r.rows[1].l2_error < r.rows[0].l2_error);
  CHECK(r.rows[0].l2_error == doctest::Approx(2.81e-4).epsilon(0.02));
  CHECK(r.l2_rate.rate == doctest::Approx(2.4).epsilon(0.05));
  CHECK(r.theoretical == 2.0);
  CHECK(r.rows[0].g_inf > 0.0);
}

TEST_CASE("setups reuse cached weights") {
  const auto dir = std::filesystem::temp_directory_path() / "perilps_test_cache";
  std::filesystem::remove_all(dir);
  const Domain sq = Domain::square({0, 0}, 0.25);
  const auto a = build_setup(sq, GridKind::Cartesian, true, KernelFamily::InverseR, 0.1, 0.025, dir.string());
  CHECK(std::distance(std::filesystem::directory_iterator(dir), std::filesystem::directory_iterator{}) == 1);
  const auto b = build_setup(sq, GridKind::Cartesian, true, KernelFamily::InverseR, 0.1, 0.025, dir.string());
  for (std::size_t i = 0; i < a->cloud.size(); ++i) {
    if (!a->rule.has(i)) continue;
    const auto wa = a->rule.weights(i), wb = b->rule.weights(i);
    CHECK(std::memcmp(wa.data(), wb.data(), wa.size_bytes()) == 0);
  }
  std::filesystem::remove_all(dir);
}
