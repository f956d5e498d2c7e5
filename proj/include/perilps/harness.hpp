#pragma once

#include <cstddef>
#include <iosfwd>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "perilps/boundary.hpp"
#include "perilps/geometry.hpp"
#include "perilps/kernel.hpp"
#include "perilps/operators.hpp"
#include "perilps/quadrature.hpp"
#include "perilps/solver.hpp"

namespace perilps {

/// Manufactured benchmark: exact local solution u₀(t, x), body force f(t, x)
/// and, for dynamic cases, initial data φ = u₀(0, ·) and ψ = ∂ₜu₀(0, ·).
struct BenchmarkCase {
  std::string name;
  bool dynamic{false};
  bool patch{false};
  Domain domain = Domain::square({0.0, 0.0}, 0.5);
  VectorFunction u0;
  BodyForce force;
  VectorFunction phi;
  VectorFunction psi;
  std::map<std::string, double> params;
  std::vector<double> default_deltas;
};

/// All six cases for a material. Cylinder constants use K = E.
std::vector<BenchmarkCase> case_catalog(const Material& material);
std::vector<std::string> case_names();
/// Throws InputError for an unknown name.
BenchmarkCase find_case(const std::string& name, const Material& material);

/// sqrt(Σ_{i∈Ω} area_i |u_i − u₀(t, x_i)|²).
double l2_error(const PointCloud& cloud, const Eigen::VectorXd& u, const VectorFunction& u0, double t);

/// v̄ = u − u₀(t) on nodes in Ω and zero on exterior nodes.
Eigen::VectorXd error_field(const PointCloud& cloud, const Eigen::VectorXd& u, const VectorFunction& u0, double t);

struct RateFit {
  bool exact{false};  // every row at the round-off floor
  double rate{0.0};
  double halfwidth{0.0};  // 95% confidence half-width (0 with two points)
  std::size_t used{0};
};

/// Least-squares slope of ln(error) against ln(δ) over rows whose error is
/// above 100 machine epsilon. Needs at least two usable rows unless all rows
/// are at the floor.
RateFit fit_rate(const std::vector<std::pair<double, double>>& rows);

/// Exponent of the proven convergence bound per strategy (δ², δ^{1/2}, δ^{3/2}).
double theoretical_rate(ExtensionStrategy s);

/// Cloud, weights and sparse operator pieces for one (case, grid, δ, h, kernel).
struct Setup {
  PointCloud cloud;
  QuadratureRule rule;
  KernelSpec kernel;
  LpsOperator op;
};

/// Builds (or, with a non-empty cache_dir, reuses cached weights for) a setup.
std::shared_ptr<const Setup> build_setup(const Domain& domain, GridKind grid, bool mirror, KernelFamily family,
                                         double delta, double h, const std::string& cache_dir = {});

struct RunOptions {
  double delta_over_h{4.0};
  double dt{0.01};
  double final_time{0.1};
  StaticSolveConfig solve{};
  std::string cache_dir;
};

/// Result of one discrete solve against the exact solution at the final time.
struct SingleRun {
  double delta{0.0};
  double h{0.0};
  double l2_error{0.0};
  double g_inf{0.0};
  double certified_residual{0.0};
  double final_time{0.0};
  Eigen::VectorXd u;
};

/// Solves one case on a prepared setup (static solve or Newmark run to T).
SingleRun run_single(const BenchmarkCase& bench, const Setup& setup, ExtensionStrategy strategy,
                     const Material& material, const RunOptions& options,
                     const std::function<void(std::size_t, const NewmarkState&)>& on_step = {});

struct ConvergenceRow {
  double delta{0.0};
  double h{0.0};
  double l2_error{0.0};
  double g_inf{0.0};
  bool ok{true};
  std::string message;  // failure reason for a missing row
};

struct ConvergenceReport {
  std::string case_name;
  ExtensionStrategy strategy{ExtensionStrategy::Smooth};
  KernelFamily kernel{KernelFamily::InverseR};
  double nu{0.3};
  GridKind grid{GridKind::Cartesian};
  bool mirror{false};
  std::vector<ConvergenceRow> rows;
  RateFit l2_rate;
  RateFit g_rate;
  double theoretical{2.0};

  bool complete() const;
};

struct StudyVariant {
  ExtensionStrategy strategy{ExtensionStrategy::Smooth};
  double nu{0.3};
  /// Unset means mirror grids iff the strategy is linear.
  std::optional<bool> mirror;
};

/// Runs several (strategy, ν) variants of one case over a δ sequence. Setups
/// are shared by variants with the same mirror flag and rebuilt per δ, so
/// only one δ level is held in memory at a time. Failed solves leave rows
/// marked not ok.
std::vector<ConvergenceReport> run_study(const std::string& case_name, const std::vector<StudyVariant>& variants,
                                         KernelFamily kernel, GridKind grid, const std::vector<double>& deltas,
                                         const RunOptions& options);

ConvergenceReport run_convergence(const std::string& case_name, ExtensionStrategy strategy, KernelFamily kernel,
                                  double nu, GridKind grid, const std::vector<double>& deltas,
                                  const RunOptions& options);

/// Header `case,strategy,kernel,nu,grid,delta,h,l2_error,g_inf`.
void write_report_csv(std::ostream& out, const std::vector<ConvergenceReport>& reports);
/// Header `case,strategy,metric,rate,halfwidth`. Exact fits print `exact`;
/// a `theory_l2` row carries the proven bound exponent.
void write_rates_csv(std::ostream& out, const std::vector<ConvergenceReport>& reports);

}  // namespace perilps
