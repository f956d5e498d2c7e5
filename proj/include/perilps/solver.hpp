#pragma once

#include <functional>
#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "perilps/boundary.hpp"
#include "perilps/operators.hpp"

namespace perilps {

enum class SolveMethod {
  Direct,    // sparse LU
  CG,        // conjugate gradient, incomplete Cholesky
  BiCGSTAB,  // stabilized Krylov, incomplete LU
  Auto,      // CG if the matrix is symmetric, else BiCGSTAB; Direct on failure
};

const char* method_name(SolveMethod m);
SolveMethod parse_method(const std::string& name);

struct StaticSolveConfig {
  SolveMethod method{SolveMethod::Auto};
  double rel_tolerance{1e-12};
  int max_iterations{20000};
  double ilut_droptol{1e-2};
  int ilut_fill{3};
};

/// ‖A − Aᵀ‖_max ≤ rel_tol ‖A‖_max.
bool is_numerically_symmetric(const SparseMatrix& a, double rel_tol);

/// Reusable solver for one reduced matrix. Factorizes (or builds the
/// preconditioner) once; `solve` can be called for many right-hand sides.
class LinearSolver {
 public:
  LinearSolver(const SparseMatrix& matrix, const StaticSolveConfig& config);
  ~LinearSolver();
  LinearSolver(LinearSolver&&) noexcept;
  LinearSolver& operator=(LinearSolver&&) noexcept;

  /// Throws NumericalError with the iteration count and residual if the
  /// relative residual exceeds the configured tolerance.
  Eigen::VectorXd solve(const Eigen::VectorXd& rhs);

  int last_iterations() const { return iterations_; }
  double last_residual() const { return residual_; }
  SolveMethod method() const { return method_; }

 private:
  void prepare();

  struct Impl;
  std::unique_ptr<Impl> impl_;
  StaticSolveConfig config_;
  SolveMethod method_;
  bool auto_selected_{false};
  int iterations_{0};
  double residual_{0.0};
};

struct StaticSolution {
  Eigen::VectorXd u;      // interleaved, all nodes (exterior filled from the plan)
  Eigen::VectorXd theta;  // on Ω⁺_δ nodes, NaN elsewhere
  double algebraic_residual{0.0};  // ‖A x − b‖ / ‖b‖
  /// Matrix-free ‖L u − f‖_∞ / max(‖f‖_∞, ‖L c‖_∞) over nodes in Ω.
  double certified_residual{0.0};
  int iterations{0};
};

/// Everything needed to evaluate the discrete problem on one cloud.
struct Discretization {
  const PointCloud* cloud{nullptr};
  const QuadratureRule* rule{nullptr};
  KernelSpec kernel;
  Material material;
  const LpsOperator* op{nullptr};
};

/// Matrix-free residual ‖L u − f(t)‖_∞ over nodes in Ω, divided by `scale`.
double certify_residual(const Discretization& disc, const Eigen::VectorXd& u_full, const BodyForce& force,
                        double t, double scale);

/// Assembles and solves L u = f on Ω with the plan's volume constraint.
StaticSolution solve_static(const Discretization& disc, const BoundaryPlan& plan, const BodyForce& force,
                            double t, const StaticSolveConfig& config);

/// Newmark state with β = 1/4, γ = 1/2. Fields are interleaved over all nodes;
/// only entries of nodes in Ω evolve, exterior entries follow the plan.
struct NewmarkState {
  Eigen::VectorXd u;
  Eigen::VectorXd u_dot;
  Eigen::VectorXd u_ddot;
  double t{0.0};
  double dt{0.01};
  double rho{1.0};
};

/// Shifted matrix (4ρ/Δt²) I + L P, factorized once and reused for all steps.
class NewmarkStepper {
 public:
  NewmarkStepper(const Discretization& disc, const BoundaryPlan& plan, const BodyForce& force, double dt,
                 const StaticSolveConfig& config);

  /// Initial state from φ, ψ with ρ ü⁰ = f(0) − L φ on Ω (ü⁰ = 0 when ρ = 0).
  NewmarkState initial_state(const VectorFunction& phi, const VectorFunction& psi, double t0 = 0.0) const;

  /// One step from t to t + Δt.
  NewmarkState step(const NewmarkState& state);

  double last_certified_residual() const { return certified_; }

 private:
  Discretization disc_;
  const BoundaryPlan* plan_;
  BodyForce force_;
  double dt_;
  double shift_;
  SparseMatrix reduced_;
  std::unique_ptr<LinearSolver> solver_;
  double certified_{0.0};
};

/// Single step with a fresh stepper.
NewmarkState newmark_step(const NewmarkState& state, const Discretization& disc, const BoundaryPlan& plan,
                          const BodyForce& force, const StaticSolveConfig& config);

struct DynamicConfig {
  double dt{0.01};
  double final_time{0.1};
  StaticSolveConfig solve{};
  /// Called after every step (and once for the initial state) when set.
  std::function<void(std::size_t step, const NewmarkState&)> on_step;
};

struct DynamicResult {
  NewmarkState final_state;
  std::size_t steps{0};
  double max_certified_residual{0.0};
};

/// ⌈T/Δt⌉ steps from the initial data. T = 0 returns the initial state.
DynamicResult run_dynamic(const Discretization& disc, const BoundaryPlan& plan, const BodyForce& force,
                          const VectorFunction& phi, const VectorFunction& psi, const DynamicConfig& config);

std::size_t step_count(double final_time, double dt);

/// Header `node id,x,y,u1,u2`, one row per node of Ω.
void write_snapshot_csv(std::ostream& out, const PointCloud& cloud, const Eigen::VectorXd& u);

}  // namespace perilps
