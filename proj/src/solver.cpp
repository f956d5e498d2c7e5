#include "perilps/solver.hpp"

#include <cmath>
#include <ostream>
#include <sstream>
#include <variant>

#include <Eigen/IterativeLinearSolvers>
#include <Eigen/SparseLU>
#ifdef PERILPS_HAVE_UMFPACK
#include <Eigen/UmfPackSupport>
#endif

#include "perilps/error.hpp"

namespace perilps {

using ColMatrix = Eigen::SparseMatrix<double, Eigen::ColMajor>;

const char* method_name(SolveMethod m) {
  switch (m) {
    case SolveMethod::Direct: return "direct";
    case SolveMethod::CG: return "cg";
    case SolveMethod::BiCGSTAB: return "bicgstab";
    case SolveMethod::Auto: return "auto";
  }
  return "?";
}

SolveMethod parse_method(const std::string& name) {
  if (name == "direct") return SolveMethod::Direct;
  if (name == "cg") return SolveMethod::CG;
  if (name == "bicgstab") return SolveMethod::BiCGSTAB;
  if (name == "auto") return SolveMethod::Auto;
  throw InputError("unknown solve method '" + name + "'");
}

struct LinearSolver::Impl {
#ifdef PERILPS_HAVE_UMFPACK
  using Direct = Eigen::UmfPackLU<ColMatrix>;
#else
  using Direct = Eigen::SparseLU<ColMatrix, Eigen::COLAMDOrdering<int>>;
#endif
  using Cg = Eigen::ConjugateGradient<ColMatrix, Eigen::Lower | Eigen::Upper, Eigen::IncompleteCholesky<double>>;
  using Bicg = Eigen::BiCGSTAB<ColMatrix, Eigen::IncompleteLUT<double>>;

  ColMatrix matrix;
  std::variant<std::monostate, std::unique_ptr<Direct>, std::unique_ptr<Cg>, std::unique_ptr<Bicg>> solver;
};

bool is_numerically_symmetric(const SparseMatrix& a, double rel_tol) {
  const SparseMatrix t = a.transpose();
  const SparseMatrix diff = a - t;
  double amax = 0.0;
  for (Eigen::Index k = 0; k < a.nonZeros(); ++k) amax = std::max(amax, std::abs(a.valuePtr()[k]));
  double dmax = 0.0;
  for (Eigen::Index k = 0; k < diff.nonZeros(); ++k) dmax = std::max(dmax, std::abs(diff.valuePtr()[k]));
  return dmax <= rel_tol * amax;
}

LinearSolver::LinearSolver(const SparseMatrix& matrix, const StaticSolveConfig& config)
    : impl_(std::make_unique<Impl>()), config_(config), method_(config.method) {
  if (!(config.rel_tolerance > 0.0)) throw InputError("rel_tolerance must be positive");
  if (config.max_iterations <= 0) throw InputError("max_iterations must be positive");
  if (matrix.rows() != matrix.cols()) throw InputError("system matrix is not square");
  if (method_ == SolveMethod::Auto) {
    auto_selected_ = true;
    method_ = is_numerically_symmetric(matrix, 1e-9) ? SolveMethod::CG : SolveMethod::BiCGSTAB;
  }
  impl_->matrix = matrix;
  impl_->matrix.makeCompressed();
  prepare();
}

void LinearSolver::prepare() {
  const auto& a = impl_->matrix;
  switch (method_) {
    case SolveMethod::Direct: {
      auto s = std::make_unique<Impl::Direct>();
      s->compute(a);
      if (s->info() != Eigen::Success) {
        throw NumericalError("sparse LU factorization failed: matrix is singular after constraint elimination (" +
                             std::to_string(a.rows()) + " unknowns)");
      }
      impl_->solver = std::move(s);
      break;
    }
    case SolveMethod::CG: {
      auto s = std::make_unique<Impl::Cg>();
      s->setTolerance(config_.rel_tolerance);
      s->setMaxIterations(config_.max_iterations);
      s->compute(a);
      if (s->info() != Eigen::Success) throw NumericalError("incomplete Cholesky preconditioner failed");
      impl_->solver = std::move(s);
      break;
    }
    case SolveMethod::BiCGSTAB: {
      auto s = std::make_unique<Impl::Bicg>();
      s->setTolerance(config_.rel_tolerance);
      s->setMaxIterations(config_.max_iterations);
      s->preconditioner().setDroptol(config_.ilut_droptol);
      s->preconditioner().setFillfactor(config_.ilut_fill);
      s->compute(a);
      if (s->info() != Eigen::Success) throw NumericalError("incomplete LU preconditioner failed");
      impl_->solver = std::move(s);
      break;
    }
    case SolveMethod::Auto: break;
  }
}

LinearSolver::~LinearSolver() = default;
LinearSolver::LinearSolver(LinearSolver&&) noexcept = default;
LinearSolver& LinearSolver::operator=(LinearSolver&&) noexcept = default;

Eigen::VectorXd LinearSolver::solve(const Eigen::VectorXd& rhs) {
  if (rhs.size() != impl_->matrix.rows()) throw InputError("right-hand side has the wrong length");
  Eigen::VectorXd x;
  iterations_ = 0;
  std::visit(
      [&](auto& s) {
        using T = std::decay_t<decltype(s)>;
        if constexpr (!std::is_same_v<T, std::monostate>) {
          x = s->solve(rhs);
          if constexpr (!std::is_same_v<T, std::unique_ptr<Impl::Direct>>) {
            iterations_ = static_cast<int>(s->iterations());
          }
        }
      },
      impl_->solver);
  const double scale = rhs.norm();
  residual_ = scale > 0.0 ? (impl_->matrix * x - rhs).norm() / scale : (impl_->matrix * x).norm();
  // Direct solves are bounded by conditioning, not by an iteration budget.
  const double limit = method_ == SolveMethod::Direct ? std::max(config_.rel_tolerance, 1e-9)
                                                      : config_.rel_tolerance * 10.0;
  if (x.allFinite() && residual_ <= limit) return x;
  if (auto_selected_ && method_ != SolveMethod::Direct) {
    method_ = SolveMethod::Direct;
    prepare();
    return solve(rhs);
  }
  std::ostringstream msg;
  msg << method_name(method_) << " solve did not converge: relative residual " << residual_ << " after "
      << iterations_ << " iterations (tolerance " << config_.rel_tolerance << ")";
  throw NumericalError(msg.str());
}

// ---------------------------------------------------------------------------

double certify_residual(const Discretization& disc, const Eigen::VectorXd& u_full, const BodyForce& force,
                        double t, double scale) {
  const auto& cloud = *disc.cloud;
  const Eigen::VectorXd theta = dilatation(cloud, *disc.rule, disc.kernel, u_full);
  const Eigen::VectorXd lu = apply_lps(cloud, *disc.rule, disc.kernel, disc.material, u_full, theta);
  double worst = 0.0;
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    if (!cloud.tags[i].in_domain()) continue;
    const Vec2 r = lu.segment<2>(2 * static_cast<Eigen::Index>(i)) - force(t, cloud.positions[i]);
    worst = std::max(worst, r.cwiseAbs().maxCoeff());
  }
  return worst / scale;
}

namespace {

Eigen::VectorXd interior_force(const Discretization& disc, const BodyForce& force, double t) {
  const auto& dofs = disc.op->dofs;
  Eigen::VectorXd f(2 * static_cast<Eigen::Index>(dofs.unknown_nodes()));
  for (std::size_t k = 0; k < dofs.unknown_nodes(); ++k) {
    f.segment<2>(2 * static_cast<Eigen::Index>(k)) = force(t, disc.cloud->positions[dofs.node_of_unknown[k]]);
  }
  return f;
}

double residual_scale(const Eigen::VectorXd& f, const Eigen::VectorXd& lc) {
  return std::max({f.lpNorm<Eigen::Infinity>(), lc.lpNorm<Eigen::Infinity>(), 1e-300});
}

}  // namespace

StaticSolution solve_static(const Discretization& disc, const BoundaryPlan& plan, const BodyForce& force,
                            double t, const StaticSolveConfig& config) {
  const auto& op = *disc.op;
  const AffineExtension ext = plan.extension(t, op.dofs);
  const SparseMatrix a = reduced_matrix(op, disc.material, ext);
  const Eigen::VectorXd f = interior_force(disc, force, t);
  const Eigen::VectorXd lc = op.apply(disc.material, ext.c);
  const Eigen::VectorXd rhs = f - lc;

  LinearSolver solver(a, config);
  StaticSolution out;
  const Eigen::VectorXd x = solver.solve(rhs);
  out.iterations = solver.last_iterations();
  out.algebraic_residual = solver.last_residual();
  out.u = ext.expand(x);
  out.theta = dilatation(*disc.cloud, *disc.rule, disc.kernel, out.u);
  out.certified_residual = certify_residual(disc, out.u, force, t, residual_scale(f, lc));
  return out;
}

// ---------------------------------------------------------------------------

NewmarkStepper::NewmarkStepper(const Discretization& disc, const BoundaryPlan& plan, const BodyForce& force,
                               double dt, const StaticSolveConfig& config)
    : disc_(disc), plan_(&plan), force_(force), dt_(dt) {
  if (!(dt > 0.0)) throw InputError("time step must be positive");
  shift_ = 4.0 * disc.material.rho / (dt * dt);
  // P does not depend on t; only the constant part of the extension does.
  const AffineExtension ext = plan.extension(0.0, disc.op->dofs);
  reduced_ = reduced_matrix(*disc.op, disc.material, ext);
  SparseMatrix shifted = reduced_;
  if (shift_ != 0.0) {
    SparseMatrix id(reduced_.rows(), reduced_.cols());
    id.setIdentity();
    shifted += shift_ * id;
  }
  solver_ = std::make_unique<LinearSolver>(shifted, config);
}

NewmarkState NewmarkStepper::initial_state(const VectorFunction& phi, const VectorFunction& psi, double t0) const {
  const auto& cloud = *disc_.cloud;
  const auto& dofs = disc_.op->dofs;
  NewmarkState s;
  s.t = t0;
  s.dt = dt_;
  s.rho = disc_.material.rho;
  const Eigen::VectorXd phi_full = sample_field(cloud, [&](const Vec2& x) { return phi(t0, x); });
  const AffineExtension ext = plan_->extension(t0, dofs);
  s.u = ext.expand(dofs.restrict(phi_full));
  s.u_dot = sample_field(cloud, [&](const Vec2& x) { return psi(t0, x); });
  s.u_ddot = Eigen::VectorXd::Zero(s.u.size());
  if (s.rho > 0.0) {
    const Eigen::VectorXd r = interior_force(disc_, force_, t0) - disc_.op->apply(disc_.material, s.u);
    for (std::size_t k = 0; k < dofs.unknown_nodes(); ++k) {
      const auto i = static_cast<Eigen::Index>(dofs.node_of_unknown[k]);
      s.u_ddot.segment<2>(2 * i) = r.segment<2>(2 * static_cast<Eigen::Index>(k)) / s.rho;
    }
  }
  return s;
}

NewmarkState NewmarkStepper::step(const NewmarkState& state) {
  const auto& dofs = disc_.op->dofs;
  const double t1 = state.t + dt_;
  const AffineExtension ext = plan_->extension(t1, dofs);
  const Eigen::VectorXd pred = state.u + dt_ * state.u_dot + (0.25 * dt_ * dt_) * state.u_ddot;
  const Eigen::VectorXd f = interior_force(disc_, force_, t1);
  const Eigen::VectorXd lc = disc_.op->apply(disc_.material, ext.c);
  Eigen::VectorXd rhs = f - lc;
  if (shift_ != 0.0) rhs += shift_ * dofs.restrict(pred);
  const Eigen::VectorXd x = solver_->solve(rhs);

  NewmarkState next;
  next.t = t1;
  next.dt = dt_;
  next.rho = state.rho;
  next.u = ext.expand(x);
  next.u_ddot = (4.0 / (dt_ * dt_)) * (next.u - state.u - dt_ * state.u_dot) - state.u_ddot;
  next.u_dot = state.u_dot + (0.5 * dt_) * (state.u_ddot + next.u_ddot);

  // Matrix-free check of ρü + L u = f on Ω.
  const auto& cloud = *disc_.cloud;
  const Eigen::VectorXd theta = dilatation(cloud, *disc_.rule, disc_.kernel, next.u);
  const Eigen::VectorXd lu = apply_lps(cloud, *disc_.rule, disc_.kernel, disc_.material, next.u, theta);
  double worst = 0.0;
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    if (!cloud.tags[i].in_domain()) continue;
    const auto seg = 2 * static_cast<Eigen::Index>(i);
    const Vec2 r = state.rho * next.u_ddot.segment<2>(seg) + lu.segment<2>(seg) - force_(t1, cloud.positions[i]);
    worst = std::max(worst, r.cwiseAbs().maxCoeff());
  }
  certified_ = worst / residual_scale(f, lc);
  return next;
}

NewmarkState newmark_step(const NewmarkState& state, const Discretization& disc, const BoundaryPlan& plan,
                          const BodyForce& force, const StaticSolveConfig& config) {
  Discretization d = disc;
  d.material.rho = state.rho;
  NewmarkStepper stepper(d, plan, force, state.dt, config);
  return stepper.step(state);
}

std::size_t step_count(double final_time, double dt) {
  if (!(dt > 0.0)) throw InputError("time step must be positive");
  if (final_time < 0.0) throw InputError("final time must be non-negative");
  const double ratio = final_time / dt;
  const double nearest = std::round(ratio);
  if (std::abs(ratio - nearest) <= 1e-9 * std::max(1.0, ratio)) return static_cast<std::size_t>(nearest);
  return static_cast<std::size_t>(std::ceil(ratio));
}

DynamicResult run_dynamic(const Discretization& disc, const BoundaryPlan& plan, const BodyForce& force,
                          const VectorFunction& phi, const VectorFunction& psi, const DynamicConfig& config) {
  const std::size_t steps = step_count(config.final_time, config.dt);
  NewmarkStepper stepper(disc, plan, force, config.dt, config.solve);
  DynamicResult out;
  out.final_state = stepper.initial_state(phi, psi);
  if (config.on_step) config.on_step(0, out.final_state);
  for (std::size_t n = 1; n <= steps; ++n) {
    out.final_state = stepper.step(out.final_state);
    out.max_certified_residual = std::max(out.max_certified_residual, stepper.last_certified_residual());
    if (config.on_step) config.on_step(n, out.final_state);
  }
  out.steps = steps;
  return out;
}

void write_snapshot_csv(std::ostream& out, const PointCloud& cloud, const Eigen::VectorXd& u) {
  const auto old = out.precision(17);
  out << "node id,x,y,u1,u2\n";
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    if (!cloud.tags[i].in_domain()) continue;
    const auto seg = 2 * static_cast<Eigen::Index>(i);
    out << i << ',' << cloud.positions[i].x() << ',' << cloud.positions[i].y() << ',' << u[seg] << ','
        << u[seg + 1] << '\n';
  }
  out.precision(old);
}

}  // namespace perilps
