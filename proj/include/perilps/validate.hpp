#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "perilps/config.hpp"

namespace perilps {

struct CheckResult {
  std::string name;
  bool passed{false};
  double measured{0.0};
  double tolerance{0.0};
  std::string detail;
};

/// Fast invariant suite: Lamé constants, kernel normalization, quadrature
/// reproduction, quadratic exactness, manufactured residuals and (unless
/// `config.quick`) static and dynamic patch tests at δ = 0.1. With
/// `config.cache` the quadrature weights come from the weight cache.
std::vector<CheckResult> run_validation(const RunConfig& config);

/// Fourth-order central-difference residual of ρ∂ₜₜu₀ − (λ+μ)∇div u₀ − μΔu₀ − f
/// at `samples` pseudo-random points of the case domain (fixed seed).
double manufactured_residual(const std::string& case_name, double nu, int samples = 20);

void print_checks(std::ostream& out, const std::vector<CheckResult>& checks);

}  // namespace perilps
