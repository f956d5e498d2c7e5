#pragma once

#include <stdexcept>
#include <string>

namespace perilps {

/// Invalid input: bad parameters, malformed clouds, unknown names.
class InputError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Numerical failure: infeasible quadrature, singular systems, solver breakdown.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Relative slack for the closed ball ‖z‖ ≤ δ; lattice offsets at exactly δ
/// are otherwise lost to rounding.
inline constexpr double kBallTolerance = 1e-10;

}  // namespace perilps
