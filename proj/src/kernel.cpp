#include "perilps/kernel.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

#include "perilps/error.hpp"

namespace perilps {

const char* kernel_name(KernelFamily family) {
  return family == KernelFamily::Constant ? "constant" : "inverse_r";
}

KernelFamily parse_kernel(const std::string& name) {
  if (name == "constant" || name == "K1") return KernelFamily::Constant;
  if (name == "inverse_r" || name == "inverse-r" || name == "K2") return KernelFamily::InverseR;
  throw InputError("unknown kernel family '" + name + "'");
}

KernelSpec::KernelSpec(KernelFamily family, double delta, int dim) : family_(family), delta_(delta), dim_(dim) {
  if (!(delta > 0.0)) throw InputError("kernel horizon must be positive");
  const double pi = std::numbers::pi;
  if (dim == 2) {
    c_a_ = 2.0;
    c_b_ = 16.0;
    scale_ = family == KernelFamily::Constant ? 2.0 / (pi * std::pow(delta, 4)) : 3.0 / (2.0 * pi * std::pow(delta, 3));
  } else if (dim == 3) {
    c_a_ = 3.0;
    c_b_ = 30.0;
    scale_ = family == KernelFamily::Constant ? 5.0 / (4.0 * pi * std::pow(delta, 5)) : 1.0 / (pi * std::pow(delta, 4));
  } else {
    throw InputError("kernel dimension must be 2 or 3");
  }
}

double KernelSpec::support_radius() const { return delta_ * (1.0 + kBallTolerance); }

double KernelSpec::density(double r) const {
  if (r < 0.0) throw InputError("kernel radius must be non-negative");
  if (r > support_radius()) return 0.0;
  if (family_ == KernelFamily::Constant) return scale_;
  if (r == 0.0) throw InputError("inverse_r kernel density is singular at r = 0");
  return scale_ / r;
}

Material Material::plane_strain(double youngs, double poisson, double rho) {
  if (!(poisson > 0.0 && poisson < 0.5)) {
    std::ostringstream msg;
    msg << "Poisson ratio " << poisson << " outside (0, 1/2); plane-strain lambda is singular at 1/2";
    throw InputError(msg.str());
  }
  if (!(youngs > 0.0)) throw InputError("Young's modulus must be positive");
  if (!(rho >= 0.0)) throw InputError("density must be non-negative");
  Material m;
  m.youngs = youngs;
  m.poisson = poisson;
  m.lambda = youngs * poisson / ((1.0 + poisson) * (1.0 - 2.0 * poisson));
  m.mu = youngs / (2.0 * (1.0 + poisson));
  m.rho = rho;
  return m;
}

double b_normalization_target(int i, int j, int k, int l) {
  const auto d = [](int a, int b) { return a == b ? 1.0 : 0.0; };
  return 2.0 * (d(i, j) * d(k, l) + d(i, k) * d(j, l) + d(i, l) * d(j, k));
}

}  // namespace perilps
