#pragma once

#include <array>
#include <string>

#include <Eigen/Core>

namespace perilps {

enum class KernelFamily {
  Constant,  // K¹_δ(r) = Λ_δ
  InverseR,  // K²_δ(r) = Λ_δ / r
};

const char* kernel_name(KernelFamily family);
KernelFamily parse_kernel(const std::string& name);

/// Radial influence kernel, stored only through its normalized density
/// K_δ(r)/m(δ); the solver never needs K and m separately.
class KernelSpec {
 public:
  KernelSpec(KernelFamily family, double delta, int dim = 2);

  KernelFamily family() const { return family_; }
  double delta() const { return delta_; }
  int dim() const { return dim_; }

  /// 2 and 16 in 2D, 3 and 30 in 3D.
  double c_a() const { return c_a_; }
  double c_b() const { return c_b_; }

  /// K_δ(r)/m(δ). Zero outside the closed ball. Throws for InverseR at r = 0.
  double density(double r) const;

  /// (K_δ(|z|)/m(δ)) z. For InverseR the 1/r cancels one power of |z|, so the
  /// magnitude is the constant 3/(2πδ³) in 2D; z = 0 maps to the zero vector.
  template <class Vec>
  Vec vector(const Vec& z) const {
    const double r = z.norm();
    if (r == 0.0) return Vec::Zero(z.size());
    if (r > support_radius()) return Vec::Zero(z.size());
    if (family_ == KernelFamily::InverseR) return (scale_ / r) * z;
    return scale_ * z;
  }

  /// Power s of the singular reproducing space {p(z)/|z|^s : p ∈ P₅} matched
  /// to this kernel: 3 for InverseR, 2 for Constant.
  int singularity_power() const { return family_ == KernelFamily::InverseR ? 3 : 2; }

  double support_radius() const;

 private:
  KernelFamily family_;
  double delta_;
  int dim_;
  double c_a_;
  double c_b_;
  double scale_;  // density at r = 1 (InverseR) or everywhere (Constant)
};

/// Plane-strain isotropic material.
struct Material {
  double youngs{1.0};
  double poisson{0.3};
  double lambda{0.0};
  double mu{0.0};
  double rho{1.0};

  /// λ = Eν/((1+ν)(1−2ν)), μ = E/(2(1+ν)); requires 0 < ν < 1/2.
  static Material plane_strain(double youngs, double poisson, double rho = 1.0);
};

/// Moment-tensor residuals of the discrete normalization identities at one node.
struct NormalizationResidual {
  double a{0.0};  // max |C_A Σ k z⊗z ω − I|
  double b{0.0};  // max |C_B Σ k z⊗z⊗z⊗z/|z|² ω − 2(I⊗I + 2I_sym)|
};

/// Target of the B normalization, 2(δ_ij δ_kl + δ_ik δ_jl + δ_il δ_jk). The
/// factor 2 is what C_B = 16 (2D) / 30 (3D) produce and what gives the
/// Navier limit −(λ+μ)∇div u − μΔu.
double b_normalization_target(int i, int j, int k, int l);

}  // namespace perilps
