#pragma once

#include <vector>

#include "rmplate/fields.hpp"
#include "rmplate/material.hpp"

namespace rmplate {

enum class BcMode { enforce, ignore };
enum class EnergyVariant { plain, second_grad };

// Per-term energies of I^h / J^h, in energy units before any h^{-sigma}
// scaling; total is their sum (or the +inf sentinel).
struct EnergyBreakdown {
  double e_membrane = 0.0;    // W1 term
  double e_quartic = 0.0;     // c1 |grad'y3|^4 term
  double e_shear = 0.0;       // h^2 W2 term
  double e_reg = 0.0;         // h^{-epsilon} |d33 y'|^2 term
  double e_secondgrad = 0.0;  // l h^2 |grad_h^2 y|^2 term (second_grad only)
  double e_force = 0.0;       // -int f^h . y
  double total = 0.0;

  bool infeasible() const { return std::isinf(total); }
};

// Vertical dead load f^h = h^alpha (0,0,f3(x')); f3 must carry discrete zero
// mean and zero first moments.
struct ForceSpec {
  Grid2 grid;
  std::vector<double> f3;  // per surface node
  double alpha = 4.0;

  void validate() const;  // throws std::invalid_argument on violated invariants
};

// Smooth bump profile projected (in the trapezoid inner product) against
// {1, x1, x2} so the force conditions hold exactly, then scaled so that
// max|f3| = amplitude.
ForceSpec make_bump_load(const Grid2& g, double amplitude, double alpha = 4.0);

// Dirichlet data y = (x', h x3) on dS x I. Tolerance covers roundoff of
// equivalent constructions of the same boundary values.
bool bc_satisfied(const DeformationField3& y, double h, double tol = 1e-12);
DeformationField3 apply_bc(DeformationField3 y, double h);

// per-dof mask of lateral boundary nodes (1 = held fixed)
std::vector<std::uint8_t> bc_mask(const Grid3& g);

EnergyBreakdown energy_ih(const DeformationField3& y, double h, const MaterialModel& m,
                          EnergyVariant variant = EnergyVariant::plain,
                          BcMode bc = BcMode::enforce);

EnergyBreakdown energy_jh(const DeformationField3& y, double h, const MaterialModel& m,
                          const ForceSpec& force,
                          EnergyVariant variant = EnergyVariant::plain,
                          BcMode bc = BcMode::enforce);

// Exact gradient of the discrete energy with respect to nodal values,
// assembled element-wise; density first derivatives by central differences.
// Boundary dofs carry zero gradient in enforce mode. Throws if y is
// infeasible (sentinel states have no gradient).
std::vector<double> grad_energy(const DeformationField3& y, double h, const MaterialModel& m,
                                EnergyVariant variant = EnergyVariant::plain,
                                BcMode bc = BcMode::enforce,
                                const ForceSpec* force = nullptr);

// diagnostic of the x3-mixed second-gradient entries of y3 (study column
// sg_L): l h^2 * sum_i int ((1/h) d_i d_3 y3)^2
double secondgrad_mixed_y3_term(const DeformationField3& y, double h, const MaterialModel& m);

}  // namespace rmplate
