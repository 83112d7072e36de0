#pragma once

#include <array>
#include <string>

#include "rmplate/energy3d.hpp"
#include "rmplate/fields.hpp"
#include "rmplate/material.hpp"
#include "rmplate/optimize.hpp"

namespace rmplate {

enum class LimitVariant { plain, second_grad };

// Quadrature for the first-order terms. The nodal scheme (central
// differences + trapezoid weights) is the evaluation default and keeps the
// exactness properties of the breakdown; the element scheme (Q1, 2x2 Gauss)
// is the stable discretization used for minimization. Second-difference
// terms are nodal in both schemes.
enum class LimitScheme { nodal, element };

struct LimitBreakdown {
  double e_shear = 0.0;      // 1/2 int Q2_2(Gtilde)
  double e_membrane = 0.0;   // 1/2 int Q3_1(2 sym grad'u [+ grad'v (x) grad'v])
  double e_bending = 0.0;    // 1/6 int Q3_1(sym grad'phi)
  double e_sg_v = 0.0;       // l int |grad'^2 v|^2        (second_grad)
  double e_sg_phi = 0.0;     // l int |grad'phi|^2         (second_grad)
  double e_quartic = 0.0;    // c1 int |grad'v|^4          (second_grad)
  double e_force = 0.0;      // -int f3 v
  double total = 0.0;
};

// Nodal shear-strain entries phi_i + d_i v; the off-block entries of the
// symmetric matrix Gtilde whose other entries vanish.
struct GtildeField {
  Grid2 grid;
  std::vector<double> g;  // 2 per node

  Eigen::Vector2d at(int i, int j) const {
    const std::size_t n = 2 * grid.idx(i, j);
    return {g[n], g[n + 1]};
  }
  Eigen::Matrix3d matrix(int i, int j) const {
    const Eigen::Vector2d v = at(i, j);
    Eigen::Matrix3d m = Eigen::Matrix3d::Zero();
    m(0, 2) = m(2, 0) = v[0];
    m(1, 2) = m(2, 1) = v[1];
    return m;
  }
};

GtildeField gtilde(const MidsurfaceState& s);

LimitBreakdown limit_energy(const MidsurfaceState& s, const MaterialModel& m, LimitVariant variant,
                            const ForceSpec* force = nullptr,
                            LimitScheme scheme = LimitScheme::nodal);

// Direct quadrature of the classical quadratic plate energies: shear
// coefficients a_i, bending b_ij, and (optionally) the membrane term with
// coefficients c_ij and the nonlinear 1/2 d_i v d_j v strain part.
struct LinearRmCoeffs {
  std::array<double, 2> a{{0.0, 0.0}};
  std::array<std::array<double, 2>, 2> b{{{{0.0, 0.0}}, {{0.0, 0.0}}}};
  std::array<std::array<double, 2>, 2> c{{{{0.0, 0.0}}, {{0.0, 0.0}}}};
  bool use_membrane = false;
};

double linear_rm_energy(const LinearRmCoeffs& coeffs, const MidsurfaceState& s);

struct LimitMinimizeResult {
  MidsurfaceState state;
  MinimizeResult opt;
  LimitBreakdown breakdown;  // element-scheme breakdown of the minimizer
};

inline MinimizeOptions limit_minimize_options() {
  MinimizeOptions o;
  o.max_iters = 20000;
  o.memory = 20;
  return o;
}

// Minimize the force-coupled limit J(v,phi) with u fixed at zero and zero
// Dirichlet data for (v,phi). Throws on non-convergence (iteration budget
// exhausted); a machine-precision stall counts as converged.
LimitMinimizeResult minimize_limit(const Grid2& grid, const MaterialModel& m,
                                   const ForceSpec& force,
                                   const MinimizeOptions& opts = limit_minimize_options());

// General (u,v,phi) minimization entry point (second_grad-variant studies).
LimitMinimizeResult minimize_limit_full(const Grid2& grid, const MaterialModel& m,
                                        const ForceSpec* force, LimitVariant variant,
                                        const MinimizeOptions& opts = limit_minimize_options());

// dense assembly of the same discrete quadratic system (test oracle lives in
// the test suite; this helper only exposes the element objective)
struct LimitObjective {
  // unknown layout: per node (v, phi1, phi2) when with_u is false, otherwise
  // (u1, u2, v, phi1, phi2)
  Grid2 grid;
  bool with_u = false;
  LimitVariant variant = LimitVariant::plain;
  const MaterialModel* model = nullptr;
  const ForceSpec* force = nullptr;

  int dof_per_node() const { return with_u ? 5 : 3; }
  Eigen::Index size() const { return Eigen::Index(grid.count()) * dof_per_node(); }
  std::vector<std::uint8_t> boundary_mask() const;

  double energy(const Eigen::VectorXd& x) const;
  void gradient(const Eigen::VectorXd& x, Eigen::VectorXd& g) const;

  MidsurfaceState unpack(const Eigen::VectorXd& x) const;
  Eigen::VectorXd pack(const MidsurfaceState& s) const;
};

void write_limit_csv(const std::string& path, const std::string& variant,
                     const LimitBreakdown& b, const std::string& trailer = "");

}  // namespace rmplate
