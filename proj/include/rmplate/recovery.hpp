#pragma once

#include <array>
#include <string>
#include <vector>

#include "rmplate/energy3d.hpp"
#include "rmplate/limit2d.hpp"
#include "rmplate/material.hpp"

namespace rmplate {

// Smooth compactly supported test states: product bump
// B = [x1(L1-x1)x2(L2-x2) / ((L1/2)^2 (L2/2)^2)]^k times low-order
// polynomials in X = x1/L1, Y = x2/L2. k >= 2 keeps values and first
// derivatives zero on the boundary; boundary nodes are zeroed exactly.
struct SmoothStateSpec {
  double lx = 1.0, ly = 1.0;
  int k = 2;
  double amp_u = 0.2, amp_v = 0.4, amp_phi = 0.5;
  // coefficient layout: c0 + c1 X + c2 Y + c3 X Y
  std::array<double, 4> cu1{{0.7, -0.5, 0.3, 0.0}};
  std::array<double, 4> cu2{{-0.4, 0.6, 0.0, 0.2}};
  std::array<double, 4> cv{{1.0, 0.2, -0.3, 0.5}};
  std::array<double, 4> cp1{{0.6, 0.2, -0.8, 0.0}};
  std::array<double, 4> cp2{{-0.3, 0.5, 0.4, 0.0}};
};

SmoothStateSpec canonical_bump_state();
SmoothStateSpec random_bump_state(std::uint64_t seed);
MidsurfaceState sample_state(const SmoothStateSpec& spec, const Grid2& g);

// exponents of the generic physical-thickness ansatz
struct AnsatzExponents {
  double alpha = 4.0, beta = 1.0, gamma = 1.0;
};

// The generic ansatz sampled on the rescaled body: the physical form
// (x', x3) + (h^a u, h^b v) + x3 (h^g phi, 0) evaluated at x3_phys = h x3.
DeformationField3 build_ansatz(const MidsurfaceState& s, const AnsatzExponents& e, double h,
                               int nz);

// The recovery deformation
//   (x', h x3) + (h^{s/2} u, h^{s/2-1} v) + x3 (h^{s/2} phi, 1/2 h^{s/2} L(Gtilde))
// with L the relaxation minimizer applied at the nodes of Gtilde.
DeformationField3 build_recovery(const MidsurfaceState& s, double sigma, double h,
                                 const MaterialModel& m, int nz);

// Scaled-energy consistency of the ansatz against the quadratic density
// |F^T F - Id|^2, term by term against the thin-plate expansion.
struct AnsatzTerm {
  double measured = 0.0;
  double predicted = 0.0;
  double rel_err = 0.0;
};

struct AnsatzConsistency {
  double h = 0.0;
  AnsatzTerm shear;        // 2 h int |h^g phi + h^b grad'v|^2
  AnsatzTerm block;        // 4 h int |h^a sym grad'u + 1/2 h^{2b} grad'v (x) grad'v|^2
                           //   + (h^{2g+3}/3) int |sym grad'phi|^2
  double corner_measured = 0.0;  // display carries no corner term at leading order
  bool rm_compatible = false;    // gamma == beta and alpha == 2 beta
  double shear_exponent_gap = 0.0;     // gamma - beta
  double membrane_exponent_gap = 0.0;  // alpha - 2 beta
};

AnsatzConsistency ansatz_consistency(const MidsurfaceState& s, const AnsatzExponents& e,
                                     double h, int nz);

// Residual between the sampled strain of a recovery field and the displayed
// leading matrix; must be o(h^{sigma/2-1}).
struct StrainCheckReport {
  double max_residual = 0.0;
  double scaled_residual = 0.0;  // max_residual / h^{sigma/2-1}
  double off_block_max = 0.0;
};

StrainCheckReport strain_check(const DeformationField3& yhat, const MidsurfaceState& s,
                               double sigma, double h, const MaterialModel& m);

struct StudyRow {
  double h = 0.0;
  double sigma = 0.0;
  std::string variant;
  double scaled_total = 0.0;
  double scaled_membrane = 0.0;
  double scaled_shear = 0.0;
  double scaled_quartic = 0.0;
  double scaled_reg = 0.0;
  double scaled_sg = 0.0;
  double limit_total = 0.0;
  double rel_err = 0.0;
  double sg_l = 0.0;
  bool flagged = false;
};

struct GammaStudyOptions {
  int nz = 8;       // x3 resolution is fixed on the rescaled body
  int nx_min = 32;  // in-plane resolution max(nx_min, round(4/h))
  BcMode bc = BcMode::enforce;
};

Grid2 study_grid(double h, double lx, double ly, const GammaStudyOptions& opts);

std::vector<StudyRow> gamma_study(const SmoothStateSpec& spec, const std::vector<double>& h_list,
                                  double sigma, const MaterialModel& m, EnergyVariant variant,
                                  const GammaStudyOptions& opts = {});

void write_study_csv(const std::string& path, const std::vector<StudyRow>& rows,
                     const std::string& trailer = "");

}  // namespace rmplate
