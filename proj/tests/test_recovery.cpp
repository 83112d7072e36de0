#include <doctest.h>

#include <cmath>

#include "rmplate/recovery.hpp"

using namespace rmplate;

namespace {

MaterialModel unit_model() {
  MaterialParams p;
  return MaterialModel(p);
}

}  // namespace

TEST_CASE("bump states are compactly supported") {
  const SmoothStateSpec spec = canonical_bump_state();
  const Grid2 g(12, 10);
  const MidsurfaceState s = sample_state(spec, g);
  for (int i = 0; i < g.nx; ++i)
    for (int j = 0; j < g.ny; ++j)
      if (g.on_boundary(i, j)) {
        const std::size_t n = g.idx(i, j);
        CHECK(s.u[2 * n] == 0.0);
        CHECK(s.v[n] == 0.0);
        CHECK(s.phi[2 * n + 1] == 0.0);
      }
  double mx = 0.0;
  for (double v : s.v) mx = std::max(mx, std::abs(v));
  CHECK(mx > 0.1);  // genuinely nonzero inside
}

TEST_CASE("recovery of the zero state is the identity configuration") {
  const MaterialModel m = unit_model();
  SmoothStateSpec spec = canonical_bump_state();
  spec.amp_u = spec.amp_v = spec.amp_phi = 0.0;
  const Grid2 g(10, 10);
  const MidsurfaceState zero = sample_state(spec, g);
  const double h = 0.25;
  const DeformationField3 y = build_recovery(zero, 5.0, h, m, 6);
  const DeformationField3 id = identity_configuration(y.grid, h);
  for (std::size_t n = 0; n < y.v.size(); ++n) CHECK(y.v[n] == id.v[n]);
  CHECK(energy_ih(y, h, m).total < 1e-15);
}

TEST_CASE("the relaxation minimizer vanishes for the reference densities") {
  const MaterialModel m = unit_model();
  const Grid2 g(10, 10);
  const MidsurfaceState s = sample_state(canonical_bump_state(), g);
  const GtildeField gt = gtilde(s);
  for (std::size_t n = 0; n < g.count(); ++n) {
    Eigen::Matrix3d gm = Eigen::Matrix3d::Zero();
    gm(0, 2) = gm(2, 0) = gt.g[2 * n];
    gm(1, 2) = gm(2, 1) = gt.g[2 * n + 1];
    CHECK(std::abs(m.q2_relaxed(gm).c_star) < 1e-6);
  }
}

TEST_CASE("round trip: extract_midsurface after build_recovery") {
  const MaterialModel m = unit_model();
  const Grid2 g(12, 11);
  const double h = 0.25;
  for (std::uint64_t seed : {1ull, 2ull, 3ull}) {
    SmoothStateSpec spec = random_bump_state(seed);
    const MidsurfaceState s = sample_state(spec, g);
    for (double sigma : {4.0, 5.0, 6.0}) {
      const DeformationField3 y = build_recovery(s, sigma, h, m, 7);
      const MidsurfaceExtract ex = extract_midsurface(y, h, sigma);
      double worst = 0.0;
      for (std::size_t n = 0; n < g.count(); ++n) {
        worst = std::max(worst, std::abs(ex.state.v[n] - s.v[n]));
        for (int c = 0; c < 2; ++c) {
          worst = std::max(worst, std::abs(ex.state.u[2 * n + c] - s.u[2 * n + c]));
          worst = std::max(worst, std::abs(ex.state.phi[2 * n + c] - s.phi[2 * n + c]));
        }
      }
      CHECK(worst <= 1e-12);
    }
  }
}

TEST_CASE("recovery bending diagnostic approximates x3 grad'phi") {
  const MaterialModel m = unit_model();
  const Grid2 g(24, 24);
  const double h = 0.125, sigma = 5.0;
  const MidsurfaceState s = sample_state(canonical_bump_state(), g);
  const DeformationField3 y = build_recovery(s, sigma, h, m, 8);
  const MidsurfaceExtract ex = extract_midsurface(y, h, sigma);

  std::vector<double> comp(g.count()), p1x, p1y, p2x, p2y;
  for (std::size_t n = 0; n < g.count(); ++n) comp[n] = s.phi[2 * n];
  apply_d1(g, 0, comp, p1x);
  apply_d1(g, 1, comp, p1y);
  for (std::size_t n = 0; n < g.count(); ++n) comp[n] = s.phi[2 * n + 1];
  apply_d1(g, 0, comp, p2x);
  apply_d1(g, 1, comp, p2y);

  double worst = 0.0, scale = 0.0;
  const Grid3& g3 = y.grid;
  for (int i = 0; i < g3.nx; ++i)
    for (int j = 0; j < g3.ny; ++j)
      for (int k = 0; k < g3.nz; ++k) {
        const std::size_t n2 = g.idx(i, j);
        const double x3 = g3.x3(k);
        const double* b = &ex.bending[4 * g3.idx(i, j, k)];
        Eigen::Matrix2d want;
        want << p1x[n2], p1y[n2], p2x[n2], p2y[n2];
        want *= x3;
        Eigen::Matrix2d got;
        got << b[0], b[1], b[2], b[3];
        worst = std::max(worst, (got - want).cwiseAbs().maxCoeff());
        scale = std::max(scale, want.cwiseAbs().maxCoeff());
      }
  CHECK(worst <= 1e-9 * std::max(1.0, scale));
}

TEST_CASE("regularizer vanishes on recovery fields at stencil order") {
  const MaterialModel m = unit_model();
  const Grid2 g(12, 12);
  const MidsurfaceState s = sample_state(canonical_bump_state(), g);
  const DeformationField3 y = build_recovery(s, 5.0, 0.125, m, 8);
  const EnergyBreakdown eb = energy_ih(y, 0.125, m, EnergyVariant::plain, BcMode::ignore);
  CHECK(eb.e_reg <= 1e-20);
}

TEST_CASE("build_ansatz and scaled-energy consistency") {
  const Grid2 g(24, 24);
  const MidsurfaceState s = sample_state(canonical_bump_state(), g);

  SUBCASE("zero state gives the rescaled identity") {
    SmoothStateSpec zspec = canonical_bump_state();
    zspec.amp_u = zspec.amp_v = zspec.amp_phi = 0.0;
    const MidsurfaceState z = sample_state(zspec, g);
    const DeformationField3 y = build_ansatz(z, {4.0, 1.0, 1.0}, 0.25, 6);
    const DeformationField3 id = identity_configuration(y.grid, 0.25);
    for (std::size_t n = 0; n < y.v.size(); ++n) CHECK(y.v[n] == id.v[n]);
  }

  SUBCASE("compatible exponents match the expansion term by term") {
    const AnsatzExponents e{4.0, 2.0, 2.0};  // alpha = 2 beta, gamma = beta
    double prev_shear = 1e300, prev_block = 1e300;
    for (double h : {0.1, 0.05, 0.025}) {
      const AnsatzConsistency c = ansatz_consistency(s, e, h, 8);
      CHECK(c.rm_compatible);
      CHECK(c.shear.rel_err < prev_shear);
      CHECK(c.block.rel_err < prev_block);
      prev_shear = c.shear.rel_err;
      prev_block = c.block.rel_err;
    }
    CHECK(prev_shear < 0.02);
    CHECK(prev_block < 0.2);
  }

  SUBCASE("incompatible exponents flag the mismatched shear term") {
    const AnsatzConsistency c = ansatz_consistency(s, {4.0, 2.0, 1.5}, 0.1, 6);
    CHECK(!c.rm_compatible);
    CHECK(c.shear_exponent_gap == doctest::Approx(-0.5));
    CHECK(c.membrane_exponent_gap == doctest::Approx(0.0));
  }
}

TEST_CASE("strain_check residuals decay like the expansion promises") {
  const MaterialModel m = unit_model();
  const double sigma = 5.0;

  SUBCASE("zero state has zero residual") {
    SmoothStateSpec zspec = canonical_bump_state();
    zspec.amp_u = zspec.amp_v = zspec.amp_phi = 0.0;
    const Grid2 g(10, 10);
    const MidsurfaceState z = sample_state(zspec, g);
    const DeformationField3 y = build_recovery(z, sigma, 0.2, m, 6);
    const StrainCheckReport r = strain_check(y, z, sigma, 0.2, m);
    CHECK(r.max_residual < 1e-14);
  }

  SUBCASE("halving h beats the o(h^{sigma/2-1}) bound") {
    double prev = -1.0;
    for (double h : {0.2, 0.1, 0.05}) {
      const Grid2 g(20, 20);
      const MidsurfaceState s = sample_state(canonical_bump_state(), g);
      const DeformationField3 y = build_recovery(s, sigma, h, m, 8);
      const StrainCheckReport r = strain_check(y, s, sigma, h, m);
      if (prev >= 0.0) CHECK(r.max_residual <= 0.6 * prev);
      prev = r.max_residual;
      // off-block entries are h^{sigma/2-1}(phi + grad'v) to leading order
      const double hv = std::pow(h, sigma / 2.0 - 1.0);
      CHECK(r.off_block_max <= 3.0 * hv);
      CHECK(r.scaled_residual <= 1.0);
    }
  }
}

TEST_CASE("gamma_study") {
  const MaterialModel m = unit_model();
  GammaStudyOptions opts;
  opts.nx_min = 16;  // light grids for the unit suite

  SUBCASE("h_list validation") {
    CHECK_THROWS_AS(gamma_study(canonical_bump_state(), {0.1, 0.2}, 5.0, m,
                                EnergyVariant::plain, opts),
                    std::invalid_argument);
    CHECK_THROWS_AS(gamma_study(canonical_bump_state(), {1.5}, 5.0, m, EnergyVariant::plain,
                                opts),
                    std::invalid_argument);
  }

  SUBCASE("zero state yields all-zero rows") {
    SmoothStateSpec zspec = canonical_bump_state();
    zspec.amp_u = zspec.amp_v = zspec.amp_phi = 0.0;
    const auto rows = gamma_study(zspec, {0.25, 0.125}, 5.0, m, EnergyVariant::plain, opts);
    for (const auto& r : rows) {
      CHECK(!r.flagged);
      CHECK(std::abs(r.scaled_total) < 1e-10);
      CHECK(r.limit_total == 0.0);
    }
  }

  SUBCASE("sigma = 5 rel_err decreases") {
    const auto rows =
        gamma_study(canonical_bump_state(), {0.25, 0.125, 0.0625}, 5.0, m,
                    EnergyVariant::plain, opts);
    REQUIRE(rows.size() == 3);
    CHECK(rows[1].rel_err < rows[0].rel_err);
    CHECK(rows[2].rel_err < rows[1].rel_err);
    for (const auto& r : rows) {
      CHECK(!r.flagged);
      CHECK(r.scaled_reg < 1e-12);
      CHECK(r.sg_l == 0.0);  // plain variant does not carry the column
    }
  }

  SUBCASE("sigma = 4 second-gradient study has vanishing sg_L") {
    MaterialParams p;
    p.l = 1.0;
    p.sigma = 4.0;
    const MaterialModel m4(p);
    const auto rows = gamma_study(canonical_bump_state(), {0.25, 0.125}, 4.0, m4,
                                  EnergyVariant::second_grad, opts);
    REQUIRE(rows.size() == 2);
    CHECK(rows[1].rel_err < rows[0].rel_err);
    for (const auto& r : rows) {
      CHECK(r.scaled_sg > 0.0);
      CHECK(r.sg_l <= 1e-12);
    }
  }
}
