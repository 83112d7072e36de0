#include "rmplate/recovery.hpp"

#include <cmath>
#include <fstream>
#include <stdexcept>

#include "rmplate/rng.hpp"

namespace rmplate {

SmoothStateSpec canonical_bump_state() { return SmoothStateSpec{}; }

SmoothStateSpec random_bump_state(std::uint64_t seed) {
  Rng rng(seed);
  SmoothStateSpec s;
  s.amp_u = 0.3;
  s.amp_v = 0.6;
  s.amp_phi = 0.6;
  auto draw = [&](std::array<double, 4>& c) {
    for (double& v : c) v = rng.uniform(-1.0, 1.0);
  };
  draw(s.cu1);
  draw(s.cu2);
  draw(s.cv);
  draw(s.cp1);
  draw(s.cp2);
  return s;
}

MidsurfaceState sample_state(const SmoothStateSpec& spec, const Grid2& g) {
  if (std::abs(g.lx - spec.lx) > 1e-12 || std::abs(g.ly - spec.ly) > 1e-12)
    throw std::invalid_argument("sample_state: grid side lengths do not match the state spec");
  MidsurfaceState s(g);
  const double nrm = std::pow(0.5 * spec.lx, 2) * std::pow(0.5 * spec.ly, 2);
  auto poly = [](const std::array<double, 4>& c, double X, double Y) {
    return c[0] + c[1] * X + c[2] * Y + c[3] * X * Y;
  };
  for (int i = 0; i < g.nx; ++i)
    for (int j = 0; j < g.ny; ++j) {
      const std::size_t n = g.idx(i, j);
      if (g.on_boundary(i, j)) continue;  // exact compact support at nodes
      const double x1 = g.x1(i), x2 = g.x2(j);
      const double X = x1 / spec.lx, Y = x2 / spec.ly;
      const double b = std::pow(x1 * (spec.lx - x1) * x2 * (spec.ly - x2) / nrm, spec.k);
      s.u[2 * n] = spec.amp_u * b * poly(spec.cu1, X, Y);
      s.u[2 * n + 1] = spec.amp_u * b * poly(spec.cu2, X, Y);
      s.v[n] = spec.amp_v * b * poly(spec.cv, X, Y);
      s.phi[2 * n] = spec.amp_phi * b * poly(spec.cp1, X, Y);
      s.phi[2 * n + 1] = spec.amp_phi * b * poly(spec.cp2, X, Y);
    }
  return s;
}

DeformationField3 build_ansatz(const MidsurfaceState& s, const AnsatzExponents& e, double h,
                               int nz) {
  if (!(h > 0.0 && h < 1.0)) throw std::invalid_argument("build_ansatz: h in (0,1)");
  const Grid2& g2 = s.grid;
  Grid3 g(g2.nx, g2.ny, nz, g2.lx, g2.ly);
  DeformationField3 y(g);
  const double ha = std::pow(h, e.alpha), hb = std::pow(h, e.beta), hg = std::pow(h, e.gamma);
  for (int i = 0; i < g.nx; ++i)
    for (int j = 0; j < g.ny; ++j) {
      const std::size_t n = g2.idx(i, j);
      for (int k = 0; k < g.nz; ++k) {
        const double x3p = h * g.x3(k);  // physical thickness coordinate
        y.set(i, j, k,
              {g.x1(i) + ha * s.u[2 * n] + x3p * hg * s.phi[2 * n],
               g.x2(j) + ha * s.u[2 * n + 1] + x3p * hg * s.phi[2 * n + 1],
               x3p + hb * s.v[n]});
      }
    }
  return y;
}

DeformationField3 build_recovery(const MidsurfaceState& s, double sigma, double h,
                                 const MaterialModel& m, int nz) {
  if (!(h > 0.0 && h < 1.0)) throw std::invalid_argument("build_recovery: h in (0,1)");
  if (!(sigma >= 4.0)) throw std::invalid_argument("build_recovery: sigma >= 4");
  const Grid2& g2 = s.grid;
  Grid3 g(g2.nx, g2.ny, nz, g2.lx, g2.ly);
  DeformationField3 y(g);
  const double hs = std::pow(h, sigma / 2.0);
  const double hv = std::pow(h, sigma / 2.0 - 1.0);

  const GtildeField gt = gtilde(s);
  std::vector<double> cstar(g2.count(), 0.0);
  for (std::size_t n = 0; n < g2.count(); ++n) {
    Eigen::Matrix3d gm = Eigen::Matrix3d::Zero();
    gm(0, 2) = gm(2, 0) = gt.g[2 * n];
    gm(1, 2) = gm(2, 1) = gt.g[2 * n + 1];
    cstar[n] = m.q2_relaxed(gm).c_star;
  }

  for (int i = 0; i < g.nx; ++i)
    for (int j = 0; j < g.ny; ++j) {
      const std::size_t n = g2.idx(i, j);
      for (int k = 0; k < g.nz; ++k) {
        const double x3 = g.x3(k);
        y.set(i, j, k,
              {g.x1(i) + hs * s.u[2 * n] + x3 * hs * s.phi[2 * n],
               g.x2(j) + hs * s.u[2 * n + 1] + x3 * hs * s.phi[2 * n + 1],
               h * x3 + hv * s.v[n] + x3 * 0.5 * hs * cstar[n]});
      }
    }
  return y;
}

namespace {

// state values and element gradients at the in-plane Gauss point of a 3D
// sample (2D Gauss index = top two bits of the 3D one)
struct StateAtGauss {
  Eigen::Vector2d u, phi, grad_v;
  Eigen::Matrix2d grad_u, grad_phi;
  double v = 0.0, cstar = 0.0;
};

StateAtGauss state_at_gauss(const MidsurfaceState& s, const std::vector<double>& cstar, int ei,
                            int ej, int q2) {
  const Grid2& g = s.grid;
  const auto& gt = detail::gauss2();
  const double sx = 2.0 / g.dx(), sy = 2.0 / g.dy();
  StateAtGauss out;
  out.u.setZero();
  out.phi.setZero();
  out.grad_v.setZero();
  out.grad_u.setZero();
  out.grad_phi.setZero();
  for (int c = 0; c < 4; ++c) {
    const std::size_t n = g.idx(ei + ((c >> 1) & 1), ej + (c & 1));
    const double nn = gt.n[q2][c];
    const double d0 = gt.dn[q2][c][0] * sx, d1 = gt.dn[q2][c][1] * sy;
    const Eigen::Vector2d uc(s.u[2 * n], s.u[2 * n + 1]);
    const Eigen::Vector2d pc(s.phi[2 * n], s.phi[2 * n + 1]);
    out.u += nn * uc;
    out.phi += nn * pc;
    out.v += nn * s.v[n];
    out.cstar += nn * cstar[n];
    out.grad_v += Eigen::Vector2d(d0 * s.v[n], d1 * s.v[n]);
    out.grad_u.col(0) += d0 * uc;
    out.grad_u.col(1) += d1 * uc;
    out.grad_phi.col(0) += d0 * pc;
    out.grad_phi.col(1) += d1 * pc;
  }
  return out;
}

}  // namespace

AnsatzConsistency ansatz_consistency(const MidsurfaceState& s, const AnsatzExponents& e,
                                     double h, int nz) {
  AnsatzConsistency out;
  out.h = h;
  out.rm_compatible =
      std::abs(e.gamma - e.beta) < 1e-12 && std::abs(e.alpha - 2.0 * e.beta) < 1e-12;
  out.shear_exponent_gap = e.gamma - e.beta;
  out.membrane_exponent_gap = e.alpha - 2.0 * e.beta;

  const DeformationField3 y = build_ansatz(s, e, h, nz);
  double shear = 0.0, block = 0.0, corner = 0.0;
  for_each_strain_sample(y, h, [&](const StrainSample& sm) {
    const Eigen::Matrix3d d = sm.fh.transpose() * sm.fh - Eigen::Matrix3d::Identity();
    block += sm.weight * d.topLeftCorner<2, 2>().squaredNorm();
    shear += sm.weight * 2.0 * (d(0, 2) * d(0, 2) + d(1, 2) * d(1, 2));
    corner += sm.weight * d(2, 2) * d(2, 2);
  });
  // the physical-domain integral carries the thickness Jacobian h
  out.shear.measured = h * shear;
  out.block.measured = h * block;
  out.corner_measured = h * corner;

  // term-by-term prediction of the expansion, on the same 2D quadrature
  const Grid2& g2 = s.grid;
  const std::vector<double> zero(g2.count(), 0.0);
  const double ha = std::pow(h, e.alpha), hb = std::pow(h, e.beta), hg = std::pow(h, e.gamma);
  double pshear = 0.0, pmem = 0.0, pbend = 0.0;
  const double w2d = g2.dx() * g2.dy() / 4.0;
  for (int i = 0; i + 1 < g2.nx; ++i)
    for (int j = 0; j + 1 < g2.ny; ++j)
      for (int q = 0; q < 4; ++q) {
        const StateAtGauss st = state_at_gauss(s, zero, i, j, q);
        pshear += w2d * (hg * st.phi + hb * st.grad_v).squaredNorm();
        const Eigen::Matrix2d msym =
            ha * 0.5 * (st.grad_u + st.grad_u.transpose()) +
            0.5 * hb * hb * st.grad_v * st.grad_v.transpose();
        pmem += w2d * msym.squaredNorm();
        pbend += w2d * 0.25 * (st.grad_phi + st.grad_phi.transpose()).squaredNorm();
      }
  out.shear.predicted = 2.0 * h * pshear;
  out.block.predicted = 4.0 * h * pmem + std::pow(h, 2.0 * e.gamma + 3.0) / 3.0 * pbend;
  auto rel = [](AnsatzTerm& t) {
    t.rel_err = std::abs(t.measured - t.predicted) / std::max(std::abs(t.predicted), 1e-300);
  };
  rel(out.shear);
  rel(out.block);
  return out;
}

StrainCheckReport strain_check(const DeformationField3& yhat, const MidsurfaceState& s,
                               double sigma, double h, const MaterialModel& m) {
  if (!yhat.grid.plane().same_layout(s.grid))
    throw std::invalid_argument("strain_check: grid mismatch");
  const double hs = std::pow(h, sigma / 2.0);
  const double hv = std::pow(h, sigma / 2.0 - 1.0);

  const GtildeField gt = gtilde(s);
  std::vector<double> cstar(s.grid.count(), 0.0);
  for (std::size_t n = 0; n < s.grid.count(); ++n) {
    Eigen::Matrix3d gm = Eigen::Matrix3d::Zero();
    gm(0, 2) = gm(2, 0) = gt.g[2 * n];
    gm(1, 2) = gm(2, 1) = gt.g[2 * n + 1];
    cstar[n] = m.q2_relaxed(gm).c_star;
  }

  StrainCheckReport rep;
  for_each_strain_sample(yhat, h, [&](const StrainSample& sm) {
    const StateAtGauss st = state_at_gauss(s, cstar, sm.ei, sm.ej, sm.qp >> 1);
    Eigen::Matrix3d ref = Eigen::Matrix3d::Identity();
    const Eigen::Matrix2d su = 0.5 * (st.grad_u + st.grad_u.transpose());
    const Eigen::Matrix2d sp = 0.5 * (st.grad_phi + st.grad_phi.transpose());
    ref.topLeftCorner<2, 2>() += 2.0 * hs * su + 2.0 * sm.x3 * hs * sp;
    const Eigen::Vector2d off = hv * (st.phi + st.grad_v);
    ref(0, 2) = ref(2, 0) = off[0];
    ref(1, 2) = ref(2, 1) = off[1];
    ref(2, 2) = 1.0 + hv * st.cstar;
    const Eigen::Matrix3d meas = sm.fh.transpose() * sm.fh;
    rep.max_residual = std::max(rep.max_residual, (meas - ref).cwiseAbs().maxCoeff());
    rep.off_block_max = std::max(rep.off_block_max, std::abs(meas(0, 2)));
    rep.off_block_max = std::max(rep.off_block_max, std::abs(meas(1, 2)));
  });
  rep.scaled_residual = rep.max_residual / hv;
  return rep;
}

Grid2 study_grid(double h, double lx, double ly, const GammaStudyOptions& opts) {
  const int n = std::max(opts.nx_min, int(std::lround(4.0 / h)));
  return Grid2(n, n, lx, ly);
}

std::vector<StudyRow> gamma_study(const SmoothStateSpec& spec, const std::vector<double>& h_list,
                                  double sigma, const MaterialModel& m, EnergyVariant variant,
                                  const GammaStudyOptions& opts) {
  for (std::size_t i = 0; i < h_list.size(); ++i) {
    if (!(h_list[i] > 0.0 && h_list[i] < 1.0))
      throw std::invalid_argument("gamma_study: h values must lie in (0,1)");
    if (i > 0 && !(h_list[i] < h_list[i - 1]))
      throw std::invalid_argument("gamma_study: h_list must be strictly decreasing");
  }
  std::vector<StudyRow> rows;
  rows.reserve(h_list.size());
  for (const double h : h_list) {
    const Grid2 g2 = study_grid(h, spec.lx, spec.ly, opts);
    const MidsurfaceState state = sample_state(spec, g2);
    DeformationField3 y = build_recovery(state, sigma, h, m, opts.nz);
    if (opts.bc == BcMode::enforce) y = apply_bc(std::move(y), h);
    const EnergyBreakdown eb = energy_ih(y, h, m, variant, opts.bc);

    StudyRow r;
    r.h = h;
    r.sigma = sigma;
    r.variant = variant == EnergyVariant::second_grad ? "second_grad" : "plain";
    if (eb.infeasible()) {
      r.flagged = true;
      rows.push_back(r);
      continue;
    }
    const double sc = std::pow(h, -sigma);
    r.scaled_total = sc * eb.total;
    r.scaled_membrane = sc * eb.e_membrane;
    r.scaled_shear = sc * eb.e_shear;
    r.scaled_quartic = sc * eb.e_quartic;
    r.scaled_reg = sc * eb.e_reg;
    r.scaled_sg = sc * eb.e_secondgrad;
    const LimitVariant lv =
        variant == EnergyVariant::second_grad ? LimitVariant::second_grad : LimitVariant::plain;
    r.limit_total = limit_energy(state, m, lv).total;
    r.rel_err = std::abs(r.scaled_total - r.limit_total) /
                std::max(std::abs(r.limit_total), 1e-300);
    if (variant == EnergyVariant::second_grad)
      r.sg_l = sc * secondgrad_mixed_y3_term(y, h, m);
    rows.push_back(r);
  }
  return rows;
}

void write_study_csv(const std::string& path, const std::vector<StudyRow>& rows,
                     const std::string& trailer) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("write_study_csv: cannot open " + path);
  os << "h,sigma,variant,scaled_total,scaled_membrane,scaled_shear,scaled_quartic,scaled_reg,"
        "scaled_sg,limit_total,rel_err,sg_L\n";
  for (const auto& r : rows) {
    os << format_double(r.h) << ',' << format_double(r.sigma) << ',' << r.variant << ','
       << format_double(r.scaled_total) << ',' << format_double(r.scaled_membrane) << ','
       << format_double(r.scaled_shear) << ',' << format_double(r.scaled_quartic) << ','
       << format_double(r.scaled_reg) << ',' << format_double(r.scaled_sg) << ','
       << format_double(r.limit_total) << ',' << format_double(r.rel_err) << ','
       << format_double(r.sg_l);
    if (r.flagged) os << ",flagged";
    os << '\n';
  }
  if (!trailer.empty()) os << trailer << '\n';
}

}  // namespace rmplate
