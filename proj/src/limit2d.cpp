#include "rmplate/limit2d.hpp"

#include <cmath>
#include <fstream>
#include <stdexcept>

namespace rmplate {

namespace {

// 2x2 coefficient matrix of the shear energy density: e_shear integrand is
// 1/2 g^T S g for g = phi + grad'v. The quadratic form of W2 acts on
// increments of the deformation gradient, whose symmetric part carries half
// of the strain entries, so S is the relaxed form of the half-embedding:
// 1/2 g^T S g = 1/2 min_c Q3_2(sym G + c e33) = 1/8 Q2_2(Gtilde(g)).
// (This is the constant the recovery sequence attains; see the ledger.)
Eigen::Matrix2d shear_matrix(const MaterialModel& m) {
  auto embed = [](const Eigen::Vector2d& g) {
    Eigen::Matrix3d mm = Eigen::Matrix3d::Zero();
    mm(0, 2) = mm(2, 0) = 0.5 * g[0];
    mm(1, 2) = mm(2, 1) = 0.5 * g[1];
    return mm;
  };
  Eigen::Matrix2d s;
  const Eigen::Matrix3d g0 = embed({1, 0}), g1 = embed({0, 1});
  s(0, 0) = m.q2_value(g0);
  s(1, 1) = m.q2_value(g1);
  const double mixed = 0.5 * (m.q2_value(embed({1, 1})) - s(0, 0) - s(1, 1));
  s(0, 1) = s(1, 0) = mixed;
  return s;
}

// 4x4 matrix with Q3_1(sym M) = vec(M)^T T vec(M), vec index p = 2a + b
Eigen::Matrix4d membrane_matrix(const MaterialModel& m) {
  Eigen::Matrix4d t;
  auto basis = [](int p) {
    Eigen::Matrix2d e = Eigen::Matrix2d::Zero();
    e(p / 2, p % 2) = 1.0;
    return Eigen::Matrix2d(0.5 * (e + e.transpose()));
  };
  for (int p = 0; p < 4; ++p)
    for (int q = 0; q < 4; ++q) t(p, q) = m.form1().bilinear(basis(p), basis(q));
  return t;
}

struct NodalDerivs {
  std::vector<double> u1x, u1y, u2x, u2y, vx, vy, p1x, p1y, p2x, p2y;
};

NodalDerivs nodal_derivs(const MidsurfaceState& s) {
  const Grid2& g = s.grid;
  NodalDerivs d;
  std::vector<double> tmp(g.count());
  auto comp = [&](const std::vector<double>& src, int ncomp, int c) {
    for (std::size_t n = 0; n < g.count(); ++n) tmp[n] = src[ncomp * n + c];
    return tmp;
  };
  apply_d1(g, 0, comp(s.u, 2, 0), d.u1x);
  apply_d1(g, 1, comp(s.u, 2, 0), d.u1y);
  apply_d1(g, 0, comp(s.u, 2, 1), d.u2x);
  apply_d1(g, 1, comp(s.u, 2, 1), d.u2y);
  apply_d1(g, 0, s.v, d.vx);
  apply_d1(g, 1, s.v, d.vy);
  apply_d1(g, 0, comp(s.phi, 2, 0), d.p1x);
  apply_d1(g, 1, comp(s.phi, 2, 0), d.p1y);
  apply_d1(g, 0, comp(s.phi, 2, 1), d.p2x);
  apply_d1(g, 1, comp(s.phi, 2, 1), d.p2y);
  return d;
}

double sg_v_term(const Grid2& g, const std::vector<double>& v, double l) {
  std::vector<double> a, b;
  double acc = 0.0;
  auto sum_sq = [&](const std::vector<double>& w, double fac) {
    for (int i = 0; i < g.nx; ++i)
      for (int j = 0; j < g.ny; ++j) {
        const double e = w[g.idx(i, j)];
        acc += fac * g.weight(i, j) * e * e;
      }
  };
  apply_d2(g, 0, v, a);
  sum_sq(a, 1.0);
  apply_d2(g, 1, v, a);
  sum_sq(a, 1.0);
  apply_d1(g, 1, v, a);
  apply_d1(g, 0, a, b);
  sum_sq(b, 2.0);
  return l * acc;
}

double sg_phi_term(const Grid2& g, const std::vector<double>& phi, double l) {
  std::vector<double> comp(g.count()), d;
  double acc = 0.0;
  for (int c = 0; c < 2; ++c) {
    for (std::size_t n = 0; n < g.count(); ++n) comp[n] = phi[2 * n + c];
    for (int axis = 0; axis < 2; ++axis) {
      apply_d1(g, axis, comp, d);
      for (int i = 0; i < g.nx; ++i)
        for (int j = 0; j < g.ny; ++j) {
          const double e = d[g.idx(i, j)];
          acc += g.weight(i, j) * e * e;
        }
    }
  }
  return l * acc;
}

LimitBreakdown limit_eval(const MidsurfaceState& s, const MaterialModel& m, LimitVariant variant,
                          const ForceSpec* force, LimitScheme scheme) {
  const Grid2& g = s.grid;
  const MaterialParams& p = m.params();
  if (variant == LimitVariant::second_grad && (g.nx < 5 || g.ny < 5))
    throw std::invalid_argument("limit_energy: the second_grad variant needs >= 5 nodes per axis");
  if (force) {
    force->validate();
    if (!force->grid.same_layout(g))
      throw std::invalid_argument("limit_energy: force grid mismatch");
  }

  const Eigen::Matrix2d S = shear_matrix(m);
  const Eigen::Matrix4d T = membrane_matrix(m);
  auto qform = [&](const Eigen::Matrix2d& mm) {
    Eigen::Vector4d v(mm(0, 0), mm(0, 1), mm(1, 0), mm(1, 1));
    return v.dot(T * v);
  };

  LimitBreakdown out;

  if (scheme == LimitScheme::nodal) {
    const NodalDerivs d = nodal_derivs(s);
    for (int i = 0; i < g.nx; ++i)
      for (int j = 0; j < g.ny; ++j) {
        const std::size_t n = g.idx(i, j);
        const double w = g.weight(i, j);
        const Eigen::Vector2d gg(s.phi[2 * n] + d.vx[n], s.phi[2 * n + 1] + d.vy[n]);
        out.e_shear += 0.5 * w * gg.dot(S * gg);
        Eigen::Matrix2d gu;
        gu << d.u1x[n], d.u1y[n], d.u2x[n], d.u2y[n];
        Eigen::Matrix2d mm = gu + gu.transpose();
        if (variant == LimitVariant::second_grad) {
          const Eigen::Vector2d gv(d.vx[n], d.vy[n]);
          mm += gv * gv.transpose();
          out.e_quartic += p.c1 * w * std::pow(gv.squaredNorm(), 2);
        }
        out.e_membrane += 0.5 * w * qform(mm);
        Eigen::Matrix2d gp;
        gp << d.p1x[n], d.p1y[n], d.p2x[n], d.p2y[n];
        out.e_bending += (1.0 / 6.0) * w * qform(gp);
      }
  } else {
    const auto& gt = detail::gauss2();
    const double dx = g.dx(), dy = g.dy();
    const double w = dx * dy / 4.0;
    const double sx = 2.0 / dx, sy = 2.0 / dy;
    for (int i = 0; i + 1 < g.nx; ++i)
      for (int j = 0; j + 1 < g.ny; ++j) {
        std::array<Eigen::Vector2d, 4> uc, pc;
        std::array<double, 4> vc;
        for (int c = 0; c < 4; ++c) {
          const std::size_t n = g.idx(i + ((c >> 1) & 1), j + (c & 1));
          uc[c] = {s.u[2 * n], s.u[2 * n + 1]};
          pc[c] = {s.phi[2 * n], s.phi[2 * n + 1]};
          vc[c] = s.v[n];
        }
        for (int q = 0; q < 4; ++q) {
          Eigen::Vector2d phi = Eigen::Vector2d::Zero(), gv = Eigen::Vector2d::Zero();
          Eigen::Matrix2d gu = Eigen::Matrix2d::Zero(), gp = Eigen::Matrix2d::Zero();
          for (int c = 0; c < 4; ++c) {
            const double d0 = gt.dn[q][c][0] * sx, d1 = gt.dn[q][c][1] * sy;
            phi += gt.n[q][c] * pc[c];
            gv += Eigen::Vector2d(d0 * vc[c], d1 * vc[c]);
            gu.col(0) += d0 * uc[c];
            gu.col(1) += d1 * uc[c];
            gp.col(0) += d0 * pc[c];
            gp.col(1) += d1 * pc[c];
          }
          const Eigen::Vector2d gg = phi + gv;
          out.e_shear += 0.5 * w * gg.dot(S * gg);
          Eigen::Matrix2d mm = gu + gu.transpose();
          if (variant == LimitVariant::second_grad) {
            mm += gv * gv.transpose();
            out.e_quartic += p.c1 * w * std::pow(gv.squaredNorm(), 2);
          }
          out.e_membrane += 0.5 * w * qform(mm);
          out.e_bending += (1.0 / 6.0) * w * qform(gp);
        }
      }
  }

  if (variant == LimitVariant::second_grad) {
    out.e_sg_v = sg_v_term(g, s.v, p.l);
    out.e_sg_phi = sg_phi_term(g, s.phi, p.l);
  }

  if (force) {
    double acc = 0.0;
    for (int i = 0; i < g.nx; ++i)
      for (int j = 0; j < g.ny; ++j)
        acc += g.weight(i, j) * force->f3[g.idx(i, j)] * s.v[g.idx(i, j)];
    out.e_force = -acc;
  }

  out.total = out.e_shear + out.e_membrane + out.e_bending + out.e_sg_v + out.e_sg_phi +
              out.e_quartic + out.e_force;
  return out;
}

}  // namespace

GtildeField gtilde(const MidsurfaceState& s) {
  const Grid2& g = s.grid;
  GtildeField out;
  out.grid = g;
  out.g.assign(2 * g.count(), 0.0);
  std::vector<double> vx, vy;
  apply_d1(g, 0, s.v, vx);
  apply_d1(g, 1, s.v, vy);
  for (std::size_t n = 0; n < g.count(); ++n) {
    out.g[2 * n] = s.phi[2 * n] + vx[n];
    out.g[2 * n + 1] = s.phi[2 * n + 1] + vy[n];
  }
  return out;
}

LimitBreakdown limit_energy(const MidsurfaceState& s, const MaterialModel& m, LimitVariant variant,
                            const ForceSpec* force, LimitScheme scheme) {
  return limit_eval(s, m, variant, force, scheme);
}

double linear_rm_energy(const LinearRmCoeffs& coeffs, const MidsurfaceState& s) {
  for (int i = 0; i < 2; ++i) {
    if (coeffs.a[i] < 0.0) throw std::invalid_argument("linear_rm_energy: negative coefficient");
    for (int j = 0; j < 2; ++j)
      if (coeffs.b[i][j] < 0.0 || coeffs.c[i][j] < 0.0)
        throw std::invalid_argument("linear_rm_energy: negative coefficient");
  }
  const Grid2& g = s.grid;
  const NodalDerivs d = nodal_derivs(s);
  double acc = 0.0;
  for (int i = 0; i < g.nx; ++i)
    for (int j = 0; j < g.ny; ++j) {
      const std::size_t n = g.idx(i, j);
      const double w = g.weight(i, j);
      const double gv[2] = {d.vx[n], d.vy[n]};
      const double shear[2] = {s.phi[2 * n] + gv[0], s.phi[2 * n + 1] + gv[1]};
      for (int a = 0; a < 2; ++a) acc += w * coeffs.a[a] * shear[a] * shear[a];
      const double gp[2][2] = {{d.p1x[n], d.p1y[n]}, {d.p2x[n], d.p2y[n]}};
      for (int a = 0; a < 2; ++a)
        for (int b = 0; b < 2; ++b) {
          const double e = gp[b][a] + gp[a][b];  // d_a phi_b + d_b phi_a
          acc += w * coeffs.b[a][b] * e * e;
        }
      if (coeffs.use_membrane) {
        const double gu[2][2] = {{d.u1x[n], d.u1y[n]}, {d.u2x[n], d.u2y[n]}};
        for (int a = 0; a < 2; ++a)
          for (int b = 0; b < 2; ++b) {
            const double e = gu[b][a] + gu[a][b] + 0.5 * gv[a] * gv[b];
            acc += w * coeffs.c[a][b] * e * e;
          }
      }
    }
  return acc;
}

// ---------------------------------------------------------------------------

std::vector<std::uint8_t> LimitObjective::boundary_mask() const {
  const int dpn = dof_per_node();
  std::vector<std::uint8_t> m(grid.count() * std::size_t(dpn), 0);
  for (int i = 0; i < grid.nx; ++i)
    for (int j = 0; j < grid.ny; ++j)
      if (grid.on_boundary(i, j))
        for (int c = 0; c < dpn; ++c) m[grid.idx(i, j) * std::size_t(dpn) + c] = 1;
  return m;
}

MidsurfaceState LimitObjective::unpack(const Eigen::VectorXd& x) const {
  MidsurfaceState s(grid);
  const int dpn = dof_per_node();
  for (std::size_t n = 0; n < grid.count(); ++n) {
    const Eigen::Index b = Eigen::Index(n) * dpn;
    if (with_u) {
      s.u[2 * n] = x[b];
      s.u[2 * n + 1] = x[b + 1];
      s.v[n] = x[b + 2];
      s.phi[2 * n] = x[b + 3];
      s.phi[2 * n + 1] = x[b + 4];
    } else {
      s.v[n] = x[b];
      s.phi[2 * n] = x[b + 1];
      s.phi[2 * n + 1] = x[b + 2];
    }
  }
  return s;
}

Eigen::VectorXd LimitObjective::pack(const MidsurfaceState& s) const {
  Eigen::VectorXd x(size());
  const int dpn = dof_per_node();
  for (std::size_t n = 0; n < grid.count(); ++n) {
    const Eigen::Index b = Eigen::Index(n) * dpn;
    if (with_u) {
      x[b] = s.u[2 * n];
      x[b + 1] = s.u[2 * n + 1];
      x[b + 2] = s.v[n];
      x[b + 3] = s.phi[2 * n];
      x[b + 4] = s.phi[2 * n + 1];
    } else {
      x[b] = s.v[n];
      x[b + 1] = s.phi[2 * n];
      x[b + 2] = s.phi[2 * n + 1];
    }
  }
  return x;
}

double LimitObjective::energy(const Eigen::VectorXd& x) const {
  return limit_eval(unpack(x), *model, variant, force, LimitScheme::element).total;
}

void LimitObjective::gradient(const Eigen::VectorXd& x, Eigen::VectorXd& gr) const {
  const MidsurfaceState s = unpack(x);
  const Grid2& g = grid;
  const MaterialParams& p = model->params();
  const Eigen::Matrix2d S = shear_matrix(*model);
  const Eigen::Matrix4d T = membrane_matrix(*model);
  gr.setZero(size());
  const int dpn = dof_per_node();
  auto at_v = [&](std::size_t n) -> double& { return gr[Eigen::Index(n) * dpn + (with_u ? 2 : 0)]; };
  auto at_phi = [&](std::size_t n, int c) -> double& {
    return gr[Eigen::Index(n) * dpn + (with_u ? 3 : 1) + c];
  };
  auto at_u = [&](std::size_t n, int c) -> double& { return gr[Eigen::Index(n) * dpn + c]; };

  const auto& gt = detail::gauss2();
  const double dx = g.dx(), dy = g.dy();
  const double w = dx * dy / 4.0;
  const double sx = 2.0 / dx, sy = 2.0 / dy;
  const bool membrane_on = with_u || variant == LimitVariant::second_grad;

  for (int i = 0; i + 1 < g.nx; ++i)
    for (int j = 0; j + 1 < g.ny; ++j) {
      std::array<std::size_t, 4> nn;
      std::array<Eigen::Vector2d, 4> uc, pc;
      std::array<double, 4> vc;
      for (int c = 0; c < 4; ++c) {
        nn[c] = g.idx(i + ((c >> 1) & 1), j + (c & 1));
        uc[c] = {s.u[2 * nn[c]], s.u[2 * nn[c] + 1]};
        pc[c] = {s.phi[2 * nn[c]], s.phi[2 * nn[c] + 1]};
        vc[c] = s.v[nn[c]];
      }
      for (int q = 0; q < 4; ++q) {
        Eigen::Vector2d phi = Eigen::Vector2d::Zero(), gv = Eigen::Vector2d::Zero();
        Eigen::Matrix2d gu = Eigen::Matrix2d::Zero(), gp = Eigen::Matrix2d::Zero();
        std::array<Eigen::Vector2d, 4> dN;
        for (int c = 0; c < 4; ++c) {
          dN[c] = {gt.dn[q][c][0] * sx, gt.dn[q][c][1] * sy};
          phi += gt.n[q][c] * pc[c];
          gv += vc[c] * dN[c];
          gu.col(0) += dN[c][0] * uc[c];
          gu.col(1) += dN[c][1] * uc[c];
          gp.col(0) += dN[c][0] * pc[c];
          gp.col(1) += dN[c][1] * pc[c];
        }
        // shear
        const Eigen::Vector2d sg = w * (S * (phi + gv));
        for (int c = 0; c < 4; ++c) {
          at_v(nn[c]) += sg.dot(dN[c]);
          at_phi(nn[c], 0) += sg[0] * gt.n[q][c];
          at_phi(nn[c], 1) += sg[1] * gt.n[q][c];
        }
        // bending: dE/d(gp) = (1/3) w unvec(T vec(gp))
        {
          Eigen::Vector4d k(gp(0, 0), gp(0, 1), gp(1, 0), gp(1, 1));
          Eigen::Vector4d dk = (w / 3.0) * (T * k);
          for (int c = 0; c < 4; ++c) {
            at_phi(nn[c], 0) += dk[0] * dN[c][0] + dk[1] * dN[c][1];
            at_phi(nn[c], 1) += dk[2] * dN[c][0] + dk[3] * dN[c][1];
          }
        }
        if (membrane_on) {
          Eigen::Matrix2d mm = gu + gu.transpose();
          if (variant == LimitVariant::second_grad) mm += gv * gv.transpose();
          Eigen::Vector4d vm(mm(0, 0), mm(0, 1), mm(1, 0), mm(1, 1));
          Eigen::Vector4d dm = w * (T * vm);
          Eigen::Matrix2d D;
          D << dm[0], dm[1], dm[2], dm[3];
          const Eigen::Matrix2d Dsym = D + D.transpose();
          if (with_u)
            for (int c = 0; c < 4; ++c) {
              at_u(nn[c], 0) += Dsym(0, 0) * dN[c][0] + Dsym(0, 1) * dN[c][1];
              at_u(nn[c], 1) += Dsym(1, 0) * dN[c][0] + Dsym(1, 1) * dN[c][1];
            }
          if (variant == LimitVariant::second_grad) {
            const Eigen::Vector2d dv = Dsym * gv;
            for (int c = 0; c < 4; ++c) at_v(nn[c]) += dv.dot(dN[c]);
          }
        }
        if (variant == LimitVariant::second_grad) {
          const Eigen::Vector2d dq = (4.0 * p.c1 * w * gv.squaredNorm()) * gv;
          for (int c = 0; c < 4; ++c) at_v(nn[c]) += dq.dot(dN[c]);
        }
      }
    }

  // nodal second-difference terms
  if (variant == LimitVariant::second_grad && p.l > 0.0) {
    std::vector<double> a, b, wv(g.count()), acc(g.count()), t;
    auto weight_mul = [&](const std::vector<double>& src, double fac) {
      for (int i = 0; i < g.nx; ++i)
        for (int j = 0; j < g.ny; ++j) {
          const std::size_t n = g.idx(i, j);
          wv[n] = fac * g.weight(i, j) * src[n];
        }
    };
    // v part
    acc.assign(g.count(), 0.0);
    for (int axis = 0; axis < 2; ++axis) {
      apply_d2(g, axis, s.v, a);
      weight_mul(a, 2.0 * p.l);
      add_d2_transpose(g, axis, wv, acc);
    }
    apply_d1(g, 1, s.v, a);
    apply_d1(g, 0, a, b);
    weight_mul(b, 4.0 * p.l);
    t.assign(g.count(), 0.0);
    add_d1_transpose(g, 0, wv, t);
    add_d1_transpose(g, 1, t, acc);
    for (std::size_t n = 0; n < g.count(); ++n) at_v(n) += acc[n];
    // phi part
    std::vector<double> comp(g.count());
    for (int c = 0; c < 2; ++c) {
      acc.assign(g.count(), 0.0);
      for (std::size_t n = 0; n < g.count(); ++n) comp[n] = s.phi[2 * n + c];
      for (int axis = 0; axis < 2; ++axis) {
        apply_d1(g, axis, comp, a);
        weight_mul(a, 2.0 * p.l);
        add_d1_transpose(g, axis, wv, acc);
      }
      for (std::size_t n = 0; n < g.count(); ++n) at_phi(n, c) += acc[n];
    }
  }

  if (force) {
    for (int i = 0; i < g.nx; ++i)
      for (int j = 0; j < g.ny; ++j) {
        const std::size_t n = g.idx(i, j);
        at_v(n) -= g.weight(i, j) * force->f3[n];
      }
  }
}

LimitMinimizeResult minimize_limit(const Grid2& grid, const MaterialModel& m,
                                   const ForceSpec& force, const MinimizeOptions& opts) {
  force.validate();
  LimitObjective obj{grid, false, LimitVariant::plain, &m, &force};
  const Eigen::VectorXd x0 = Eigen::VectorXd::Zero(obj.size());
  const auto mask = obj.boundary_mask();
  MinimizeResult r = minimize([&](const Eigen::VectorXd& x) { return obj.energy(x); },
                              [&](const Eigen::VectorXd& x, Eigen::VectorXd& gr) { obj.gradient(x, gr); },
                              x0, mask, opts);
  if (r.status == MinimizeStatus::max_iters)
    throw std::runtime_error("minimize_limit: no convergence after max iterations, residual " +
                             std::to_string(r.grad_norm));
  LimitMinimizeResult out;
  out.state = obj.unpack(r.x);
  out.breakdown = limit_eval(out.state, m, obj.variant, &force, LimitScheme::element);
  out.opt = std::move(r);
  return out;
}

LimitMinimizeResult minimize_limit_full(const Grid2& grid, const MaterialModel& m,
                                        const ForceSpec* force, LimitVariant variant,
                                        const MinimizeOptions& opts) {
  if (force) force->validate();
  LimitObjective obj{grid, true, variant, &m, force};
  const Eigen::VectorXd x0 = Eigen::VectorXd::Zero(obj.size());
  const auto mask = obj.boundary_mask();
  MinimizeResult r = minimize([&](const Eigen::VectorXd& x) { return obj.energy(x); },
                              [&](const Eigen::VectorXd& x, Eigen::VectorXd& gr) { obj.gradient(x, gr); },
                              x0, mask, opts);
  if (r.status == MinimizeStatus::max_iters)
    throw std::runtime_error("minimize_limit_full: no convergence after max iterations, residual " +
                             std::to_string(r.grad_norm));
  LimitMinimizeResult out;
  out.state = obj.unpack(r.x);
  out.breakdown = limit_eval(out.state, m, variant, force, LimitScheme::element);
  out.opt = std::move(r);
  return out;
}

void write_limit_csv(const std::string& path, const std::string& variant,
                     const LimitBreakdown& b, const std::string& trailer) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("write_limit_csv: cannot open " + path);
  os << "variant,e_shear,e_membrane,e_bending,e_sg_v,e_sg_phi,e_quartic,e_force,total\n";
  os << variant << ',' << format_double(b.e_shear) << ',' << format_double(b.e_membrane) << ','
     << format_double(b.e_bending) << ',' << format_double(b.e_sg_v) << ','
     << format_double(b.e_sg_phi) << ',' << format_double(b.e_quartic) << ','
     << format_double(b.e_force) << ',' << format_double(b.total) << '\n';
  if (!trailer.empty()) os << trailer << '\n';
}

}  // namespace rmplate
