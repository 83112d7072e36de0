#include "rmplate/energy3d.hpp"

#include <cmath>
#include <stdexcept>

#include "rmplate/parallel.hpp"

namespace rmplate {

void ForceSpec::validate() const {
  if (f3.size() != grid.count())
    throw std::invalid_argument("ForceSpec: f3 size does not match grid");
  double m0 = 0.0, m1 = 0.0, m2 = 0.0, nrm2 = 0.0;
  for (int i = 0; i < grid.nx; ++i)
    for (int j = 0; j < grid.ny; ++j) {
      const double w = grid.weight(i, j);
      const double v = f3[grid.idx(i, j)];
      m0 += w * v;
      m1 += w * grid.x1(i) * v;
      m2 += w * grid.x2(j) * v;
      nrm2 += w * v * v;
    }
  const double tol = 1e-10 * std::max(1.0, std::sqrt(nrm2)) * std::max({1.0, grid.lx, grid.ly});
  if (std::abs(m0) > tol || std::abs(m1) > tol || std::abs(m2) > tol)
    throw std::invalid_argument("ForceSpec: zero-mean/zero-moment conditions violated");
}

ForceSpec make_bump_load(const Grid2& g, double amplitude, double alpha) {
  ForceSpec f;
  f.grid = g;
  f.alpha = alpha;
  f.f3.assign(g.count(), 0.0);
  const double nrm = std::pow(0.5 * g.lx, 2) * std::pow(0.5 * g.ly, 2);
  for (int i = 0; i < g.nx; ++i)
    for (int j = 0; j < g.ny; ++j) {
      const double x1 = g.x1(i), x2 = g.x2(j);
      const double b = x1 * (g.lx - x1) * x2 * (g.ly - x2) / nrm;
      f.f3[g.idx(i, j)] = b * b;
    }
  // project out {1, x1, x2} in the trapezoid inner product
  Eigen::Matrix3d gram = Eigen::Matrix3d::Zero();
  Eigen::Vector3d rhs = Eigen::Vector3d::Zero();
  for (int i = 0; i < g.nx; ++i)
    for (int j = 0; j < g.ny; ++j) {
      const double w = g.weight(i, j);
      const Eigen::Vector3d b(1.0, g.x1(i), g.x2(j));
      gram += w * b * b.transpose();
      rhs += w * f.f3[g.idx(i, j)] * b;
    }
  const Eigen::Vector3d coef = gram.ldlt().solve(rhs);
  double amax = 0.0;
  for (int i = 0; i < g.nx; ++i)
    for (int j = 0; j < g.ny; ++j) {
      double& v = f.f3[g.idx(i, j)];
      v -= coef[0] + coef[1] * g.x1(i) + coef[2] * g.x2(j);
      amax = std::max(amax, std::abs(v));
    }
  if (amax > 0.0)
    for (double& v : f.f3) v *= amplitude / amax;
  return f;
}

bool bc_satisfied(const DeformationField3& y, double h, double tol) {
  const Grid3& g = y.grid;
  for (int i = 0; i < g.nx; ++i)
    for (int j = 0; j < g.ny; ++j) {
      if (!g.on_lateral_boundary(i, j)) continue;
      for (int k = 0; k < g.nz; ++k) {
        if (std::abs(y.at(i, j, k, 0) - g.x1(i)) > tol) return false;
        if (std::abs(y.at(i, j, k, 1) - g.x2(j)) > tol) return false;
        if (std::abs(y.at(i, j, k, 2) - h * g.x3(k)) > tol) return false;
      }
    }
  return true;
}

DeformationField3 apply_bc(DeformationField3 y, double h) {
  const Grid3& g = y.grid;
  for (int i = 0; i < g.nx; ++i)
    for (int j = 0; j < g.ny; ++j) {
      if (!g.on_lateral_boundary(i, j)) continue;
      for (int k = 0; k < g.nz; ++k) y.set(i, j, k, {g.x1(i), g.x2(j), h * g.x3(k)});
    }
  return y;
}

std::vector<std::uint8_t> bc_mask(const Grid3& g) {
  std::vector<std::uint8_t> m(3 * g.count(), 0);
  for (int i = 0; i < g.nx; ++i)
    for (int j = 0; j < g.ny; ++j) {
      if (!g.on_lateral_boundary(i, j)) continue;
      for (int k = 0; k < g.nz; ++k) {
        const std::size_t n = 3 * g.idx(i, j, k);
        m[n] = m[n + 1] = m[n + 2] = 1;
      }
    }
  return m;
}

namespace {

struct ElementPartial {
  double mem = 0.0, quart = 0.0, shear = 0.0;
  bool bad = false;
};

ElementPartial element_terms(const DeformationField3& y, double h, const MaterialParams& p) {
  return blocked_reduce(
      long(y.grid.nx - 1), ElementPartial{},
      [&](long lo, long hi) {
        ElementPartial acc;
        for_each_strain_sample_rows(y, h, int(lo), int(hi), [&](const StrainSample& s) {
          acc.mem += s.weight * w1(s.cprime, p.beta);
          acc.quart += s.weight * p.c1 * std::pow(s.grad_y3.squaredNorm(), 2);
          const double v2 = w2(s.fh, p.mu, p.lambda);
          if (std::isinf(v2)) acc.bad = true;
          else acc.shear += s.weight * h * h * v2;
        });
        return acc;
      },
      [](ElementPartial a, const ElementPartial& b) {
        a.mem += b.mem;
        a.quart += b.quart;
        a.shear += b.shear;
        a.bad = a.bad || b.bad;
        return a;
      });
}

double weighted_sq(const Grid3& g, const std::vector<double>& v) {
  double acc = 0.0;
  for (int i = 0; i < g.nx; ++i)
    for (int j = 0; j < g.ny; ++j)
      for (int k = 0; k < g.nz; ++k) {
        const double e = v[g.idx(i, j, k)];
        acc += g.weight(i, j, k) * e * e;
      }
  return acc;
}

void load_component(const DeformationField3& y, int c, std::vector<double>& f) {
  const Grid3& g = y.grid;
  f.resize(g.count());
  for (int i = 0; i < g.nx; ++i)
    for (int j = 0; j < g.ny; ++j)
      for (int k = 0; k < g.nz; ++k) f[g.idx(i, j, k)] = y.at(i, j, k, c);
}

double regularizer_term(const DeformationField3& y, double h, double eps) {
  const Grid3& g = y.grid;
  const double scale = std::pow(h, -eps);
  std::vector<double> f, v;
  double acc = 0.0;
  for (int c = 0; c < 2; ++c) {
    load_component(y, c, f);
    apply_d2(g, 2, f, v);
    acc += weighted_sq(g, v);
  }
  return scale * acc;
}

// same operator chains as the gradient assembly below
double secondgrad_term(const DeformationField3& y, double h, double l) {
  const Grid3& g = y.grid;
  std::vector<double> f, t, v;
  double acc = 0.0;
  for (int c = 0; c < 3; ++c) {
    load_component(y, c, f);
    for (int axis = 0; axis < 3; ++axis) {
      apply_d2(g, axis, f, v);
      const double fac = (axis == 2) ? 1.0 / (h * h * h * h) : 1.0;
      acc += fac * weighted_sq(g, v);
    }
    apply_d1(g, 1, f, t);
    apply_d1(g, 0, t, v);
    acc += 2.0 * weighted_sq(g, v);
    apply_d1(g, 2, f, t);
    for (int axis = 0; axis < 2; ++axis) {
      apply_d1(g, axis, t, v);
      acc += weighted_sq(g, v) / (h * h);
    }
  }
  return l * h * h * acc;
}

void check_energy_inputs(const DeformationField3& y, double h) {
  if (!(h > 0.0)) throw std::invalid_argument("energy: h must be positive");
  if (y.grid.nz < 3) throw std::invalid_argument("energy: nz >= 3 required for the regularizer");
}

}  // namespace

EnergyBreakdown energy_ih(const DeformationField3& y, double h, const MaterialModel& m,
                          EnergyVariant variant, BcMode bc) {
  check_energy_inputs(y, h);
  EnergyBreakdown eb;
  if (bc == BcMode::enforce && !bc_satisfied(y, h)) {
    eb.total = kInfeasible;
    return eb;
  }
  const MaterialParams& p = m.params();
  const ElementPartial ep = element_terms(y, h, p);
  eb.e_membrane = ep.mem;
  eb.e_quartic = ep.quart;
  eb.e_shear = ep.bad ? kInfeasible : ep.shear;
  eb.e_reg = regularizer_term(y, h, p.epsilon);
  if (variant == EnergyVariant::second_grad)
    eb.e_secondgrad = secondgrad_term(y, h, p.l);
  eb.total = eb.e_membrane + eb.e_quartic + eb.e_shear + eb.e_reg + eb.e_secondgrad;
  return eb;
}

EnergyBreakdown energy_jh(const DeformationField3& y, double h, const MaterialModel& m,
                          const ForceSpec& force, EnergyVariant variant, BcMode bc) {
  force.validate();
  if (!force.grid.same_layout(y.grid.plane()))
    throw std::invalid_argument("energy_jh: force grid mismatch");
  EnergyBreakdown eb = energy_ih(y, h, m, variant, bc);
  const Grid3& g = y.grid;
  const double ha = std::pow(h, force.alpha);
  double acc = 0.0;
  for (int i = 0; i < g.nx; ++i)
    for (int j = 0; j < g.ny; ++j) {
      const double f = force.f3[force.grid.idx(i, j)];
      for (int k = 0; k < g.nz; ++k) acc += g.weight(i, j, k) * f * y.at(i, j, k, 2);
    }
  eb.e_force = -ha * acc;
  eb.total += eb.e_force;
  return eb;
}

std::vector<double> grad_energy(const DeformationField3& y, double h, const MaterialModel& m,
                                EnergyVariant variant, BcMode bc, const ForceSpec* force) {
  check_energy_inputs(y, h);
  if (bc == BcMode::enforce && !bc_satisfied(y, h))
    throw std::invalid_argument("grad_energy: boundary condition violated");
  const Grid3& g = y.grid;
  const MaterialParams& p = m.params();
  const double step = m.density_fd_step();
  std::vector<double> grad(3 * g.count(), 0.0);

  // element terms: W1, quartic, h^2 W2
  const auto& gt = detail::gauss3();
  const double dx = g.dx(), dy = g.dy(), dz = g.dz();
  const double w = dx * dy * dz / 8.0;
  const double sx = 2.0 / dx, sy = 2.0 / dy, sz = 2.0 / dz;
  std::array<Eigen::Vector3d, 8> yc;
  for (int i = 0; i + 1 < g.nx; ++i)
    for (int j = 0; j + 1 < g.ny; ++j)
      for (int k = 0; k + 1 < g.nz; ++k) {
        for (int c = 0; c < 8; ++c)
          yc[c] = y.vec(i + ((c >> 2) & 1), j + ((c >> 1) & 1), k + (c & 1));
        for (int q = 0; q < 8; ++q) {
          Eigen::Matrix3d f = Eigen::Matrix3d::Zero();
          for (int c = 0; c < 8; ++c) {
            f.col(0) += gt.dn[q][c][0] * sx * yc[c];
            f.col(1) += gt.dn[q][c][1] * sy * yc[c];
            f.col(2) += gt.dn[q][c][2] * (sz / h) * yc[c];
          }
          if (!(f.determinant() > 0.0))
            throw std::runtime_error("grad_energy: infeasible state (det F <= 0)");
          const Eigen::Matrix<double, 3, 2> b = f.leftCols<2>();
          const Eigen::Matrix2d cp = b.transpose() * b;
          const Eigen::Vector2d g3(f(2, 0), f(2, 1));

          Eigen::Matrix<double, 3, 2> mm = 2.0 * b * w1_gradient(cp, p.beta, step);
          mm.row(2) += (4.0 * p.c1 * g3.squaredNorm()) * g3.transpose();
          const Eigen::Matrix3d g2 = (h * h) * w2_gradient(f, p.mu, p.lambda, step);

          for (int c = 0; c < 8; ++c) {
            const double d0 = gt.dn[q][c][0] * sx;
            const double d1 = gt.dn[q][c][1] * sy;
            const double d2 = gt.dn[q][c][2] * sz / h;
            const std::size_t n =
                3 * g.idx(i + ((c >> 2) & 1), j + ((c >> 1) & 1), k + (c & 1));
            for (int r = 0; r < 3; ++r)
              grad[n + r] += w * ((mm(r, 0) + g2(r, 0)) * d0 + (mm(r, 1) + g2(r, 1)) * d1 +
                                  g2(r, 2) * d2);
          }
        }
      }

  // regularizer h^{-eps} |d33 y'|^2: quadratic, assembled via the adjoint
  {
    const double scale = 2.0 * std::pow(h, -p.epsilon);
    std::vector<double> f(g.count()), v(g.count()), wv(g.count()), gc(g.count());
    for (int c = 0; c < 2; ++c) {
      for (int i = 0; i < g.nx; ++i)
        for (int j = 0; j < g.ny; ++j)
          for (int k = 0; k < g.nz; ++k) f[g.idx(i, j, k)] = y.at(i, j, k, c);
      apply_d2(g, 2, f, v);
      for (int i = 0; i < g.nx; ++i)
        for (int j = 0; j < g.ny; ++j)
          for (int k = 0; k < g.nz; ++k) {
            const std::size_t n = g.idx(i, j, k);
            wv[n] = g.weight(i, j, k) * v[n];
          }
      gc.assign(g.count(), 0.0);
      add_d2_transpose(g, 2, wv, gc);
      for (std::size_t n = 0; n < g.count(); ++n) grad[3 * n + c] += scale * gc[n];
    }
  }

  // second-gradient term, entry chains d_a(d_b f) with their adjoints
  if (variant == EnergyVariant::second_grad && p.l > 0.0) {
    std::vector<double> f(g.count()), t(g.count()), v(g.count()), wv(g.count()), gc(g.count()),
        tt(g.count());
    auto weight_mul = [&](const std::vector<double>& src, std::vector<double>& dst, double fac) {
      for (int i = 0; i < g.nx; ++i)
        for (int j = 0; j < g.ny; ++j)
          for (int k = 0; k < g.nz; ++k) {
            const std::size_t n = g.idx(i, j, k);
            dst[n] = fac * g.weight(i, j, k) * src[n];
          }
    };
    const double lh2 = p.l * h * h;
    for (int c = 0; c < 3; ++c) {
      for (int i = 0; i < g.nx; ++i)
        for (int j = 0; j < g.ny; ++j)
          for (int k = 0; k < g.nz; ++k) f[g.idx(i, j, k)] = y.at(i, j, k, c);

      gc.assign(g.count(), 0.0);
      // pure entries d_aa f (factor 1), (1/h^2) d_33 f
      for (int axis = 0; axis < 3; ++axis) {
        const double fac = (axis == 2) ? 1.0 / (h * h * h * h) : 1.0;
        apply_d2(g, axis, f, v);
        weight_mul(v, wv, 2.0 * lh2 * fac);
        add_d2_transpose(g, axis, wv, gc);
      }
      // in-plane mixed d_1 d_2 f, Frobenius weight 2
      apply_d1(g, 1, f, t);
      apply_d1(g, 0, t, v);
      weight_mul(v, wv, 4.0 * lh2);
      tt.assign(g.count(), 0.0);
      add_d1_transpose(g, 0, wv, tt);
      add_d1_transpose(g, 1, tt, gc);
      // x3-mixed (1/h) d_a d_3 f, counted once
      apply_d1(g, 2, f, t);
      for (int axis = 0; axis < 2; ++axis) {
        apply_d1(g, axis, t, v);
        weight_mul(v, wv, 2.0 * lh2 / (h * h));
        tt.assign(g.count(), 0.0);
        add_d1_transpose(g, axis, wv, tt);
        add_d1_transpose(g, 2, tt, gc);
      }
      for (std::size_t n = 0; n < g.count(); ++n) grad[3 * n + c] += gc[n];
    }
  }

  if (force) {
    force->validate();
    if (!force->grid.same_layout(g.plane()))
      throw std::invalid_argument("grad_energy: force grid mismatch");
    const double ha = std::pow(h, force->alpha);
    for (int i = 0; i < g.nx; ++i)
      for (int j = 0; j < g.ny; ++j) {
        const double fv = force->f3[force->grid.idx(i, j)];
        for (int k = 0; k < g.nz; ++k)
          grad[3 * g.idx(i, j, k) + 2] -= ha * g.weight(i, j, k) * fv;
      }
  }

  if (bc == BcMode::enforce) {
    const auto mask = bc_mask(g);
    for (std::size_t n = 0; n < mask.size(); ++n)
      if (mask[n]) grad[n] = 0.0;
  }
  return grad;
}

double secondgrad_mixed_y3_term(const DeformationField3& y, double h, const MaterialModel& m) {
  (void)h;  // l h^2 ((1/h) d_a d_3 y3)^2 = l (d_a d_3 y3)^2
  const Grid3& g = y.grid;
  if (g.nz < 3) throw std::invalid_argument("secondgrad_mixed_y3_term: nz >= 3");
  std::vector<double> f(g.count()), t(g.count()), v(g.count());
  for (int i = 0; i < g.nx; ++i)
    for (int j = 0; j < g.ny; ++j)
      for (int k = 0; k < g.nz; ++k) f[g.idx(i, j, k)] = y.at(i, j, k, 2);
  apply_d1(g, 2, f, t);
  double acc = 0.0;
  for (int axis = 0; axis < 2; ++axis) {
    apply_d1(g, axis, t, v);
    for (int i = 0; i < g.nx; ++i)
      for (int j = 0; j < g.ny; ++j)
        for (int k = 0; k < g.nz; ++k) {
          const double e = v[g.idx(i, j, k)];
          acc += g.weight(i, j, k) * e * e;
        }
  }
  return m.params().l * acc;
}

}  // namespace rmplate
