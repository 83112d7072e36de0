#pragma once

#include <Eigen/Dense>
#include <array>
#include <cmath>
#include <string>
#include <vector>

#include "rmplate/grid.hpp"

namespace rmplate {

// Nodal 3-vector field on a Grid3; the rescaled deformation y.
struct DeformationField3 {
  Grid3 grid;
  std::vector<double> v;  // 3 per node, component fastest

  DeformationField3() = default;
  explicit DeformationField3(const Grid3& g) : grid(g), v(3 * g.count(), 0.0) {}

  double& at(int i, int j, int k, int c) { return v[3 * grid.idx(i, j, k) + c]; }
  double at(int i, int j, int k, int c) const { return v[3 * grid.idx(i, j, k) + c]; }

  Eigen::Vector3d vec(int i, int j, int k) const {
    const std::size_t n = 3 * grid.idx(i, j, k);
    return {v[n], v[n + 1], v[n + 2]};
  }
  void set(int i, int j, int k, const Eigen::Vector3d& val) {
    const std::size_t n = 3 * grid.idx(i, j, k);
    v[n] = val[0]; v[n + 1] = val[1]; v[n + 2] = val[2];
  }
};

// Mid-surface unknowns (u, v, phi) of the limit model.
struct MidsurfaceState {
  Grid2 grid;
  std::vector<double> u;    // 2 per node
  std::vector<double> v;    // 1 per node
  std::vector<double> phi;  // 2 per node

  MidsurfaceState() = default;
  explicit MidsurfaceState(const Grid2& g)
      : grid(g), u(2 * g.count(), 0.0), v(g.count(), 0.0), phi(2 * g.count(), 0.0) {}

  Eigen::Vector2d u_at(int i, int j) const {
    const std::size_t n = 2 * grid.idx(i, j);
    return {u[n], u[n + 1]};
  }
  double v_at(int i, int j) const { return v[grid.idx(i, j)]; }
  Eigen::Vector2d phi_at(int i, int j) const {
    const std::size_t n = 2 * grid.idx(i, j);
    return {phi[n], phi[n + 1]};
  }
};

// Per-node square-matrix fields (rotations, mollified gradients).
struct Mat2Field {
  Grid2 grid;
  std::vector<double> a;  // 4 per node, row-major

  Mat2Field() = default;
  explicit Mat2Field(const Grid2& g) : grid(g), a(4 * g.count(), 0.0) {}
  Eigen::Matrix2d at(int i, int j) const {
    const std::size_t n = 4 * grid.idx(i, j);
    Eigen::Matrix2d m;
    m << a[n], a[n + 1], a[n + 2], a[n + 3];
    return m;
  }
  void set(int i, int j, const Eigen::Matrix2d& m) {
    const std::size_t n = 4 * grid.idx(i, j);
    a[n] = m(0, 0); a[n + 1] = m(0, 1); a[n + 2] = m(1, 0); a[n + 3] = m(1, 1);
  }
};

struct Mat3Field {
  Grid2 grid;
  std::vector<double> a;  // 9 per node, row-major

  Mat3Field() = default;
  explicit Mat3Field(const Grid2& g) : grid(g), a(9 * g.count(), 0.0) {}
  Eigen::Matrix3d at(int i, int j) const {
    const std::size_t n = 9 * grid.idx(i, j);
    Eigen::Matrix3d m;
    m << a[n], a[n + 1], a[n + 2], a[n + 3], a[n + 4], a[n + 5], a[n + 6], a[n + 7], a[n + 8];
    return m;
  }
  void set(int i, int j, const Eigen::Matrix3d& m) {
    const std::size_t n = 9 * grid.idx(i, j);
    for (int r = 0; r < 3; ++r)
      for (int c = 0; c < 3; ++c) a[n + 3 * r + c] = m(r, c);
  }
};

// 2x2 field over the whole body (per-slice rotations).
struct Mat2Field3 {
  Grid3 grid;
  std::vector<double> a;  // 4 per node

  Mat2Field3() = default;
  explicit Mat2Field3(const Grid3& g) : grid(g), a(4 * g.count(), 0.0) {}
  Eigen::Matrix2d at(int i, int j, int k) const {
    const std::size_t n = 4 * grid.idx(i, j, k);
    Eigen::Matrix2d m;
    m << a[n], a[n + 1], a[n + 2], a[n + 3];
    return m;
  }
  void set(int i, int j, int k, const Eigen::Matrix2d& m) {
    const std::size_t n = 4 * grid.idx(i, j, k);
    a[n] = m(0, 0); a[n + 1] = m(0, 1); a[n + 2] = m(1, 0); a[n + 3] = m(1, 1);
  }
};

// ---------------------------------------------------------------------------
// Nodal finite-difference stencils: central in the interior, one-sided
// second-order at boundaries; exact on quadratics.

// Stencil coefficients (offset/coefficient pairs) shared by forward and
// transpose application.
struct Stencil {
  int size = 0;
  int off[4] = {0, 0, 0, 0};
  double c[4] = {0, 0, 0, 0};
};

inline Stencil d1_coeffs(int idx, int n, double sp) {
  Stencil s;
  s.size = 3;
  if (idx == 0) {
    s.off[0] = 0; s.off[1] = 1; s.off[2] = 2;
    s.c[0] = -1.5 / sp; s.c[1] = 2.0 / sp; s.c[2] = -0.5 / sp;
  } else if (idx == n - 1) {
    s.off[0] = 0; s.off[1] = -1; s.off[2] = -2;
    s.c[0] = 1.5 / sp; s.c[1] = -2.0 / sp; s.c[2] = 0.5 / sp;
  } else {
    s.off[0] = -1; s.off[1] = 1; s.off[2] = 0;
    s.c[0] = -0.5 / sp; s.c[1] = 0.5 / sp; s.c[2] = 0.0;
  }
  return s;
}

inline Stencil d2_coeffs(int idx, int n, double sp) {
  Stencil s;
  const double isp2 = 1.0 / (sp * sp);
  if (n == 3) {
    // quadratic interpolant has a constant second derivative
    const int m = 1 - idx;
    s.size = 3;
    s.off[0] = m - 1; s.off[1] = m; s.off[2] = m + 1;
    s.c[0] = isp2; s.c[1] = -2.0 * isp2; s.c[2] = isp2;
    return s;
  }
  if (idx == 0 || idx == n - 1) {
    const int d = (idx == 0) ? 1 : -1;
    s.size = 4;
    s.off[0] = 0; s.off[1] = d; s.off[2] = 2 * d; s.off[3] = 3 * d;
    s.c[0] = 2.0 * isp2; s.c[1] = -5.0 * isp2; s.c[2] = 4.0 * isp2; s.c[3] = -isp2;
    return s;
  }
  s.size = 3;
  s.off[0] = -1; s.off[1] = 0; s.off[2] = 1;
  s.c[0] = isp2; s.c[1] = -2.0 * isp2; s.c[2] = isp2;
  return s;
}

// g(offset) reads the sample at index idx+offset along the axis of length n.
// Evaluated in difference form so that constant shifts cancel exactly.
template <class G>
double d1_stencil(G&& g, int idx, int n, double sp) {
  if (idx == 0) return (3.0 * (g(1) - g(0)) + (g(1) - g(2))) / (2.0 * sp);
  if (idx == n - 1) return (3.0 * (g(0) - g(-1)) + (g(-2) - g(-1))) / (2.0 * sp);
  return (g(1) - g(-1)) / (2.0 * sp);
}

template <class G>
double d2_stencil(G&& g, int idx, int n, double sp) {
  if (n == 3) {
    // quadratic interpolant has a constant second derivative
    const int s = -idx + 1;
    return ((g(s + 1) - g(s)) - (g(s) - g(s - 1))) / (sp * sp);
  }
  if (idx == 0)
    return (2.0 * (g(0) - g(1)) - 3.0 * (g(1) - g(2)) + (g(2) - g(3))) / (sp * sp);
  if (idx == n - 1)
    return (2.0 * (g(0) - g(-1)) - 3.0 * (g(-1) - g(-2)) + (g(-2) - g(-3))) / (sp * sp);
  return ((g(1) - g(0)) - (g(0) - g(-1))) / (sp * sp);
}

// whole-array derivative along an axis of a scalar nodal array and the
// matching transpose-accumulate (adjoint), used by quadratic-term gradients
void apply_d1(const Grid3& g, int axis, const std::vector<double>& f, std::vector<double>& out);
void apply_d2(const Grid3& g, int axis, const std::vector<double>& f, std::vector<double>& out);
void add_d1_transpose(const Grid3& g, int axis, const std::vector<double>& x, std::vector<double>& out);
void add_d2_transpose(const Grid3& g, int axis, const std::vector<double>& x, std::vector<double>& out);

void apply_d1(const Grid2& g, int axis, const std::vector<double>& f, std::vector<double>& out);
void apply_d2(const Grid2& g, int axis, const std::vector<double>& f, std::vector<double>& out);
void add_d1_transpose(const Grid2& g, int axis, const std::vector<double>& x, std::vector<double>& out);
void add_d2_transpose(const Grid2& g, int axis, const std::vector<double>& x, std::vector<double>& out);

// first derivative of component c of y along axis (0,1,2), plain (no 1/h)
double nodal_d1(const DeformationField3& y, int c, int axis, int i, int j, int k);

// nodal in-plane gradient (grad' y')_{ab} = d_b y_a, a,b in {1,2}
Eigen::Matrix2d nodal_inplane_gradient(const DeformationField3& y, int i, int j, int k);

// full scaled gradient at a node: columns (d1 y, d2 y, (1/h) d3 y)
Eigen::Matrix3d nodal_grad_h(const DeformationField3& y, double h, int i, int j, int k);

// ---------------------------------------------------------------------------
// Element quadrature stream. Trilinear (Q1) hexahedra, 2x2x2 Gauss points,
// deterministic ordering: elements (i slow, j, k), then Gauss point index.

struct StrainSample {
  int ei = 0, ej = 0, ek = 0;  // element indices
  int qp = 0;                  // Gauss point 0..7
  double weight = 0.0;         // physical quadrature weight
  double x3 = 0.0;             // x3 coordinate of the Gauss point
  Eigen::Matrix3d fh;          // scaled gradient, columns (d1 y, d2 y, (1/h) d3 y)
  Eigen::Matrix2d cprime;      // grad'y'^T grad'y' + grad'y3 (x) grad'y3
  Eigen::Vector2d grad_y3;     // in-plane gradient of y3
};

namespace detail {
inline constexpr double kGaussAbscissa = 0.57735026918962576451;  // 1/sqrt(3)

// reference coordinates in [-1,1], corner ordering c = 4*di + 2*dj + dk
inline double corner_sign(int c, int axis) {
  const int d = (axis == 0) ? (c >> 2) & 1 : (axis == 1) ? (c >> 1) & 1 : c & 1;
  return d ? 1.0 : -1.0;
}

// Q1 shape values/reference gradients at the tensor Gauss points
struct GaussTables3 {
  std::array<std::array<double, 8>, 8> n;          // [qp][corner]
  std::array<std::array<Eigen::Vector3d, 8>, 8> dn;
};
const GaussTables3& gauss3();

// 2D analogue, corner/qp ordering c = 2*di + dj
struct GaussTables2 {
  std::array<std::array<double, 4>, 4> n;
  std::array<std::array<Eigen::Vector2d, 4>, 4> dn;
};
const GaussTables2& gauss2();
}  // namespace detail

// visit the element rows i in [row_lo, row_hi)
template <class Fn>
void for_each_strain_sample_rows(const DeformationField3& y, double h, int row_lo, int row_hi,
                                 Fn&& fn) {
  const Grid3& g = y.grid;
  const double dx = g.dx(), dy = g.dy(), dz = g.dz();
  const double w = dx * dy * dz / 8.0;
  const double sx = 2.0 / dx, sy = 2.0 / dy, sz = 2.0 / dz;
  const auto& gt = detail::gauss3();

  StrainSample s;
  std::array<Eigen::Vector3d, 8> yc;
  for (int i = row_lo; i < row_hi; ++i)
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
          s.ei = i; s.ej = j; s.ek = k; s.qp = q;
          s.weight = w;
          s.x3 = g.x3(k) + 0.5 * dz * (1.0 + detail::corner_sign(q, 2) * detail::kGaussAbscissa);
          s.fh = f;
          const auto b = f.leftCols<2>();
          s.cprime = b.transpose() * b;
          s.grad_y3 = Eigen::Vector2d(f(2, 0), f(2, 1));
          fn(s);
        }
      }
}

template <class Fn>
void for_each_strain_sample(const DeformationField3& y, double h, Fn&& fn) {
  for_each_strain_sample_rows(y, h, 0, y.grid.nx - 1, fn);
}

// ---------------------------------------------------------------------------
// Scaled second derivatives: entries d_i d_j y, (1/h) d_i d3 y, (1/h^2) d3^2 y,
// stored per node and component in the order (11, 22, 33, 12, 13, 23).
// Requires nz >= 3.
struct SecondGradField {
  Grid3 grid;
  std::vector<double> a;  // 18 per node: component-major, 6 entries each

  double entry(int i, int j, int k, int c, int e) const {
    return a[18 * grid.idx(i, j, k) + 6 * c + e];
  }
  // squared norm used by the second-gradient energy: the in-plane Hessian
  // block contributes with full Frobenius weight (12-entry twice), the
  // x3-mixed entries are counted once.
  double norm2(int i, int j, int k) const {
    const std::size_t n = 18 * grid.idx(i, j, k);
    double r = 0.0;
    for (int c = 0; c < 3; ++c) {
      const double* e = &a[n + 6 * c];
      r += e[0] * e[0] + e[1] * e[1] + e[2] * e[2] + 2.0 * e[3] * e[3] + e[4] * e[4] + e[5] * e[5];
    }
    return r;
  }
  // part from the (i,3) entries of y3 alone (the sg_L study column)
  double mixed3_y3_norm2(int i, int j, int k) const {
    const std::size_t n = 18 * grid.idx(i, j, k) + 12;
    return a[n + 4] * a[n + 4] + a[n + 5] * a[n + 5];
  }
};

SecondGradField second_grads(const DeformationField3& y, double h);

// ---------------------------------------------------------------------------
// trapezoidal x3-average of an accessor acc(i,j,k) -> double, per column
template <class G>
std::vector<double> average_x3_fn(const Grid3& g, G&& acc) {
  std::vector<double> out(g.plane().count(), 0.0);
  const double dz = g.dz();
  for (int i = 0; i < g.nx; ++i)
    for (int j = 0; j < g.ny; ++j) {
      double s = 0.0;
      for (int k = 0; k < g.nz; ++k) {
        const double w = (k == 0 || k == g.nz - 1) ? 0.5 * dz : dz;
        s += w * acc(i, j, k);
      }
      out[std::size_t(i) * g.ny + j] = s;
    }
  return out;
}

std::vector<double> average_x3(const DeformationField3& y, int comp);

// ---------------------------------------------------------------------------
// Mid-surface extraction with the h-power normalizations of the limit model.
struct MidsurfaceExtract {
  MidsurfaceState state;
  // discrete bending strain h^{-sigma/2} Q^T (grad'y' - avg_x3 grad'y') per
  // body node, 2x2 row-major
  std::vector<double> bending;
  Grid3 grid;
};

MidsurfaceExtract extract_midsurface(const DeformationField3& y, double h, double sigma,
                                     const Mat2Field* qfield = nullptr);

// y = (x', h x3)
DeformationField3 identity_configuration(const Grid3& g, double h);

// ---------------------------------------------------------------------------
// Snapshots: text header line, then row-major little-endian float64 payload.
// PLT3 stores the 3 components per node; PLT2 stores ncomp values per node.
void write_plt3(const std::string& path, const DeformationField3& y, double h);
struct Plt3 {
  DeformationField3 field;
  double h = 0.0;
};
Plt3 read_plt3(const std::string& path);

void write_plt2(const std::string& path, const Grid2& g, int ncomp, const std::vector<double>& data);
struct Plt2 {
  Grid2 grid;
  int ncomp = 0;
  std::vector<double> data;
};
Plt2 read_plt2(const std::string& path);

// CSV export, header "i,j,x1,x2,u1,u2,v,phi1,phi2"; an optional trailer line
// is appended verbatim (used for the config-hash comment).
void write_midsurface_csv(const std::string& path, const MidsurfaceState& s,
                          const std::string& trailer = "");

// deterministic shortest round-trippable formatting for CSV payloads
std::string format_double(double v);

}  // namespace rmplate
