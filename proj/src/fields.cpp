#include "rmplate/fields.hpp"

#include <bit>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace rmplate {

static_assert(std::endian::native == std::endian::little,
              "snapshot payloads are little-endian");

namespace detail {

const GaussTables3& gauss3() {
  static const GaussTables3 t = [] {
    GaussTables3 g;
    const double ga = kGaussAbscissa;
    for (int q = 0; q < 8; ++q) {
      const double xi = corner_sign(q, 0) * ga;
      const double eta = corner_sign(q, 1) * ga;
      const double zeta = corner_sign(q, 2) * ga;
      for (int c = 0; c < 8; ++c) {
        const double s0 = corner_sign(c, 0);
        const double s1 = corner_sign(c, 1);
        const double s2 = corner_sign(c, 2);
        g.n[q][c] = 0.125 * (1.0 + s0 * xi) * (1.0 + s1 * eta) * (1.0 + s2 * zeta);
        g.dn[q][c][0] = 0.125 * s0 * (1.0 + s1 * eta) * (1.0 + s2 * zeta);
        g.dn[q][c][1] = 0.125 * s1 * (1.0 + s0 * xi) * (1.0 + s2 * zeta);
        g.dn[q][c][2] = 0.125 * s2 * (1.0 + s0 * xi) * (1.0 + s1 * eta);
      }
    }
    return g;
  }();
  return t;
}

const GaussTables2& gauss2() {
  static const GaussTables2 t = [] {
    GaussTables2 g;
    const double ga = kGaussAbscissa;
    auto sign = [](int c, int axis) { return ((axis == 0 ? (c >> 1) : c) & 1) ? 1.0 : -1.0; };
    for (int q = 0; q < 4; ++q) {
      const double xi = sign(q, 0) * ga;
      const double eta = sign(q, 1) * ga;
      for (int c = 0; c < 4; ++c) {
        const double s0 = sign(c, 0);
        const double s1 = sign(c, 1);
        g.n[q][c] = 0.25 * (1.0 + s0 * xi) * (1.0 + s1 * eta);
        g.dn[q][c][0] = 0.25 * s0 * (1.0 + s1 * eta);
        g.dn[q][c][1] = 0.25 * s1 * (1.0 + s0 * xi);
      }
    }
    return g;
  }();
  return t;
}

}  // namespace detail

double nodal_d1(const DeformationField3& y, int c, int axis, int i, int j, int k) {
  const Grid3& g = y.grid;
  switch (axis) {
    case 0:
      return d1_stencil([&](int o) { return y.at(i + o, j, k, c); }, i, g.nx, g.dx());
    case 1:
      return d1_stencil([&](int o) { return y.at(i, j + o, k, c); }, j, g.ny, g.dy());
    case 2:
      return d1_stencil([&](int o) { return y.at(i, j, k + o, c); }, k, g.nz, g.dz());
    default:
      throw std::invalid_argument("nodal_d1: axis");
  }
}

Eigen::Matrix2d nodal_inplane_gradient(const DeformationField3& y, int i, int j, int k) {
  Eigen::Matrix2d m;
  for (int a = 0; a < 2; ++a)
    for (int b = 0; b < 2; ++b) m(a, b) = nodal_d1(y, a, b, i, j, k);
  return m;
}

Eigen::Matrix3d nodal_grad_h(const DeformationField3& y, double h, int i, int j, int k) {
  Eigen::Matrix3d m;
  for (int c = 0; c < 3; ++c) {
    m(c, 0) = nodal_d1(y, c, 0, i, j, k);
    m(c, 1) = nodal_d1(y, c, 1, i, j, k);
    m(c, 2) = nodal_d1(y, c, 2, i, j, k) / h;
  }
  return m;
}

SecondGradField second_grads(const DeformationField3& y, double h) {
  const Grid3& g = y.grid;
  if (g.nz < 3) throw std::invalid_argument("second_grads: needs nz >= 3");
  SecondGradField out;
  out.grid = g;
  out.a.assign(18 * g.count(), 0.0);

  const std::size_t n = g.count();
  std::vector<double> f(n), d2f(n), d3f(n);
  for (int c = 0; c < 3; ++c) {
    for (int i = 0; i < g.nx; ++i)
      for (int j = 0; j < g.ny; ++j)
        for (int k = 0; k < g.nz; ++k) f[g.idx(i, j, k)] = y.at(i, j, k, c);

    auto val = [&](const std::vector<double>& arr, int i, int j, int k) {
      return arr[g.idx(i, j, k)];
    };
    // first derivatives along x2 and x3 as full arrays for the mixed terms
    for (int i = 0; i < g.nx; ++i)
      for (int j = 0; j < g.ny; ++j)
        for (int k = 0; k < g.nz; ++k) {
          d2f[g.idx(i, j, k)] =
              d1_stencil([&](int o) { return val(f, i, j + o, k); }, j, g.ny, g.dy());
          d3f[g.idx(i, j, k)] =
              d1_stencil([&](int o) { return val(f, i, j, k + o); }, k, g.nz, g.dz());
        }

    for (int i = 0; i < g.nx; ++i)
      for (int j = 0; j < g.ny; ++j)
        for (int k = 0; k < g.nz; ++k) {
          double* e = &out.a[18 * g.idx(i, j, k) + 6 * c];
          e[0] = d2_stencil([&](int o) { return val(f, i + o, j, k); }, i, g.nx, g.dx());
          e[1] = d2_stencil([&](int o) { return val(f, i, j + o, k); }, j, g.ny, g.dy());
          e[2] = d2_stencil([&](int o) { return val(f, i, j, k + o); }, k, g.nz, g.dz()) / (h * h);
          e[3] = d1_stencil([&](int o) { return val(d2f, i + o, j, k); }, i, g.nx, g.dx());
          e[4] = d1_stencil([&](int o) { return val(d3f, i + o, j, k); }, i, g.nx, g.dx()) / h;
          e[5] = d1_stencil([&](int o) { return val(d3f, i, j + o, k); }, j, g.ny, g.dy()) / h;
        }
  }
  return out;
}

std::vector<double> average_x3(const DeformationField3& y, int comp) {
  return average_x3_fn(y.grid, [&](int i, int j, int k) { return y.at(i, j, k, comp); });
}

namespace {

template <bool Second, bool Transpose>
void axis_op(const Grid3& g, int axis, const std::vector<double>& in, std::vector<double>& out) {
  const int n = (axis == 0) ? g.nx : (axis == 1) ? g.ny : g.nz;
  const double sp = (axis == 0) ? g.dx() : (axis == 1) ? g.dy() : g.dz();
  const std::ptrdiff_t stride =
      (axis == 0) ? std::ptrdiff_t(g.ny) * g.nz : (axis == 1) ? std::ptrdiff_t(g.nz) : 1;
  if (!Transpose) out.assign(g.count(), 0.0);

  auto line_op = [&](std::size_t base) {
    for (int t = 0; t < n; ++t) {
      const std::ptrdiff_t at = std::ptrdiff_t(base) + std::ptrdiff_t(t) * stride;
      if (!Transpose) {
        auto acc = [&](int o) { return in[std::size_t(at + o * stride)]; };
        out[std::size_t(at)] = Second ? d2_stencil(acc, t, n, sp) : d1_stencil(acc, t, n, sp);
      } else {
        const Stencil s = Second ? d2_coeffs(t, n, sp) : d1_coeffs(t, n, sp);
        const double x = in[std::size_t(at)];
        if (x != 0.0)
          for (int q = 0; q < s.size; ++q)
            out[std::size_t(at + s.off[q] * stride)] += s.c[q] * x;
      }
    }
  };

  if (axis == 0) {
    for (int j = 0; j < g.ny; ++j)
      for (int k = 0; k < g.nz; ++k) line_op(g.idx(0, j, k));
  } else if (axis == 1) {
    for (int i = 0; i < g.nx; ++i)
      for (int k = 0; k < g.nz; ++k) line_op(g.idx(i, 0, k));
  } else {
    for (int i = 0; i < g.nx; ++i)
      for (int j = 0; j < g.ny; ++j) line_op(g.idx(i, j, 0));
  }
}

}  // namespace

void apply_d1(const Grid3& g, int axis, const std::vector<double>& f, std::vector<double>& out) {
  axis_op<false, false>(g, axis, f, out);
}
void apply_d2(const Grid3& g, int axis, const std::vector<double>& f, std::vector<double>& out) {
  axis_op<true, false>(g, axis, f, out);
}
void add_d1_transpose(const Grid3& g, int axis, const std::vector<double>& x,
                      std::vector<double>& out) {
  axis_op<false, true>(g, axis, x, out);
}
void add_d2_transpose(const Grid3& g, int axis, const std::vector<double>& x,
                      std::vector<double>& out) {
  axis_op<true, true>(g, axis, x, out);
}

namespace {

template <bool Second, bool Transpose>
void axis_op2(const Grid2& g, int axis, const std::vector<double>& in, std::vector<double>& out) {
  const int n = (axis == 0) ? g.nx : g.ny;
  const double sp = (axis == 0) ? g.dx() : g.dy();
  const std::ptrdiff_t stride = (axis == 0) ? std::ptrdiff_t(g.ny) : 1;
  if (!Transpose) out.assign(g.count(), 0.0);

  auto line_op = [&](std::size_t base) {
    for (int t = 0; t < n; ++t) {
      const std::ptrdiff_t at = std::ptrdiff_t(base) + std::ptrdiff_t(t) * stride;
      if (!Transpose) {
        auto acc = [&](int o) { return in[std::size_t(at + o * stride)]; };
        out[std::size_t(at)] = Second ? d2_stencil(acc, t, n, sp) : d1_stencil(acc, t, n, sp);
      } else {
        const Stencil s = Second ? d2_coeffs(t, n, sp) : d1_coeffs(t, n, sp);
        const double x = in[std::size_t(at)];
        if (x != 0.0)
          for (int q = 0; q < s.size; ++q)
            out[std::size_t(at + s.off[q] * stride)] += s.c[q] * x;
      }
    }
  };

  if (axis == 0) {
    for (int j = 0; j < g.ny; ++j) line_op(std::size_t(j));
  } else {
    for (int i = 0; i < g.nx; ++i) line_op(g.idx(i, 0));
  }
}

}  // namespace

void apply_d1(const Grid2& g, int axis, const std::vector<double>& f, std::vector<double>& out) {
  axis_op2<false, false>(g, axis, f, out);
}
void apply_d2(const Grid2& g, int axis, const std::vector<double>& f, std::vector<double>& out) {
  axis_op2<true, false>(g, axis, f, out);
}
void add_d1_transpose(const Grid2& g, int axis, const std::vector<double>& x,
                      std::vector<double>& out) {
  axis_op2<false, true>(g, axis, x, out);
}
void add_d2_transpose(const Grid2& g, int axis, const std::vector<double>& x,
                      std::vector<double>& out) {
  axis_op2<true, true>(g, axis, x, out);
}

MidsurfaceExtract extract_midsurface(const DeformationField3& y, double h, double sigma,
                                     const Mat2Field* qfield) {
  const Grid3& g = y.grid;
  if (!(h > 0.0)) throw std::invalid_argument("extract_midsurface: h > 0");
  if (!(sigma >= 4.0)) throw std::invalid_argument("extract_midsurface: sigma >= 4");
  if (qfield && !qfield->grid.same_layout(g.plane()))
    throw std::invalid_argument("extract_midsurface: rotation field grid mismatch");

  const double su = std::pow(h, -sigma / 2.0);
  const double sv = std::pow(h, -(sigma / 2.0 - 1.0));

  MidsurfaceExtract out;
  out.grid = g;
  out.state = MidsurfaceState(g.plane());
  out.bending.assign(4 * g.count(), 0.0);

  // u^h = h^{-sigma/2} avg_x3 (y' - x'), v^h = h^{-(sigma/2-1)} avg_x3 y3
  auto u1 = average_x3_fn(g, [&](int i, int j, int k) { return y.at(i, j, k, 0) - g.x1(i); });
  auto u2 = average_x3_fn(g, [&](int i, int j, int k) { return y.at(i, j, k, 1) - g.x2(j); });
  auto vv = average_x3(y, 2);
  // x3-average of d3 y' for phi, and of grad'y' for the bending part
  auto p1 = average_x3_fn(g, [&](int i, int j, int k) { return nodal_d1(y, 0, 2, i, j, k); });
  auto p2 = average_x3_fn(g, [&](int i, int j, int k) { return nodal_d1(y, 1, 2, i, j, k); });
  std::array<std::vector<double>, 4> gavg;
  for (int a = 0; a < 2; ++a)
    for (int b = 0; b < 2; ++b)
      gavg[2 * a + b] =
          average_x3_fn(g, [&](int i, int j, int k) { return nodal_d1(y, a, b, i, j, k); });

  const Grid2 plane = g.plane();
  for (int i = 0; i < g.nx; ++i)
    for (int j = 0; j < g.ny; ++j) {
      const std::size_t n2 = plane.idx(i, j);
      const Eigen::Matrix2d q =
          qfield ? qfield->at(i, j) : Eigen::Matrix2d::Identity().eval();
      out.state.u[2 * n2] = su * u1[n2];
      out.state.u[2 * n2 + 1] = su * u2[n2];
      out.state.v[n2] = sv * vv[n2];
      const Eigen::Vector2d ph = su * (q.transpose() * Eigen::Vector2d(p1[n2], p2[n2]));
      out.state.phi[2 * n2] = ph[0];
      out.state.phi[2 * n2 + 1] = ph[1];

      Eigen::Matrix2d gm;
      gm << gavg[0][n2], gavg[1][n2], gavg[2][n2], gavg[3][n2];
      for (int k = 0; k < g.nz; ++k) {
        const Eigen::Matrix2d kh =
            su * (q.transpose() * (nodal_inplane_gradient(y, i, j, k) - gm));
        double* b = &out.bending[4 * g.idx(i, j, k)];
        b[0] = kh(0, 0); b[1] = kh(0, 1); b[2] = kh(1, 0); b[3] = kh(1, 1);
      }
    }
  return out;
}

DeformationField3 identity_configuration(const Grid3& g, double h) {
  DeformationField3 y(g);
  for (int i = 0; i < g.nx; ++i)
    for (int j = 0; j < g.ny; ++j)
      for (int k = 0; k < g.nz; ++k)
        y.set(i, j, k, {g.x1(i), g.x2(j), h * g.x3(k)});
  return y;
}

// ---------------------------------------------------------------------------

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_plt3(const std::string& path, const DeformationField3& y, double h) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("write_plt3: cannot open " + path);
  os << "PLT3 " << y.grid.nx << ' ' << y.grid.ny << ' ' << y.grid.nz << ' '
     << format_double(y.grid.lx) << ' ' << format_double(y.grid.ly) << ' '
     << format_double(h) << '\n';
  os.write(reinterpret_cast<const char*>(y.v.data()),
           std::streamsize(y.v.size() * sizeof(double)));
  if (!os) throw std::runtime_error("write_plt3: write failed for " + path);
}

Plt3 read_plt3(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("read_plt3: cannot open " + path);
  std::string line;
  std::getline(is, line);
  std::istringstream hs(line);
  std::string tag;
  int nx, ny, nz;
  double lx, ly, h;
  if (!(hs >> tag >> nx >> ny >> nz >> lx >> ly >> h) || tag != "PLT3")
    throw std::runtime_error("read_plt3: bad header in " + path);
  Plt3 out;
  out.h = h;
  out.field = DeformationField3(Grid3(nx, ny, nz, lx, ly));
  is.read(reinterpret_cast<char*>(out.field.v.data()),
          std::streamsize(out.field.v.size() * sizeof(double)));
  if (!is) throw std::runtime_error("read_plt3: truncated payload in " + path);
  return out;
}

void write_plt2(const std::string& path, const Grid2& g, int ncomp,
                const std::vector<double>& data) {
  if (data.size() != std::size_t(ncomp) * g.count())
    throw std::invalid_argument("write_plt2: data size mismatch");
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("write_plt2: cannot open " + path);
  os << "PLT2 " << g.nx << ' ' << g.ny << ' ' << format_double(g.lx) << ' '
     << format_double(g.ly) << ' ' << ncomp << '\n';
  os.write(reinterpret_cast<const char*>(data.data()),
           std::streamsize(data.size() * sizeof(double)));
  if (!os) throw std::runtime_error("write_plt2: write failed for " + path);
}

Plt2 read_plt2(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("read_plt2: cannot open " + path);
  std::string line;
  std::getline(is, line);
  std::istringstream hs(line);
  std::string tag;
  int nx, ny, ncomp;
  double lx, ly;
  if (!(hs >> tag >> nx >> ny >> lx >> ly >> ncomp) || tag != "PLT2")
    throw std::runtime_error("read_plt2: bad header in " + path);
  Plt2 out;
  out.grid = Grid2(nx, ny, lx, ly);
  out.ncomp = ncomp;
  out.data.assign(std::size_t(ncomp) * out.grid.count(), 0.0);
  is.read(reinterpret_cast<char*>(out.data.data()),
          std::streamsize(out.data.size() * sizeof(double)));
  if (!is) throw std::runtime_error("read_plt2: truncated payload in " + path);
  return out;
}

void write_midsurface_csv(const std::string& path, const MidsurfaceState& s,
                          const std::string& trailer) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("write_midsurface_csv: cannot open " + path);
  os << "i,j,x1,x2,u1,u2,v,phi1,phi2\n";
  for (int i = 0; i < s.grid.nx; ++i)
    for (int j = 0; j < s.grid.ny; ++j) {
      const std::size_t n = s.grid.idx(i, j);
      os << i << ',' << j << ',' << format_double(s.grid.x1(i)) << ','
         << format_double(s.grid.x2(j)) << ',' << format_double(s.u[2 * n]) << ','
         << format_double(s.u[2 * n + 1]) << ',' << format_double(s.v[n]) << ','
         << format_double(s.phi[2 * n]) << ',' << format_double(s.phi[2 * n + 1]) << '\n';
    }
  if (!trailer.empty()) os << trailer << '\n';
}

}  // namespace rmplate
