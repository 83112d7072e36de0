#include "rmplate/rigidity.hpp"

#include <cmath>
#include <fstream>
#include <stdexcept>

namespace rmplate {

namespace {

template <int N>
Eigen::Matrix<double, N, N> polar_rotation(const Eigen::Matrix<double, N, N>& f) {
  Eigen::JacobiSVD<Eigen::Matrix<double, N, N>> svd(
      f, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Eigen::Matrix<double, N, N> r = svd.matrixU() * svd.matrixV().transpose();
  if (r.determinant() < 0.0) {
    // flip the direction of the smallest singular value
    Eigen::Matrix<double, N, N> flip = Eigen::Matrix<double, N, N>::Identity();
    flip(N - 1, N - 1) = -1.0;
    r = svd.matrixU() * flip * svd.matrixV().transpose();
  }
  return r;
}

}  // namespace

Eigen::Matrix2d nearest_rotation(const Eigen::Matrix2d& f) { return polar_rotation<2>(f); }
Eigen::Matrix3d nearest_rotation(const Eigen::Matrix3d& f) { return polar_rotation<3>(f); }

Eigen::Matrix2d pi_tilde(const Eigen::Matrix2d& m, double delta) {
  return dist_so(m) <= delta ? nearest_rotation(m) : Eigen::Matrix2d::Identity();
}
Eigen::Matrix3d pi_tilde(const Eigen::Matrix3d& m, double delta) {
  return dist_so(m) <= delta ? nearest_rotation(m) : Eigen::Matrix3d::Identity();
}

Mollifier2d::Mollifier2d(const Grid2& g, double radius) : grid_(g) {
  if (!(radius > 0.0)) throw std::invalid_argument("Mollifier2d: radius must be positive");
  if (radius < 2.0 * g.dx() || radius < 2.0 * g.dy())
    throw std::invalid_argument("Mollifier2d: mollification radius under-resolved (needs >= 2 spacings)");
  mx_ = int(std::floor(radius / g.dx()));
  my_ = int(std::floor(radius / g.dy()));
  w_.assign(std::size_t(2 * mx_ + 1) * std::size_t(2 * my_ + 1), 0.0);
  double sum = 0.0;
  for (int a = -mx_; a <= mx_; ++a)
    for (int b = -my_; b <= my_; ++b) {
      const double t2 = (std::pow(a * g.dx(), 2) + std::pow(b * g.dy(), 2)) / (radius * radius);
      if (t2 < 1.0) {
        const double v = std::exp(-1.0 / (1.0 - t2));
        w_[std::size_t(a + mx_) * std::size_t(2 * my_ + 1) + std::size_t(b + my_)] = v;
        sum += v;
      }
    }
  for (double& v : w_) v /= sum;
}

std::vector<double> Mollifier2d::apply(const std::vector<double>& f) const {
  const Grid2& g = grid_;
  if (f.size() != g.count()) throw std::invalid_argument("Mollifier2d: array size mismatch");
  std::vector<double> out(g.count(), 0.0);
  auto reflect = [](int i, int n) {
    while (i < 0 || i > n - 1) {
      if (i < 0) i = -i;
      if (i > n - 1) i = 2 * (n - 1) - i;
    }
    return i;
  };
  for (int i = 0; i < g.nx; ++i)
    for (int j = 0; j < g.ny; ++j) {
      double acc = 0.0;
      for (int a = -mx_; a <= mx_; ++a) {
        const int ii = reflect(i + a, g.nx);
        for (int b = -my_; b <= my_; ++b) {
          const int jj = reflect(j + b, g.ny);
          acc += w_[std::size_t(a + mx_) * std::size_t(2 * my_ + 1) + std::size_t(b + my_)] *
                 f[g.idx(ii, jj)];
        }
      }
      out[g.idx(i, j)] = acc;
    }
  return out;
}

namespace {

// x3-averaged nodal in-plane gradient as four scalar arrays
std::array<std::vector<double>, 4> averaged_inplane_gradient(const DeformationField3& y) {
  std::array<std::vector<double>, 4> out;
  for (int a = 0; a < 2; ++a)
    for (int b = 0; b < 2; ++b)
      out[2 * a + b] = average_x3_fn(
          y.grid, [&](int i, int j, int k) { return nodal_d1(y, a, b, i, j, k); });
  return out;
}

}  // namespace

MollifiedRotation2d mollified_rotation_field_2d(const DeformationField3& y, double h,
                                                double delta) {
  const Grid2 plane = y.grid.plane();
  const Mollifier2d moll(plane, h);
  auto fbar = averaged_inplane_gradient(y);
  MollifiedRotation2d out;
  out.qtilde = Mat2Field(plane);
  out.q = Mat2Field(plane);
  std::array<std::vector<double>, 4> sm;
  for (int e = 0; e < 4; ++e) sm[e] = moll.apply(fbar[e]);
  for (int i = 0; i < plane.nx; ++i)
    for (int j = 0; j < plane.ny; ++j) {
      Eigen::Matrix2d qt;
      const std::size_t n = plane.idx(i, j);
      qt << sm[0][n], sm[1][n], sm[2][n], sm[3][n];
      out.qtilde.set(i, j, qt);
      out.q.set(i, j, pi_tilde(qt, delta));
    }
  return out;
}

Mat2Field3 per_slice_rotation_field(const DeformationField3& y, double h, double delta) {
  const Grid3& g = y.grid;
  const Grid2 plane = g.plane();
  const Mollifier2d moll(plane, h);
  Mat2Field3 out(g);
  std::vector<double> layer(plane.count());
  std::vector<std::vector<double>> sm(4, std::vector<double>());
  for (int k = 0; k < g.nz; ++k) {
    for (int a = 0; a < 2; ++a)
      for (int b = 0; b < 2; ++b) {
        for (int i = 0; i < g.nx; ++i)
          for (int j = 0; j < g.ny; ++j)
            layer[plane.idx(i, j)] = nodal_d1(y, a, b, i, j, k);
        sm[std::size_t(2 * a + b)] = moll.apply(layer);
      }
    for (int i = 0; i < g.nx; ++i)
      for (int j = 0; j < g.ny; ++j) {
        Eigen::Matrix2d t;
        const std::size_t n = plane.idx(i, j);
        t << sm[0][n], sm[1][n], sm[2][n], sm[3][n];
        out.set(i, j, k, pi_tilde(t, delta));
      }
  }
  return out;
}

Eigen::Matrix2d constant_rotation(const Mat2Field& qtilde, double delta) {
  const Grid2& g = qtilde.grid;
  Eigen::Matrix2d mean = Eigen::Matrix2d::Zero();
  double area = 0.0;
  for (int i = 0; i < g.nx; ++i)
    for (int j = 0; j < g.ny; ++j) {
      const double w = g.weight(i, j);
      mean += w * qtilde.at(i, j);
      area += w;
    }
  mean /= area;
  return pi_tilde(mean, delta);
}

NormalizationRotation normalization_rotation(const DeformationField3& ybar) {
  const Grid3& g = ybar.grid;
  double a = 0.0, b = 0.0;
  for (int i = 0; i < g.nx; ++i)
    for (int j = 0; j < g.ny; ++j)
      for (int k = 0; k < g.nz; ++k) {
        const double w = g.weight(i, j, k);
        a += w * (nodal_d1(ybar, 0, 0, i, j, k) + nodal_d1(ybar, 1, 1, i, j, k));
        b += w * (nodal_d1(ybar, 1, 0, i, j, k) - nodal_d1(ybar, 0, 1, i, j, k));
      }
  NormalizationRotation out;
  const double scale = std::abs(a) + std::abs(b);
  if (scale < 1e-14) {
    out.degenerate = true;
    return out;
  }
  if (std::abs(b) <= 1e-14 * scale) return out;  // symmetric averaged gradient
  const double theta = std::atan2(b, a);
  out.b << std::cos(theta), -std::sin(theta), std::sin(theta), std::cos(theta);
  return out;
}

RigidityReport rigidity_report(const DeformationField3& y, double h) {
  const Grid3& g = y.grid;
  const Grid2 plane = g.plane();
  RigidityReport rep;
  rep.h = h;

  // E1, E2 from nodal gradients and trapezoid weights
  for (int i = 0; i < g.nx; ++i)
    for (int j = 0; j < g.ny; ++j)
      for (int k = 0; k < g.nz; ++k) {
        const double w = g.weight(i, j, k);
        const Eigen::Matrix3d fh = nodal_grad_h(y, h, i, j, k);
        const double d3 = dist_so(fh);
        rep.e1 += w * d3 * d3;
        const Eigen::Matrix2d fp = fh.topLeftCorner<2, 2>();
        const double d2 = dist_so(fp);
        rep.e2 += w * d2 * d2;
      }

  const double tiny = 1e-20;
  rep.exact_rigid = rep.e1 < tiny || rep.e2 < tiny;
  if (rep.exact_rigid) return rep;

  // R_h: mollified projection of the x3-averaged scaled gradient (SO(3))
  {
    const Mollifier2d moll(plane, h);
    std::array<std::vector<double>, 9> avg;
    for (int r = 0; r < 3; ++r)
      for (int c = 0; c < 3; ++c) {
        auto raw = average_x3_fn(g, [&](int i, int j, int k) {
          return c == 2 ? nodal_d1(y, r, 2, i, j, k) / h : nodal_d1(y, r, c, i, j, k);
        });
        avg[std::size_t(3 * r + c)] = moll.apply(raw);
      }
    Mat3Field rfield(plane);
    for (int i = 0; i < plane.nx; ++i)
      for (int j = 0; j < plane.ny; ++j) {
        Eigen::Matrix3d m;
        const std::size_t n = plane.idx(i, j);
        for (int r = 0; r < 3; ++r)
          for (int c = 0; c < 3; ++c) m(r, c) = avg[std::size_t(3 * r + c)][n];
        rfield.set(i, j, pi_tilde(m));
      }
    double num = 0.0;
    for (int i = 0; i < g.nx; ++i)
      for (int j = 0; j < g.ny; ++j) {
        const Eigen::Matrix3d r = rfield.at(i, j);
        for (int k = 0; k < g.nz; ++k)
          num += g.weight(i, j, k) * (nodal_grad_h(y, h, i, j, k) - r).squaredNorm();
      }
    rep.r1 = num / rep.e1;
  }

  // Q_h and the gradient of the pre-projection field
  {
    const MollifiedRotation2d mq = mollified_rotation_field_2d(y, h);
    auto fbar = averaged_inplane_gradient(y);
    double num = 0.0;
    for (int i = 0; i < plane.nx; ++i)
      for (int j = 0; j < plane.ny; ++j) {
        const std::size_t n = plane.idx(i, j);
        Eigen::Matrix2d fb;
        fb << fbar[0][n], fbar[1][n], fbar[2][n], fbar[3][n];
        num += plane.weight(i, j) * (fb - mq.q.at(i, j)).squaredNorm();
      }
    rep.q1 = num / rep.e2;

    std::vector<double> entry(plane.count()), d;
    double gq = 0.0;
    for (int e = 0; e < 4; ++e) {
      for (std::size_t n = 0; n < plane.count(); ++n) entry[n] = mq.qtilde.a[4 * n + e];
      for (int axis = 0; axis < 2; ++axis) {
        apply_d1(plane, axis, entry, d);
        for (int i = 0; i < plane.nx; ++i)
          for (int j = 0; j < plane.ny; ++j) {
            const double v = d[plane.idx(i, j)];
            gq += plane.weight(i, j) * v * v;
          }
      }
    }
    rep.grad_q = h * h * gq / rep.e2;
  }

  // T_h per slice
  {
    const Mat2Field3 t = per_slice_rotation_field(y, h);
    double num = 0.0;
    for (int i = 0; i < g.nx; ++i)
      for (int j = 0; j < g.ny; ++j)
        for (int k = 0; k < g.nz; ++k) {
          Eigen::Matrix2d fp;
          fp << nodal_d1(y, 0, 0, i, j, k), nodal_d1(y, 0, 1, i, j, k),
              nodal_d1(y, 1, 0, i, j, k), nodal_d1(y, 1, 1, i, j, k);
          num += g.weight(i, j, k) * (fp - t.at(i, j, k)).squaredNorm();
        }
    rep.t1 = num / rep.e2;
  }
  return rep;
}

void write_rigidity_csv(const std::string& path, const std::vector<RigidityReport>& rows,
                        const std::string& trailer) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("write_rigidity_csv: cannot open " + path);
  os << "h,E1,E2,r1,q1,t1,gradQ,flag\n";
  for (const auto& r : rows)
    os << format_double(r.h) << ',' << format_double(r.e1) << ',' << format_double(r.e2) << ','
       << format_double(r.r1) << ',' << format_double(r.q1) << ',' << format_double(r.t1) << ','
       << format_double(r.grad_q) << ',' << (r.exact_rigid ? "exact_rigid" : "ok") << '\n';
  if (!trailer.empty()) os << trailer << '\n';
}

}  // namespace rmplate
