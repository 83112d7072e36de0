#pragma once

#include <cstddef>
#include <stdexcept>

namespace rmplate {

// Uniform tensor grid over the mid-surface S = (0,lx) x (0,ly).
// Node coordinates are computed as (lx*i)/(nx-1) so that the endpoints
// come out exactly 0 and lx in floating point.
struct Grid2 {
  int nx = 0, ny = 0;
  double lx = 1.0, ly = 1.0;

  Grid2() = default;
  Grid2(int nx_, int ny_, double lx_ = 1.0, double ly_ = 1.0)
      : nx(nx_), ny(ny_), lx(lx_), ly(ly_) {
    if (nx < 4 || ny < 4) throw std::invalid_argument("Grid2: need nx,ny >= 4");
    if (lx <= 0.0 || ly <= 0.0) throw std::invalid_argument("Grid2: side lengths must be positive");
  }

  double dx() const { return lx / double(nx - 1); }
  double dy() const { return ly / double(ny - 1); }
  double x1(int i) const { return lx * double(i) / double(nx - 1); }
  double x2(int j) const { return ly * double(j) / double(ny - 1); }

  std::size_t count() const { return std::size_t(nx) * std::size_t(ny); }
  std::size_t idx(int i, int j) const { return std::size_t(i) * std::size_t(ny) + std::size_t(j); }

  bool on_boundary(int i, int j) const {
    return i == 0 || j == 0 || i == nx - 1 || j == ny - 1;
  }

  // trapezoid-rule area weight of node (i,j)
  double weight(int i, int j) const {
    double w = dx() * dy();
    if (i == 0 || i == nx - 1) w *= 0.5;
    if (j == 0 || j == ny - 1) w *= 0.5;
    return w;
  }

  bool same_layout(const Grid2& o) const {
    return nx == o.nx && ny == o.ny && lx == o.lx && ly == o.ly;
  }
};

// Grid over the rescaled body Omega = S x (-1/2, 1/2).
struct Grid3 {
  int nx = 0, ny = 0, nz = 0;
  double lx = 1.0, ly = 1.0;

  Grid3() = default;
  Grid3(int nx_, int ny_, int nz_, double lx_ = 1.0, double ly_ = 1.0)
      : nx(nx_), ny(ny_), nz(nz_), lx(lx_), ly(ly_) {
    if (nx < 4 || ny < 4 || nz < 2) throw std::invalid_argument("Grid3: need nx,ny >= 4 and nz >= 2");
    if (lx <= 0.0 || ly <= 0.0) throw std::invalid_argument("Grid3: side lengths must be positive");
  }

  double dx() const { return lx / double(nx - 1); }
  double dy() const { return ly / double(ny - 1); }
  double dz() const { return 1.0 / double(nz - 1); }
  double x1(int i) const { return lx * double(i) / double(nx - 1); }
  double x2(int j) const { return ly * double(j) / double(ny - 1); }
  double x3(int k) const { return double(k) / double(nz - 1) - 0.5; }

  std::size_t count() const { return std::size_t(nx) * std::size_t(ny) * std::size_t(nz); }
  std::size_t idx(int i, int j, int k) const {
    return (std::size_t(i) * std::size_t(ny) + std::size_t(j)) * std::size_t(nz) + std::size_t(k);
  }

  // lateral boundary dS x I, where the Dirichlet condition lives
  bool on_lateral_boundary(int i, int j) const {
    return i == 0 || j == 0 || i == nx - 1 || j == ny - 1;
  }

  // trapezoid-rule volume weight of node (i,j,k)
  double weight(int i, int j, int k) const {
    double w = dx() * dy() * dz();
    if (i == 0 || i == nx - 1) w *= 0.5;
    if (j == 0 || j == ny - 1) w *= 0.5;
    if (k == 0 || k == nz - 1) w *= 0.5;
    return w;
  }

  Grid2 plane() const { return Grid2(nx, ny, lx, ly); }
};

}  // namespace rmplate
