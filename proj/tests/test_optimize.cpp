#include <doctest.h>

#include <cmath>

#include "rmplate/energy3d.hpp"
#include "rmplate/optimize.hpp"
#include "rmplate/rng.hpp"

using namespace rmplate;

TEST_CASE("quadratic bowl converges in a handful of iterations") {
  const int dim = 7;
  Eigen::VectorXd a(dim);
  Rng rng(60);
  for (int i = 0; i < dim; ++i) a[i] = rng.normal();
  auto energy = [&](const Eigen::VectorXd& x) { return 0.5 * (x - a).squaredNorm(); };
  auto grad = [&](const Eigen::VectorXd& x, Eigen::VectorXd& g) { g = x - a; };
  const MinimizeResult r = minimize(energy, grad, Eigen::VectorXd::Zero(dim), {}, {});
  CHECK(r.status == MinimizeStatus::converged);
  CHECK(r.iters <= dim + 5);
  CHECK((r.x - a).norm() < 1e-7);
}

TEST_CASE("masked coordinates never move, traces are monotone and reproducible") {
  const int dim = 12;
  Eigen::MatrixXd mrand(dim, dim);
  Rng rng(61);
  for (int i = 0; i < dim; ++i)
    for (int j = 0; j < dim; ++j) mrand(i, j) = rng.normal();
  const Eigen::MatrixXd A = mrand.transpose() * mrand + Eigen::MatrixXd::Identity(dim, dim);
  Eigen::VectorXd b(dim);
  for (int i = 0; i < dim; ++i) b[i] = rng.normal();
  auto energy = [&](const Eigen::VectorXd& x) { return 0.5 * x.dot(A * x) - b.dot(x); };
  auto grad = [&](const Eigen::VectorXd& x, Eigen::VectorXd& g) { g = A * x - b; };

  std::vector<std::uint8_t> mask(dim, 0);
  mask[0] = mask[5] = 1;
  Eigen::VectorXd x0 = Eigen::VectorXd::Constant(dim, 0.25);
  MinimizeOptions opts;
  opts.max_iters = 500;
  const MinimizeResult r1 = minimize(energy, grad, x0, mask, opts);
  CHECK(r1.status == MinimizeStatus::converged);
  CHECK(r1.x[0] == x0[0]);
  CHECK(r1.x[5] == x0[5]);
  for (std::size_t i = 1; i < r1.trace.size(); ++i)
    CHECK(r1.trace[i].energy <= r1.trace[i - 1].energy);

  const MinimizeResult r2 = minimize(energy, grad, x0, mask, opts);
  REQUIRE(r1.trace.size() == r2.trace.size());
  for (std::size_t i = 0; i < r1.trace.size(); ++i) {
    CHECK(r1.trace[i].energy == r2.trace[i].energy);
    CHECK(r1.trace[i].grad_norm == r2.trace[i].grad_norm);
    CHECK(r1.trace[i].step == r2.trace[i].step);
  }
  for (int i = 0; i < dim; ++i) CHECK(r1.x[i] == r2.x[i]);
}

TEST_CASE("sentinel energy at the start is an immediate error") {
  auto energy = [](const Eigen::VectorXd&) { return kInfeasible; };
  auto grad = [](const Eigen::VectorXd&, Eigen::VectorXd& g) { g.setZero(); };
  CHECK_THROWS_AS(minimize(energy, grad, Eigen::VectorXd::Zero(3), {}, {}),
                  std::invalid_argument);
}

TEST_CASE("the 3D energy stays at the identity configuration") {
  MaterialParams p;
  const MaterialModel m(p);
  const Grid3 g(6, 6, 4);
  const double h = 0.25;
  const DeformationField3 y0 = identity_configuration(g, h);
  Eigen::VectorXd x0(Eigen::Index(y0.v.size()));
  for (std::size_t i = 0; i < y0.v.size(); ++i) x0[Eigen::Index(i)] = y0.v[i];
  auto energy = [&](const Eigen::VectorXd& x) {
    DeformationField3 y(g);
    for (Eigen::Index i = 0; i < x.size(); ++i) y.v[std::size_t(i)] = x[i];
    return energy_ih(y, h, m).total;
  };
  auto grad = [&](const Eigen::VectorXd& x, Eigen::VectorXd& gr) {
    DeformationField3 y(g);
    for (Eigen::Index i = 0; i < x.size(); ++i) y.v[std::size_t(i)] = x[i];
    const auto gv = grad_energy(y, h, m);
    gr.resize(x.size());
    for (std::size_t i = 0; i < gv.size(); ++i) gr[Eigen::Index(i)] = gv[i];
  };
  const MinimizeResult r = minimize(energy, grad, x0, bc_mask(g), {});
  CHECK(r.status == MinimizeStatus::converged);
  CHECK(r.iters == 0);
  for (Eigen::Index i = 0; i < x0.size(); ++i) CHECK(r.x[i] == x0[i]);
}

TEST_CASE("fd_gradient_check") {
  SUBCASE("quadratic energy is exact up to rounding") {
    const int dim = 9;
    Rng rng(62);
    Eigen::VectorXd a(dim);
    for (int i = 0; i < dim; ++i) a[i] = rng.normal();
    auto energy = [&](const Eigen::VectorXd& x) { return 0.5 * (x - a).squaredNorm(); };
    auto grad = [&](const Eigen::VectorXd& x, Eigen::VectorXd& g) { g = x - a; };
    Eigen::VectorXd x = Eigen::VectorXd::Constant(dim, 0.8);
    CHECK(fd_gradient_check(energy, grad, x, 20, 1e-4, 7) < 1e-9);
  }

  SUBCASE("linear energy") {
    const int dim = 5;
    Eigen::VectorXd b = Eigen::VectorXd::LinSpaced(dim, -1.0, 1.0);
    auto energy = [&](const Eigen::VectorXd& x) { return -b.dot(x); };
    auto grad = [&](const Eigen::VectorXd& x, Eigen::VectorXd& g) { (void)x; g = -b; };
    CHECK(fd_gradient_check(energy, grad, Eigen::VectorXd::Zero(dim), 10, 1e-6, 8) < 1e-12);
  }

  SUBCASE("3D energy at a near-identity field") {
    MaterialParams p;
    const MaterialModel m(p);
    const Grid3 g(6, 5, 4);
    const double h = 0.25;
    DeformationField3 y = identity_configuration(g, h);
    Rng rng(63);
    for (int i = 1; i + 1 < g.nx; ++i)
      for (int j = 1; j + 1 < g.ny; ++j)
        for (int k = 0; k < g.nz; ++k)
          for (int c = 0; c < 3; ++c) y.at(i, j, k, c) += 0.01 * rng.normal();
    Eigen::VectorXd x(Eigen::Index(y.v.size()));
    for (std::size_t i = 0; i < y.v.size(); ++i) x[Eigen::Index(i)] = y.v[i];
    auto energy = [&](const Eigen::VectorXd& xv) {
      DeformationField3 yy(g);
      for (Eigen::Index i = 0; i < xv.size(); ++i) yy.v[std::size_t(i)] = xv[i];
      return energy_ih(yy, h, m, EnergyVariant::plain, BcMode::ignore).total;
    };
    auto grad = [&](const Eigen::VectorXd& xv, Eigen::VectorXd& gr) {
      DeformationField3 yy(g);
      for (Eigen::Index i = 0; i < xv.size(); ++i) yy.v[std::size_t(i)] = xv[i];
      const auto gv = grad_energy(yy, h, m, EnergyVariant::plain, BcMode::ignore);
      gr.resize(xv.size());
      for (std::size_t i = 0; i < gv.size(); ++i) gr[Eigen::Index(i)] = gv[i];
    };
    CHECK(fd_gradient_check(energy, grad, x, 8, 1e-6, 9) <= 1e-5);
  }
}
