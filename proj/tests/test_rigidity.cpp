#include <doctest.h>

#include <cmath>

#include "rmplate/recovery.hpp"
#include "rmplate/rigidity.hpp"
#include "rmplate/rng.hpp"

using namespace rmplate;

namespace {

Eigen::Matrix2d rot2(double t) {
  Eigen::Matrix2d q;
  q << std::cos(t), -std::sin(t), std::sin(t), std::cos(t);
  return q;
}

DeformationField3 inplane_rigid(const Grid3& g, double h, double angle) {
  DeformationField3 y(g);
  const Eigen::Matrix2d q = rot2(angle);
  for (int i = 0; i < g.nx; ++i)
    for (int j = 0; j < g.ny; ++j)
      for (int k = 0; k < g.nz; ++k) {
        const Eigen::Vector2d xp = q * Eigen::Vector2d(g.x1(i), g.x2(j));
        y.set(i, j, k, {xp[0], xp[1], h * g.x3(k)});
      }
  return y;
}

DeformationField3 perturbed(const Grid3& g, double h, double delta) {
  DeformationField3 y(g);
  const double nrm = std::pow(0.5 * g.lx, 2) * std::pow(0.5 * g.ly, 2);
  for (int i = 0; i < g.nx; ++i)
    for (int j = 0; j < g.ny; ++j) {
      const double x1 = g.x1(i), x2 = g.x2(j);
      const double b = std::pow(x1 * (g.lx - x1) * x2 * (g.ly - x2) / nrm, 2);
      for (int k = 0; k < g.nz; ++k)
        y.set(i, j, k,
              {x1 + delta * b * (0.8 + 0.4 * x2), x2 + delta * b * (-0.5 + 0.3 * x1),
               h * g.x3(k)});
    }
  return y;
}

}  // namespace

TEST_CASE("nearest_rotation") {
  Rng rng(80);
  CHECK((nearest_rotation(Eigen::Matrix3d(Eigen::Matrix3d::Identity())) -
         Eigen::Matrix3d::Identity()).norm() < 1e-14);

  // projection fixes the manifold
  for (int s = 0; s < 50; ++s) {
    const Eigen::Matrix3d q = rng.rotation3();
    CHECK((nearest_rotation(q) - q).norm() < 1e-12);
  }

  // polar factor of a positive stretch is the identity
  const Eigen::Matrix3d d = Eigen::Vector3d(2.0, 1.0, 1.0).asDiagonal();
  CHECK((nearest_rotation(d) - Eigen::Matrix3d::Identity()).norm() < 1e-12);
  CHECK((d - nearest_rotation(d)).norm() == doctest::Approx(dist_so(d)).epsilon(1e-12));

  // minimality against sampled rotations, orthogonality and orientation
  for (int s = 0; s < 100; ++s) {
    Eigen::Matrix3d f = Eigen::Matrix3d::Identity() + 0.4 * rng.gaussian3();
    if (!(f.determinant() > 0.0)) continue;
    const Eigen::Matrix3d r = nearest_rotation(f);
    CHECK((r.transpose() * r - Eigen::Matrix3d::Identity()).norm() <= 1e-10);
    CHECK(r.determinant() > 0.0);
    const double dn = (f - r).norm();
    for (int t = 0; t < 100; ++t) CHECK(dn <= (f - rng.rotation3()).norm() + 1e-9);
  }

  // 2D overload
  for (int s = 0; s < 50; ++s) {
    const Eigen::Matrix2d f = Eigen::Matrix2d::Identity() + 0.3 * rng.gaussian2();
    const Eigen::Matrix2d r = nearest_rotation(f);
    CHECK((r.transpose() * r - Eigen::Matrix2d::Identity()).norm() <= 1e-12);
    CHECK(r.determinant() > 0.0);
  }
}

TEST_CASE("pi_tilde falls back to the identity far from the group") {
  const Eigen::Matrix2d far = 10.0 * Eigen::Matrix2d::Ones();
  CHECK(dist_so(far) > 0.5);
  CHECK((pi_tilde(far) - Eigen::Matrix2d::Identity()).norm() == 0.0);
  const Eigen::Matrix2d near = rot2(0.4) * (Eigen::Matrix2d::Identity() * 1.05);
  CHECK((pi_tilde(near) - rot2(0.4)).norm() < 1e-12);
}

TEST_CASE("mollifier") {
  const Grid2 g(17, 17);

  SUBCASE("under-resolved radius is a parameter error") {
    CHECK_THROWS_AS(Mollifier2d(g, 0.5 * g.dx()), std::invalid_argument);
  }

  SUBCASE("constants are preserved exactly, also at the boundary") {
    const Mollifier2d moll(g, 0.2);
    std::vector<double> f(g.count(), 2.75);
    const auto out = moll.apply(f);
    for (double v : out) CHECK(v == doctest::Approx(2.75).epsilon(1e-15));
  }

  SUBCASE("smoothing reduces oscillation") {
    const Mollifier2d moll(g, 0.25);
    std::vector<double> f(g.count());
    for (int i = 0; i < g.nx; ++i)
      for (int j = 0; j < g.ny; ++j) f[g.idx(i, j)] = ((i + j) % 2) ? 1.0 : -1.0;
    const auto out = moll.apply(f);
    double mx = 0.0;
    for (double v : out) mx = std::max(mx, std::abs(v));
    CHECK(mx < 0.5);
  }
}

TEST_CASE("mollified rotation fields on rigid configurations") {
  const Grid3 g(17, 17, 5);
  const double h = 0.25;

  SUBCASE("identity configuration") {
    const DeformationField3 y = inplane_rigid(g, h, 0.0);
    const MollifiedRotation2d mq = mollified_rotation_field_2d(y, h);
    for (int i = 0; i < g.nx; ++i)
      for (int j = 0; j < g.ny; ++j) {
        CHECK((mq.qtilde.at(i, j) - Eigen::Matrix2d::Identity()).norm() < 1e-12);
        CHECK((mq.q.at(i, j) - Eigen::Matrix2d::Identity()).norm() < 1e-12);
      }
  }

  SUBCASE("constant rotation passes through the convolution and projection") {
    const double t = 0.55;
    const DeformationField3 y = inplane_rigid(g, h, t);
    const MollifiedRotation2d mq = mollified_rotation_field_2d(y, h);
    const Mat2Field3 tf = per_slice_rotation_field(y, h);
    for (int i = 0; i < g.nx; ++i)
      for (int j = 0; j < g.ny; ++j) {
        CHECK((mq.q.at(i, j) - rot2(t)).norm() < 1e-11);
        for (int k = 0; k < g.nz; ++k) CHECK((tf.at(i, j, k) - rot2(t)).norm() < 1e-11);
      }
  }
}

TEST_CASE("rotation-field outputs satisfy the group invariants") {
  const Grid3 g(17, 17, 5);
  const double h = 0.25;
  const DeformationField3 y = perturbed(g, h, 0.05);
  const MollifiedRotation2d mq = mollified_rotation_field_2d(y, h);
  const Mat2Field3 tf = per_slice_rotation_field(y, h);
  for (int i = 0; i < g.nx; ++i)
    for (int j = 0; j < g.ny; ++j) {
      const Eigen::Matrix2d q = mq.q.at(i, j);
      CHECK((q.transpose() * q - Eigen::Matrix2d::Identity()).norm() <= 1e-10);
      CHECK(q.determinant() > 0.0);
      for (int k = 0; k < g.nz; ++k) {
        const Eigen::Matrix2d t = tf.at(i, j, k);
        CHECK((t.transpose() * t - Eigen::Matrix2d::Identity()).norm() <= 1e-10);
        CHECK(t.determinant() > 0.0);
      }
    }
}

TEST_CASE("constant_rotation") {
  const Grid2 g(9, 9);

  SUBCASE("a constant rotation field maps to itself") {
    Mat2Field f(g);
    const Eigen::Matrix2d q = rot2(-0.8);
    for (int i = 0; i < g.nx; ++i)
      for (int j = 0; j < g.ny; ++j) f.set(i, j, q);
    CHECK((constant_rotation(f) - q).norm() < 1e-12);
  }

  SUBCASE("Id plus a small antisymmetric part projects to the small rotation") {
    Mat2Field f(g);
    const double eps = 0.01;
    Eigen::Matrix2d m = Eigen::Matrix2d::Identity();
    m(0, 1) = -eps;
    m(1, 0) = eps;
    for (int i = 0; i < g.nx; ++i)
      for (int j = 0; j < g.ny; ++j) f.set(i, j, m);
    CHECK((constant_rotation(f) - rot2(eps)).norm() < 1e-4);
  }

  SUBCASE("means far from the group fall back to the identity") {
    Mat2Field f(g);
    for (int i = 0; i < g.nx; ++i)
      for (int j = 0; j < g.ny; ++j) f.set(i, j, 7.0 * Eigen::Matrix2d::Ones());
    CHECK((constant_rotation(f) - Eigen::Matrix2d::Identity()).norm() == 0.0);
  }
}

TEST_CASE("normalization_rotation") {
  const Grid3 g(10, 10, 4);
  const double h = 0.2;

  SUBCASE("symmetric averaged gradients give the identity") {
    DeformationField3 y(g);
    for (int i = 0; i < g.nx; ++i)
      for (int j = 0; j < g.ny; ++j)
        for (int k = 0; k < g.nz; ++k)
          y.set(i, j, k, {1.3 * g.x1(i), 0.7 * g.x2(j), h * g.x3(k)});
    const NormalizationRotation r = normalization_rotation(y);
    CHECK(!r.degenerate);
    CHECK((r.b - Eigen::Matrix2d::Identity()).norm() == 0.0);
  }

  SUBCASE("small rotations are recovered and removed") {
    const double t0 = 0.07;
    const DeformationField3 y = inplane_rigid(g, h, t0);
    const NormalizationRotation r = normalization_rotation(y);
    CHECK((r.b - rot2(t0)).norm() < 1e-10);

    // applying B' and renormalizing yields the identity; the postcondition
    // integral vanishes
    DeformationField3 yn(g);
    for (int i = 0; i < g.nx; ++i)
      for (int j = 0; j < g.ny; ++j)
        for (int k = 0; k < g.nz; ++k) {
          const Eigen::Vector3d v = y.vec(i, j, k);
          const Eigen::Vector2d p = r.b.transpose() * Eigen::Vector2d(v[0], v[1]);
          yn.set(i, j, k, {p[0], p[1], v[2]});
        }
    double bint = 0.0;
    for (int i = 0; i < g.nx; ++i)
      for (int j = 0; j < g.ny; ++j)
        for (int k = 0; k < g.nz; ++k)
          bint += g.weight(i, j, k) *
                  (nodal_d1(yn, 1, 0, i, j, k) - nodal_d1(yn, 0, 1, i, j, k));
    CHECK(std::abs(bint) < 1e-10);
    const NormalizationRotation r2 = normalization_rotation(yn);
    CHECK((r2.b - Eigen::Matrix2d::Identity()).norm() < 1e-9);
  }

  SUBCASE("degenerate input is flagged") {
    DeformationField3 y(g);  // all zeros
    const NormalizationRotation r = normalization_rotation(y);
    CHECK(r.degenerate);
    CHECK((r.b - Eigen::Matrix2d::Identity()).norm() == 0.0);
  }
}

TEST_CASE("rigidity_report") {
  SUBCASE("rigid motions carry the exact-rigidity flag") {
    const Grid3 g(17, 17, 5);
    const double h = 0.25;
    const RigidityReport r = rigidity_report(inplane_rigid(g, h, 0.35), h);
    CHECK(r.exact_rigid);
    CHECK(r.e1 < 1e-20);
    CHECK(r.e2 < 1e-20);
    CHECK(r.r1 == 0.0);
    CHECK(r.q1 == 0.0);
    CHECK(r.t1 == 0.0);
  }

  SUBCASE("perturbation ratios are stable across amplitudes") {
    const Grid3 g(33, 33, 5);
    const double h = 0.25;
    std::vector<RigidityReport> rows;
    for (double delta : {1e-3, 1e-2, 1e-1})
      rows.push_back(rigidity_report(perturbed(g, h, delta), h));
    for (const auto& r : rows) {
      CHECK(!r.exact_rigid);
      CHECK(r.e1 > 0.0);
      CHECK(r.e2 > 0.0);
      CHECK(std::isfinite(r.r1));
      CHECK(std::isfinite(r.q1));
      CHECK(std::isfinite(r.t1));
      CHECK(std::isfinite(r.grad_q));
    }
    for (std::size_t a = 0; a + 1 < rows.size(); ++a) {
      CHECK(rows[a + 1].q1 <= 3.0 * rows[a].q1);
      CHECK(rows[a].q1 <= 3.0 * rows[a + 1].q1);
      CHECK(rows[a + 1].t1 <= 3.0 * rows[a].t1);
      CHECK(rows[a].t1 <= 3.0 * rows[a + 1].t1);
    }
  }

  SUBCASE("recovery fields: ratios bounded by a common constant across h") {
    MaterialParams p;
    const MaterialModel m(p);
    GammaStudyOptions opts;
    std::vector<RigidityReport> rows;
    for (double h : {0.125, 0.0625, 0.03125}) {
      const Grid2 g2 = study_grid(h, 1.0, 1.0, opts);
      const MidsurfaceState s = sample_state(canonical_bump_state(), g2);
      rows.push_back(rigidity_report(build_recovery(s, 5.0, h, m, 8), h));
    }
    double rmax = 0.0;
    for (const auto& r : rows) {
      CHECK(!r.exact_rigid);
      rmax = std::max({rmax, r.r1, r.q1, r.t1});
      CHECK(std::isfinite(r.grad_q));
    }
    CHECK(rmax < 10.0);  // a common constant, far from blowing up
  }

  SUBCASE("recovery fields: E2/E1 scales like h^2") {
    MaterialParams p;
    const MaterialModel m(p);
    GammaStudyOptions opts;
    double prev_ratio = -1.0;
    for (double h : {0.125, 0.0625}) {
      const Grid2 g2 = study_grid(h, 1.0, 1.0, opts);
      const MidsurfaceState s = sample_state(canonical_bump_state(), g2);
      const DeformationField3 y = build_recovery(s, 5.0, h, m, 8);
      const RigidityReport r = rigidity_report(y, h);
      CHECK(!r.exact_rigid);
      const double ratio = r.e2 / r.e1;
      if (prev_ratio > 0.0) {
        // halving h should shrink E2/E1 by roughly 4; accept [2.5, 6]
        const double gain = prev_ratio / ratio;
        CHECK(gain > 2.5);
        CHECK(gain < 6.0);
      }
      prev_ratio = ratio;
    }
  }
}
