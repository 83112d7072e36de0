#include <doctest.h>

#include <cmath>

#include "rmplate/material.hpp"
#include "rmplate/rng.hpp"

using namespace rmplate;

namespace {

MaterialParams unit_params() {
  MaterialParams p;
  p.beta = 1.0;
  p.mu = 1.0;
  p.lambda = 1.0;
  p.c1 = 1.0;
  return p;
}

// eigenvalue-form oracle for w1: beta [(nu1-1)^2 + (nu2-1)^2]
double w1_eig_oracle(const Eigen::Matrix2d& c, double beta) {
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es(c);
  const double n1 = es.eigenvalues()[0], n2 = es.eigenvalues()[1];
  return beta * ((n1 - 1.0) * (n1 - 1.0) + (n2 - 1.0) * (n2 - 1.0));
}

}  // namespace

TEST_CASE("w1 matches the eigenvalue form") {
  CHECK(w1(Eigen::Matrix2d::Identity(), 1.0) == 0.0);
  CHECK(w1(Eigen::Vector2d(4.0, 1.0).asDiagonal().toDenseMatrix(), 1.0) == doctest::Approx(9.0));
  CHECK(w1(Eigen::Vector2d(2.0, 2.0).asDiagonal().toDenseMatrix(), 1.0) == doctest::Approx(2.0));

  Rng rng(11);
  for (int s = 0; s < 200; ++s) {
    Eigen::Matrix2d a = rng.symmetric2(0.4);
    Eigen::Matrix2d c = (Eigen::Matrix2d::Identity() + a).transpose() *
                        (Eigen::Matrix2d::Identity() + a);  // symmetric PSD
    const double beta = 0.5 + rng.uniform01();
    CHECK(w1(c, beta) == doctest::Approx(w1_eig_oracle(c, beta)).epsilon(1e-10));
  }
}

TEST_CASE("w1 rejects bad inputs") {
  Eigen::Matrix2d asym;
  asym << 1.0, 0.5, -0.5, 1.0;
  CHECK_THROWS_AS(w1(asym, 1.0), std::domain_error);
  Eigen::Matrix2d neg = Eigen::Vector2d(1.0, -0.5).asDiagonal();
  CHECK_THROWS_AS(w1(neg, 1.0), std::domain_error);
}

TEST_CASE("exact membrane expansion: w1(Id + A) = beta tr(A^2)") {
  Rng rng(12);
  for (int s = 0; s < 1000; ++s) {
    Eigen::Matrix2d a = rng.symmetric2(0.5);
    if (a.norm() > 1.0) a /= a.norm();
    const double beta = 0.25 + rng.uniform01();
    const double lhs = w1(Eigen::Matrix2d::Identity() + a, beta);
    const double rhs = beta * (a * a).trace();
    CHECK(std::abs(lhs - rhs) <= 1e-12 * std::max(1.0, std::abs(rhs)));
  }
}

TEST_CASE("w2 values and sentinel") {
  CHECK(w2(Eigen::Matrix3d::Identity(), 1.0, 1.0) == 0.0);
  // F = 2 Id: symbolic substitution gives 9 - ln 64 + 3969
  const double expected = 9.0 - std::log(64.0) + 3969.0;
  CHECK(w2(2.0 * Eigen::Matrix3d::Identity(), 1.0, 1.0) == doctest::Approx(expected).epsilon(1e-14));
  // det <= 0 is infeasible, not NaN
  Eigen::Matrix3d flip = Eigen::Vector3d(1.0, 1.0, -1.0).asDiagonal();
  CHECK(std::isinf(w2(flip, 1.0, 1.0)));
  CHECK(std::isinf(w2(Eigen::Matrix3d::Zero(), 1.0, 1.0)));

  Rng rng(13);
  for (int s = 0; s < 100; ++s)
    CHECK(std::abs(w2(rng.rotation3(), 1.0, 1.0)) < 1e-12);
}

TEST_CASE("w2 frame indifference") {
  Rng rng(14);
  for (int s = 0; s < 1000; ++s) {
    const Eigen::Matrix3d q = rng.rotation3();
    const Eigen::Matrix3d f = Eigen::Matrix3d::Identity() + rng.symmetric3(0.3);
    const double a = w2(f, 1.0, 2.0), b = w2(q * f, 1.0, 2.0);
    if (std::isinf(a)) {
      CHECK(std::isinf(b));  // infeasibility is frame indifferent too
      continue;
    }
    CHECK(std::abs(a - b) <= 1e-10 * (1.0 + std::abs(a)));
  }
}

TEST_CASE("dist_so from singular values, with sampling oracle") {
  CHECK(dist_so(Eigen::Matrix3d(Eigen::Matrix3d::Identity())) == 0.0);
  CHECK(dist_so(Eigen::Matrix3d(Eigen::Vector3d(2.0, 1.0, 1.0).asDiagonal())) ==
        doctest::Approx(1.0));
  CHECK(dist_so(Eigen::Matrix3d(Eigen::Vector3d(1.0, 1.0, -1.0).asDiagonal())) ==
        doctest::Approx(2.0));

  // oracle: random rotations never get closer than the reported distance
  Rng rng(15);
  const Eigen::Matrix3d f = Eigen::Vector3d(2.0, 1.0, 1.0).asDiagonal();
  double best = 1e100;
  for (int s = 0; s < 2000; ++s) best = std::min(best, (f - rng.rotation3()).norm());
  CHECK(best >= dist_so(f) - 1e-9);
  CHECK(best <= dist_so(f) + 0.2);  // sampling comes close

  const Eigen::Matrix3d r = Eigen::Vector3d(1.0, 1.0, -1.0).asDiagonal();
  double best2 = 1e100;
  for (int s = 0; s < 2000; ++s) best2 = std::min(best2, (r - rng.rotation3()).norm());
  CHECK(best2 >= dist_so(r) - 1e-9);
  CHECK((r - Eigen::Matrix3d::Identity()).norm() == doctest::Approx(2.0));
}

TEST_CASE("coercivity: w2 >= mu dist^2 near SO(3)") {
  Rng rng(16);
  const double mu = 1.3, lambda = 0.7;
  for (int s = 0; s < 1000; ++s) {
    Eigen::Matrix3d a = rng.symmetric3(0.3);
    const Eigen::Matrix3d f = rng.rotation3() * (Eigen::Matrix3d::Identity() + a);
    const double d = dist_so(f);
    if (d > 1.0 || !(f.determinant() > 0.0)) continue;
    CHECK(w2(f, mu, lambda) >= mu * d * d * (1.0 - 1e-9));
  }
}

TEST_CASE("q3 quadratic forms from FD Hessians") {
  const MaterialModel model(unit_params());

  // closed forms are the independent oracle: Q3_1(A) = 2 beta tr(A^2),
  // Q3_2(A) = 4 mu |sym A|^2 + 8 lambda (tr A)^2
  Eigen::Matrix2d a2 = Eigen::Vector2d(1.0, 0.0).asDiagonal();
  CHECK(model.q3(1, a2) == doctest::Approx(2.0).epsilon(1e-6));

  Eigen::Matrix3d e33 = Eigen::Matrix3d::Zero();
  e33(2, 2) = 1.0;
  CHECK(model.q3(2, e33) == doctest::Approx(12.0).epsilon(1e-6));

  Eigen::Matrix3d anti = Eigen::Matrix3d::Zero();
  anti(0, 1) = 1.0;
  anti(1, 0) = -1.0;
  CHECK(model.q3(2, anti) == doctest::Approx(0.0).epsilon(1e-6));

  Rng rng(17);
  MaterialParams p = unit_params();
  p.mu = 1.7;
  p.lambda = 0.4;
  p.beta = 2.3;
  const MaterialModel m2(p);
  for (int s = 0; s < 100; ++s) {
    const Eigen::Matrix3d a = 0.7 * rng.gaussian3();
    const Eigen::Matrix3d sym = 0.5 * (a + a.transpose());
    const double closed = 4.0 * p.mu * sym.squaredNorm() + 8.0 * p.lambda * std::pow(a.trace(), 2);
    CHECK(m2.q3(2, a) == doctest::Approx(closed).epsilon(1e-6));
    const Eigen::Matrix2d b = rng.symmetric2(0.8);
    CHECK(m2.q3(1, b) == doctest::Approx(2.0 * p.beta * (b * b).trace()).epsilon(1e-6));
    // Q3_2 depends only on the symmetric part
    CHECK(m2.q3(2, a) == doctest::Approx(m2.q3(2, sym)).epsilon(1e-6));
  }
}

TEST_CASE("q2_relaxed against a dense scan") {
  MaterialParams p = unit_params();
  p.mu = 1.5;
  p.lambda = 0.8;
  const MaterialModel model(p);

  Eigen::Matrix3d g = Eigen::Matrix3d::Zero();
  g(0, 2) = g(2, 0) = 1.0;

  const RelaxedValue r = model.q2_relaxed(g);
  CHECK(std::abs(r.c_star) < 1e-6);
  CHECK(r.value == doctest::Approx(8.0 * p.mu).epsilon(1e-6));

  // zero argument
  const RelaxedValue r0 = model.q2_relaxed(Eigen::Matrix3d::Zero());
  CHECK(std::abs(r0.value) < 1e-12);
  CHECK(std::abs(r0.c_star) < 1e-12);

  // dense scan oracle
  Eigen::Matrix3d e33 = Eigen::Matrix3d::Zero();
  e33(2, 2) = 1.0;
  Rng rng(18);
  for (int s = 0; s < 5; ++s) {
    Eigen::Matrix3d gs = Eigen::Matrix3d::Zero();
    const double g1 = rng.uniform(-1.0, 1.0), g2 = rng.uniform(-1.0, 1.0);
    gs(0, 2) = gs(2, 0) = g1;
    gs(1, 2) = gs(2, 1) = g2;
    const RelaxedValue rv = model.q2_relaxed(gs);
    double best = 1e300;
    for (int i = 0; i <= 10000; ++i) {
      const double c = -5.0 + i * 1e-3;
      best = std::min(best, model.q3(2, gs + c * e33));
    }
    CHECK(std::abs(rv.value - best) <= 1e-6 * (1.0 + std::abs(best)));
    CHECK(rv.value <= best + 1e-12);
    // minimality against sampled c
    for (int i = 0; i < 100; ++i) {
      const double c = rng.uniform(-3.0, 3.0);
      CHECK(rv.value <= model.q3(2, gs + c * e33) + 1e-10);
    }
  }
}

TEST_CASE("q2_relaxed value matches q2_value fast path") {
  const MaterialModel model(unit_params());
  Rng rng(19);
  for (int s = 0; s < 50; ++s) {
    Eigen::Matrix3d g = rng.symmetric3(0.7);
    CHECK(model.q2_relaxed(g).value == doctest::Approx(model.q2_value(g)).epsilon(1e-12));
  }
}

TEST_CASE("check_assumptions on the reference densities") {
  const AssumptionReport rep = check_assumptions(unit_params(), 1000, 100);
  for (const auto& e : rep.entries) {
    INFO(e.name, ": ", e.detail);
    CHECK(e.pass);
  }
  CHECK(rep.all_pass());

  // A1 residual is tiny and A3 reproduces the proven constant mu
  CHECK(rep.entries[0].worst < 1e-10);
  CHECK(rep.entries[2].worst >= 1.0 * (1.0 - 1e-9));
  // A4 reports a positive empirical constant with c1 = beta
  CHECK(rep.entries[3].worst > 0.0);
}

TEST_CASE("check_assumptions flags a degenerate shear modulus") {
  MaterialParams p = unit_params();
  p.mu = 0.0;
  const AssumptionReport rep = check_assumptions(p, 500, 100);
  bool a3_failed = false;
  for (const auto& e : rep.entries)
    if (e.name == "A3") a3_failed = !e.pass;
  CHECK(a3_failed);
}

TEST_CASE("params validation") {
  MaterialParams p = unit_params();
  p.sigma = 3.0;
  CHECK_THROWS_AS(p.validate(), std::invalid_argument);
  p = unit_params();
  p.mu = 0.0;
  CHECK_THROWS_AS(p.validate(), std::invalid_argument);
  p = unit_params();
  p.epsilon = 0.0;
  CHECK_THROWS_AS(p.validate(), std::invalid_argument);
  CHECK_NOTHROW(unit_params().validate());
}

TEST_CASE("quadratic forms are positive semidefinite on symmetric arguments") {
  MaterialParams p = unit_params();
  p.mu = 0.9;
  p.lambda = 1.8;
  p.beta = 1.4;
  const MaterialModel m(p);
  Rng rng(21);
  for (int s = 0; s < 200; ++s) {
    CHECK(m.q3(1, Eigen::MatrixXd(rng.symmetric2())) >= -1e-10);
    CHECK(m.q3(2, Eigen::MatrixXd(rng.symmetric3())) >= -1e-10);
  }
  // and symmetric as bilinear forms
  CHECK((m.form1().hessian - m.form1().hessian.transpose()).norm() == 0.0);
  CHECK((m.form2().hessian - m.form2().hessian.transpose()).norm() == 0.0);
}

TEST_CASE("q2_relaxed degeneracy error") {
  MaterialParams p = unit_params();
  p.mu = 0.0;
  p.lambda = 0.0;
  const MaterialModel model(p);
  CHECK_THROWS_AS(model.q2_relaxed(Eigen::Matrix3d::Zero()), std::runtime_error);
}
