#include "rmplate/material.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

#include "rmplate/rng.hpp"

namespace rmplate {

void MaterialParams::validate() const {
  if (!(beta > 0.0) || !(mu > 0.0) || !(lambda > 0.0) || !(c1 > 0.0))
    throw std::invalid_argument("MaterialParams: beta, mu, lambda, c1 must be strictly positive");
  if (!(l >= 0.0)) throw std::invalid_argument("MaterialParams: l must be >= 0");
  if (!(epsilon > 0.0)) throw std::invalid_argument("MaterialParams: epsilon must be > 0");
  if (!(sigma >= 4.0)) throw std::invalid_argument("MaterialParams: sigma must be >= 4");
}

void MaterialParams::validate_for_checks() const {
  if (!(beta >= 0.0) || !(mu >= 0.0) || !(lambda >= 0.0) || !(c1 >= 0.0) || !(l >= 0.0))
    throw std::invalid_argument("MaterialParams: moduli must be finite and >= 0");
}

double w1_raw(const Eigen::Matrix2d& c, double beta) {
  const double tr = c.trace();
  const double tr2 = (c * c).trace();
  return beta * (tr2 - 2.0 * tr + 2.0);
}

double w1(const Eigen::Matrix2d& c, double beta) {
  const double scale = std::max(1.0, c.norm());
  if ((c - c.transpose()).norm() > 1e-12 * scale)
    throw std::domain_error("w1: argument is not symmetric");
  // eigenvalues of a symmetric 2x2 in closed form
  const double m = 0.5 * (c(0, 0) + c(1, 1));
  const double d = c(0, 0) * c(1, 1) - c(0, 1) * c(1, 0);
  const double r = std::sqrt(std::max(0.0, m * m - d));
  if (m - r < -1e-12)
    throw std::domain_error("w1: argument has a negative eigenvalue");
  return w1_raw(c, beta);
}

double w2(const Eigen::Matrix3d& f, double mu, double lambda) {
  const double detf = f.determinant();
  if (!(detf > 0.0)) return kInfeasible;
  const double tr = f.squaredNorm();           // tr(F^T F)
  const double detc = detf * detf;             // det(F^T F)
  return mu * (tr - 3.0) - 2.0 * mu * std::log(detf) + lambda * (detc - 1.0) * (detc - 1.0);
}

namespace {

template <int N>
double dist_so_impl(const Eigen::Matrix<double, N, N>& f) {
  Eigen::JacobiSVD<Eigen::Matrix<double, N, N>> svd(f);
  const auto& s = svd.singularValues();
  double d2 = 0.0;
  if (f.determinant() >= 0.0) {
    for (int i = 0; i < N; ++i) d2 += (s[i] - 1.0) * (s[i] - 1.0);
  } else {
    for (int i = 0; i < N - 1; ++i) d2 += (s[i] - 1.0) * (s[i] - 1.0);
    d2 += (s[N - 1] + 1.0) * (s[N - 1] + 1.0);  // smallest singular value
  }
  return std::sqrt(d2);
}

}  // namespace

double dist_so(const Eigen::Matrix2d& f) { return dist_so_impl<2>(f); }
double dist_so(const Eigen::Matrix3d& f) { return dist_so_impl<3>(f); }

Eigen::Matrix2d w1_gradient(const Eigen::Matrix2d& c, double beta, double step) {
  // derivative with respect to the independent entries (00, 11, 01=10)
  Eigen::Matrix2d g = Eigen::Matrix2d::Zero();
  for (int a = 0; a < 2; ++a) {
    Eigen::Matrix2d e = Eigen::Matrix2d::Zero();
    e(a, a) = 1.0;
    g(a, a) = (w1_raw(c + step * e, beta) - w1_raw(c - step * e, beta)) / (2.0 * step);
  }
  Eigen::Matrix2d e = Eigen::Matrix2d::Zero();
  e(0, 1) = e(1, 0) = 1.0;
  const double goff = (w1_raw(c + step * e, beta) - w1_raw(c - step * e, beta)) / (2.0 * step);
  g(0, 1) = g(1, 0) = 0.5 * goff;
  return g;
}

Eigen::Matrix3d w2_gradient(const Eigen::Matrix3d& f, double mu, double lambda, double step) {
  Eigen::Matrix3d g;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      Eigen::Matrix3d e = Eigen::Matrix3d::Zero();
      e(i, j) = 1.0;
      g(i, j) = (w2(f + step * e, mu, lambda) - w2(f - step * e, mu, lambda)) / (2.0 * step);
    }
  return g;
}

double QuadraticForm::value(const Eigen::Ref<const Eigen::MatrixXd>& a) const {
  return bilinear(a, a);
}

double QuadraticForm::bilinear(const Eigen::Ref<const Eigen::MatrixXd>& a,
                               const Eigen::Ref<const Eigen::MatrixXd>& b) const {
  const int n = order;
  if (a.rows() != n || a.cols() != n || b.rows() != n || b.cols() != n)
    throw std::invalid_argument("QuadraticForm: argument size mismatch");
  Eigen::VectorXd va(n * n), vb(n * n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      va[i * n + j] = a(i, j);
      vb[i * n + j] = b(i, j);
    }
  return va.dot(hessian * vb);
}

namespace {

// Central-difference Hessian of a density around the identity, entry pair by
// entry pair, then symmetrized.
template <int N, class Density>
QuadraticForm fd_hessian(Density&& density, double step) {
  const int m = N * N;
  QuadraticForm q;
  q.order = N;
  q.hessian = Eigen::MatrixXd::Zero(m, m);
  const Eigen::Matrix<double, N, N> id = Eigen::Matrix<double, N, N>::Identity();
  const double w0 = density(id);
  for (int p = 0; p < m; ++p) {
    Eigen::Matrix<double, N, N> ep = Eigen::Matrix<double, N, N>::Zero();
    ep(p / N, p % N) = 1.0;
    // diagonal entry
    q.hessian(p, p) =
        (density(id + step * ep) - 2.0 * w0 + density(id - step * ep)) / (step * step);
    for (int r = p + 1; r < m; ++r) {
      Eigen::Matrix<double, N, N> er = Eigen::Matrix<double, N, N>::Zero();
      er(r / N, r % N) = 1.0;
      const double v =
          (density(id + step * (ep + er)) - density(id + step * (ep - er)) -
           density(id + step * (er - ep)) + density(id - step * (ep + er))) /
          (4.0 * step * step);
      q.hessian(p, r) = v;
      q.hessian(r, p) = v;
    }
  }
  q.hessian = 0.5 * (q.hessian + q.hessian.transpose()).eval();
  return q;
}

}  // namespace

MaterialModel::MaterialModel(const MaterialParams& p) : params_(p) {
  p.validate_for_checks();
  const double beta = p.beta, mu = p.mu, lambda = p.lambda;
  q31_ = fd_hessian<2>([beta](const Eigen::Matrix2d& c) { return w1_raw(c, beta); },
                       hessian_step_);
  q32_ = fd_hessian<3>([mu, lambda](const Eigen::Matrix3d& f) { return w2(f, mu, lambda); },
                       hessian_step_);
  const Eigen::Matrix3d e33 = Eigen::Vector3d::UnitZ() * Eigen::Vector3d::UnitZ().transpose();
  a33_ = q32_.value(e33);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      Eigen::Matrix3d eij = Eigen::Matrix3d::Zero();
      eij(i, j) = 1.0;
      cross_(i, j) = q32_.bilinear(eij, e33);
    }
}

double MaterialModel::q3(int which, const Eigen::Ref<const Eigen::MatrixXd>& a) const {
  if (which == 1) return q31_.value(a);
  if (which == 2) return q32_.value(a);
  throw std::invalid_argument("q3: which must be 1 or 2");
}

RelaxedValue MaterialModel::q2_relaxed(const Eigen::Matrix3d& gtilde) const {
  const Eigen::Matrix3d e33 = Eigen::Vector3d::UnitZ() * Eigen::Vector3d::UnitZ().transpose();
  // f(c) = Q3_2(G + c e33) is an exact quadratic; recover it from three
  // evaluations at c in {-1, 0, 1}.
  const double fm = q32_.value(gtilde - e33);
  const double f0 = q32_.value(gtilde);
  const double fp = q32_.value(gtilde + e33);
  const double a = 0.5 * (fp + fm) - f0;  // = Q3_2(e33)
  const double b = 0.5 * (fp - fm);
  if (a <= 1e-14)
    throw std::runtime_error("q2_relaxed: degenerate quadratic coefficient (non-coercive W2 Hessian)");
  RelaxedValue r;
  r.c_star = -b / (2.0 * a);
  r.value = f0 - b * b / (4.0 * a);
  return r;
}

double MaterialModel::q2_value(const Eigen::Matrix3d& gtilde) const {
  // min_c [Q(G) + 2c B(G,E) + c^2 Q(E)] = Q(G) - B(G,E)^2 / Q(E)
  const double f0 = q32_.value(gtilde);
  double b = 0.0;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) b += cross_(i, j) * gtilde(i, j);
  return f0 - b * b / a33_;
}

namespace {

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(6);
  os << v;
  return os.str();
}

}  // namespace

AssumptionReport check_assumptions(const MaterialParams& p, int n_samples, std::uint64_t seed) {
  if (n_samples < 1) throw std::invalid_argument("check_assumptions: n_samples >= 1");
  p.validate_for_checks();
  AssumptionReport rep;
  Rng rng(seed);
  const double mu = p.mu, lambda = p.lambda, beta = p.beta, c1 = p.c1;

  // (A1) frame indifference of W2
  {
    double worst = 0.0;
    for (int s = 0; s < n_samples; ++s) {
      const Eigen::Matrix3d q = rng.rotation3();
      Eigen::Matrix3d f;
      if (s % 3 == 0) f = Eigen::Matrix3d::Identity() + rng.symmetric3(0.2);
      else if (s % 3 == 1) f = rng.rotation3() * (Eigen::Matrix3d::Identity() + rng.symmetric3(0.4));
      else f = Eigen::Matrix3d::Identity() + 0.5 * rng.gaussian3();
      const double wf = w2(f, mu, lambda);
      const double wqf = w2(q * f, mu, lambda);
      double r;
      if (std::isinf(wf) && std::isinf(wqf)) r = 0.0;
      else if (std::isinf(wf) || std::isinf(wqf)) r = kInfeasible;
      else r = std::abs(wqf - wf) / (1.0 + std::abs(wf));
      worst = std::max(worst, r);
    }
    rep.entries.push_back({"A1", worst < 1e-10, worst, "max |W2(QF)-W2(F)|/(1+|W2(F)|)"});
  }

  // (A2) minimum at SO(3) / at Id
  {
    double worst = std::abs(w1(Eigen::Matrix2d::Identity(), beta));
    worst = std::max(worst, std::abs(w2(Eigen::Matrix3d::Identity(), mu, lambda)));
    for (int s = 0; s < n_samples; ++s)
      worst = std::max(worst, std::abs(w2(rng.rotation3(), mu, lambda)));
    rep.entries.push_back({"A2", worst < 1e-12, worst, "max |W| at Id and sampled rotations"});
  }

  // (A3) coercivity constant of W2; the closed-form chain gives mu itself
  {
    double ratio_min = kInfeasible;
    auto probe = [&](const Eigen::Matrix3d& f) {
      const double d = dist_so(f);
      if (d * d < 1e-12) return;
      const double w = w2(f, mu, lambda);
      if (std::isinf(w)) return;  // infeasible samples trivially satisfy the bound
      ratio_min = std::min(ratio_min, w / (d * d));
    };
    for (int s = 0; s < n_samples; ++s)
      probe(rng.rotation3() * (Eigen::Matrix3d::Identity() + rng.symmetric3(0.3)));
    // volume-preserving stretches; these defeat the lambda term alone
    for (double t : {1.05, 1.2, 1.5, 2.0}) {
      Eigen::Matrix3d d = Eigen::Vector3d(t, 1.0 / t, 1.0).asDiagonal();
      probe(d);
      probe(rng.rotation3() * d);
    }
    const bool pass = ratio_min >= mu * (1.0 - 1e-9) && ratio_min > 1e-10;
    rep.entries.push_back({"A3", pass, ratio_min, "min W2(F)/dist^2(F,SO(3))"});
  }

  // (A4) membrane coercivity with the quartic penalty
  {
    double c2 = kInfeasible;
    for (int s = 0; s < n_samples; ++s) {
      Eigen::Matrix2d fp;
      if (s % 2 == 0) fp = rng.rotation2() * (Eigen::Matrix2d::Identity() + rng.symmetric2(0.4));
      else fp = Eigen::Matrix2d::Identity() + 0.5 * rng.gaussian2();
      const Eigen::Vector2d b = 0.8 * rng.normal2();
      const double d = dist_so(fp);
      if (d * d < 1e-12) continue;
      const Eigen::Matrix2d c = fp.transpose() * fp + b * b.transpose();
      const double num = w1(c, beta) + c1 * std::pow(b.squaredNorm(), 2);
      c2 = std::min(c2, num / (d * d));
    }
    rep.entries.push_back({"A4", c2 > 1e-8, c2,
                           "min [W1(F'^T F' + b(x)b) + c1|b|^4]/dist^2(F',SO(2))"});
  }

  // (A5) smoothness: FD Hessians are symmetric and step-consistent
  {
    auto h1a = fd_hessian<2>([beta](const Eigen::Matrix2d& c) { return w1_raw(c, beta); }, 1e-4);
    auto h1b = fd_hessian<2>([beta](const Eigen::Matrix2d& c) { return w1_raw(c, beta); }, 5e-5);
    auto h2a = fd_hessian<3>([mu, lambda](const Eigen::Matrix3d& f) { return w2(f, mu, lambda); }, 1e-4);
    auto h2b = fd_hessian<3>([mu, lambda](const Eigen::Matrix3d& f) { return w2(f, mu, lambda); }, 5e-5);
    const double n2 = std::max(1e-30, h2a.hessian.norm());
    const double n1 = std::max(1e-30, h1a.hessian.norm());
    double worst = (h1a.hessian - h1b.hessian).norm() / n1;
    worst = std::max(worst, (h2a.hessian - h2b.hessian).norm() / n2);
    rep.entries.push_back({"A5", worst < 1e-4, worst, "FD Hessian step-halving consistency"});
  }

  for (auto& e : rep.entries)
    e.detail += " = " + fmt(e.worst);
  return rep;
}

}  // namespace rmplate
