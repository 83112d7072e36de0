#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

namespace rmplate {

// +infinity sentinel for infeasible states (det F <= 0, violated boundary
// condition). IEEE inf poisons sums and makes line searches reject the step.
inline constexpr double kInfeasible = std::numeric_limits<double>::infinity();

struct MaterialParams {
  double beta = 1.0;     // membrane modulus of W1
  double mu = 1.0;       // shear modulus of W2
  double lambda = 1.0;   // volumetric modulus of W2
  double c1 = 1.0;       // weight of the |grad' y3|^4 term
  double l = 0.0;        // second-gradient weight (only the second_grad variant)
  double epsilon = 1.0;  // exponent of the h^{-epsilon} regularizer
  double sigma = 5.0;    // energy-scaling exponent

  // Pipeline contract: moduli strictly positive, epsilon > 0, sigma >= 4.
  void validate() const;
  // Relaxed variant used by the assumption checker, which deliberately
  // accepts degenerate moduli so their failures can be reported.
  void validate_for_checks() const;
};

// Membrane density W1(C') = beta [tr(C'^2) - 2 tr(C') + 2].
// Input must be symmetric with eigenvalues >= -1e-12 (stand-in for the
// admissible set; every C' arising in the pipeline is F'^T F' + b (x) b and
// qualifies automatically). Violations throw std::domain_error.
double w1(const Eigen::Matrix2d& cprime, double beta);

// Unchecked trace formula, defined for arbitrary 2x2 arguments. Used for
// finite-difference probing where single-entry perturbations are asymmetric.
double w1_raw(const Eigen::Matrix2d& cprime, double beta);

// Bulk density W2(F) = mu (tr(F^T F) - 3) - mu ln det(F^T F)
//                      + lambda (det(F^T F) - 1)^2, +inf when det F <= 0.
double w2(const Eigen::Matrix3d& f, double mu, double lambda);

// Frobenius distance to SO(n) from singular values, with the reflection
// branch (sigma_n + 1)^2 when det < 0.
double dist_so(const Eigen::Matrix2d& f);
double dist_so(const Eigen::Matrix3d& f);

// Density first derivatives by central differences on the density with a
// fixed step. For w1 the derivative is taken with respect to the three
// independent entries of the symmetric argument and returned as the
// symmetric matrix S with dW1 : dC = sum_ab S_ab dC_ab.
Eigen::Matrix2d w1_gradient(const Eigen::Matrix2d& cprime, double beta, double step);
Eigen::Matrix3d w2_gradient(const Eigen::Matrix3d& f, double mu, double lambda, double step);

// Quadratic form Q(A) = d^2 W(Id)/dA^2 (A,A), stored as an n^2 x n^2
// symmetric matrix acting on vectorized n x n arguments.
struct QuadraticForm {
  int order = 0;               // n (2 or 3)
  Eigen::MatrixXd hessian;     // n^2 x n^2, symmetric

  double value(const Eigen::Ref<const Eigen::MatrixXd>& a) const;
  double bilinear(const Eigen::Ref<const Eigen::MatrixXd>& a,
                  const Eigen::Ref<const Eigen::MatrixXd>& b) const;
};

struct RelaxedValue {
  double value = 0.0;   // min_c Q3_2(Gtilde + c e3 (x) e3)
  double c_star = 0.0;  // the minimizer L(Gtilde)
};

// Caches the finite-difference Hessians of W1 and W2 at the identity and the
// coefficients of the relaxed form Q2_2. Construction is the only non-const
// step; afterwards all evaluations are pure and reentrant.
class MaterialModel {
 public:
  explicit MaterialModel(const MaterialParams& p);

  const MaterialParams& params() const { return params_; }

  // Q3_i(A); which = 1 takes 2x2 arguments, which = 2 takes 3x3.
  double q3(int which, const Eigen::Ref<const Eigen::MatrixXd>& a) const;

  // min over c of Q3_2(Gtilde + c e3(x)e3), by exact minimization of the
  // 1D quadratic through c in {-1, 0, 1}. Throws on a degenerate
  // (non-coercive) quadratic coefficient.
  RelaxedValue q2_relaxed(const Eigen::Matrix3d& gtilde) const;

  // value-only fast path for quadrature loops
  double q2_value(const Eigen::Matrix3d& gtilde) const;

  const QuadraticForm& form1() const { return q31_; }
  const QuadraticForm& form2() const { return q32_; }

  double density_fd_step() const { return density_step_; }
  double hessian_fd_step() const { return hessian_step_; }

 private:
  MaterialParams params_;
  QuadraticForm q31_;  // of W1 around C' = Id
  QuadraticForm q32_;  // of W2 around F = Id
  double a33_ = 0.0;   // Q3_2(e3 (x) e3)
  Eigen::Matrix3d cross_;  // cross_(i,j) = B2(e_ij, e3 (x) e3)
  double hessian_step_ = 1e-4;
  double density_step_ = 1e-6;
};

struct AssumptionEntry {
  std::string name;
  bool pass = false;
  double worst = 0.0;  // worst-case residual or empirical constant
  std::string detail;
};

struct AssumptionReport {
  std::vector<AssumptionEntry> entries;
  bool all_pass() const {
    for (const auto& e : entries)
      if (!e.pass) return false;
    return true;
  }
};

// Empirical verification of (A1)-(A5) on n_samples random matrices.
// Failures are report entries, not exceptions.
AssumptionReport check_assumptions(const MaterialParams& p, int n_samples, std::uint64_t seed);

}  // namespace rmplate
