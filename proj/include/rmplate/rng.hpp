#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <random>

namespace rmplate {

// Deterministic sampling helpers. distributions from <random> are
// implementation-defined, so uniform/normal are generated by hand to keep
// outputs reproducible across standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : eng_(seed) {}

  double uniform01() {
    // 53 random bits -> [0,1)
    return double(eng_() >> 11) * 0x1.0p-53;
  }

  double uniform(double a, double b) { return a + (b - a) * uniform01(); }

  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u1 = 0.0;
    do { u1 = uniform01(); } while (u1 <= 0.0);
    double u2 = uniform01();
    double r = std::sqrt(-2.0 * std::log(u1));
    double a = 2.0 * M_PI * u2;
    spare_ = r * std::sin(a);
    have_spare_ = true;
    return r * std::cos(a);
  }

  Eigen::Vector2d normal2() { return {normal(), normal()}; }
  Eigen::Vector3d normal3() { return {normal(), normal(), normal()}; }

  Eigen::Matrix2d gaussian2() {
    Eigen::Matrix2d m;
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j) m(i, j) = normal();
    return m;
  }

  Eigen::Matrix3d gaussian3() {
    Eigen::Matrix3d m;
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) m(i, j) = normal();
    return m;
  }

  Eigen::Matrix2d symmetric2(double scale = 1.0) {
    Eigen::Matrix2d g = gaussian2();
    return scale * 0.5 * (g + g.transpose());
  }

  Eigen::Matrix3d symmetric3(double scale = 1.0) {
    Eigen::Matrix3d g = gaussian3();
    return scale * 0.5 * (g + g.transpose());
  }

  Eigen::Matrix2d rotation2() {
    double t = uniform(-M_PI, M_PI);
    Eigen::Matrix2d q;
    q << std::cos(t), -std::sin(t), std::sin(t), std::cos(t);
    return q;
  }

  Eigen::Matrix3d rotation3() {
    // random unit quaternion
    double q0, q1, q2, q3, n;
    do {
      q0 = normal(); q1 = normal(); q2 = normal(); q3 = normal();
      n = std::sqrt(q0 * q0 + q1 * q1 + q2 * q2 + q3 * q3);
    } while (n < 1e-12);
    q0 /= n; q1 /= n; q2 /= n; q3 /= n;
    return Eigen::Quaterniond(q0, q1, q2, q3).toRotationMatrix();
  }

 private:
  std::mt19937_64 eng_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace rmplate
