#pragma once

#include <string>
#include <vector>

#include "rmplate/fields.hpp"
#include "rmplate/material.hpp"

namespace rmplate {

// Orthogonal polar factor from the singular value decomposition, with the
// determinant correction flipping the smallest singular direction.
Eigen::Matrix2d nearest_rotation(const Eigen::Matrix2d& f);
Eigen::Matrix3d nearest_rotation(const Eigen::Matrix3d& f);

// Projection onto the rotation group inside a tubular neighbourhood of
// radius delta; Id outside it.
Eigen::Matrix2d pi_tilde(const Eigen::Matrix2d& m, double delta = 0.5);
Eigen::Matrix3d pi_tilde(const Eigen::Matrix3d& m, double delta = 0.5);

// Compactly supported bump kernel exp(-1/(1-t^2)) of radius `radius`,
// discretely normalized; boundary handled by reflection about the edge
// nodes. Requires radius >= 2 grid spacings.
class Mollifier2d {
 public:
  Mollifier2d(const Grid2& g, double radius);
  // convolve a scalar nodal array
  std::vector<double> apply(const std::vector<double>& f) const;

 private:
  Grid2 grid_;
  int mx_ = 0, my_ = 0;
  std::vector<double> w_;  // (2mx+1) x (2my+1)
};

struct MollifiedRotation2d {
  Mat2Field qtilde;  // mollified x3-averaged in-plane gradient
  Mat2Field q;       // its projection onto SO(2)
};

MollifiedRotation2d mollified_rotation_field_2d(const DeformationField3& y, double h,
                                                double delta = 0.5);

// per-x3-layer mollified and projected in-plane gradient
Mat2Field3 per_slice_rotation_field(const DeformationField3& y, double h, double delta = 0.5);

// projection of the area mean of a matrix field
Eigen::Matrix2d constant_rotation(const Mat2Field& qtilde, double delta = 0.5);

// In-plane normalization rotation from the averaged gradient: the angle
// with cot(theta) = int(dy1/dx1 + dy2/dx2) / int(dy2/dx1 - dy1/dx2), chosen
// so the transformed field has a symmetric averaged in-plane gradient.
struct NormalizationRotation {
  Eigen::Matrix2d b = Eigen::Matrix2d::Identity();
  bool degenerate = false;
};

NormalizationRotation normalization_rotation(const DeformationField3& ybar);

struct RigidityReport {
  double h = 0.0;
  double e1 = 0.0;     // int dist^2(grad_h y, SO(3))
  double e2 = 0.0;     // int dist^2(grad'y', SO(2))
  double r1 = 0.0;     // |grad_h y - R_h|^2 / E1
  double q1 = 0.0;     // |avg grad'y' - Q_h|^2 / E2
  double t1 = 0.0;     // |grad'y' - T_h|^2 / E2
  double grad_q = 0.0; // h^2 |grad' Qtilde|^2 / E2
  bool exact_rigid = false;
};

RigidityReport rigidity_report(const DeformationField3& y, double h);

void write_rigidity_csv(const std::string& path, const std::vector<RigidityReport>& rows,
                        const std::string& trailer = "");

}  // namespace rmplate
