#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace acpose {

// Angular difference arccos((trace(R_gt R^T) - 1) / 2), in degrees. Evaluated
// through atan2 of the sine and cosine of the angle: the plain arccos floors
// out near 2e-8 rad, which would mask the noise-free solver accuracy.
inline double rotation_error_deg(const Eigen::Matrix3d &R_gt, const Eigen::Matrix3d &R) {
  const Eigen::Matrix3d M = R_gt * R.transpose();
  const double c = std::clamp(0.5 * (M.trace() - 1.0), -1.0, 1.0);
  const Eigen::Vector3d v(M(2, 1) - M(1, 2), M(0, 2) - M(2, 0), M(1, 0) - M(0, 1));
  return std::atan2(0.5 * v.norm(), c) * 180.0 / 3.14159265358979323846;
}

// Symmetric relative translation error 2 ||t_gt - t|| / (||t_gt|| + ||t||),
// dimensionless in [0, 2]. Defined as 0 when both are zero.
inline double translation_error(const Eigen::Vector3d &t_gt, const Eigen::Vector3d &t) {
  const double denom = t_gt.norm() + t.norm();
  if (denom == 0.0) return 0.0;
  return 2.0 * (t_gt - t).norm() / denom;
}

// Angle between the two translation directions, in degrees.
inline double translation_direction_error_deg(const Eigen::Vector3d &t_gt,
                                              const Eigen::Vector3d &t) {
  const double ng = t_gt.norm(), n = t.norm();
  if (ng == 0.0 || n == 0.0)
    throw std::invalid_argument("translation direction undefined for zero vectors");
  const double c = t_gt.dot(t) / (ng * n);
  const double s = t_gt.cross(t).norm() / (ng * n);
  return std::atan2(s, c) * 180.0 / 3.14159265358979323846;
}

}  // namespace acpose
