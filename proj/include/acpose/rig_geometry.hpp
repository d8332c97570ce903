#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <stdexcept>
#include <vector>

namespace acpose {

inline Eigen::Matrix3d skew(const Eigen::Vector3d &v) {
  Eigen::Matrix3d m;
  m << 0.0, -v.z(), v.y(), v.z(), 0.0, -v.x(), -v.y(), v.x(), 0.0;
  return m;
}

inline bool is_rotation(const Eigen::Matrix3d &R, double tol = 1e-12) {
  return (R.transpose() * R - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff() <= tol &&
         std::abs(R.determinant() - 1.0) <= tol;
}

// Extrinsics of one camera in the rig reference frame: X_rig = R * X_cam + t.
struct RigCamera {
  Eigen::Matrix3d R = Eigen::Matrix3d::Identity();
  Eigen::Vector3d t = Eigen::Vector3d::Zero();
};

struct CameraRig {
  std::vector<RigCamera> cameras;

  int size() const { return static_cast<int>(cameras.size()); }

  const RigCamera &camera(int i) const { return cameras.at(static_cast<size_t>(i)); }

  void validate(double tol = 1e-12) const {
    if (cameras.empty()) throw std::invalid_argument("rig has no cameras");
    for (const RigCamera &c : cameras) {
      if (!is_rotation(c.R, tol)) throw std::invalid_argument("rig camera rotation is not orthonormal");
      if (!c.t.allFinite()) throw std::invalid_argument("rig camera translation is not finite");
    }
  }
};

// Point match between frame k and frame k+1 plus the 2x2 linear map relating
// the infinitesimal patches around the matched points. Coordinates are
// normalized homogeneous (intrinsics removed, third entry 1). The observing
// camera may differ between the frames; same-camera tracks use camera_k ==
// camera_k1.
struct AffineCorrespondence {
  int camera_k = 0;
  int camera_k1 = 0;
  Eigen::Vector3d x = Eigen::Vector3d::UnitZ();
  Eigen::Vector3d x_prime = Eigen::Vector3d::UnitZ();
  Eigen::Matrix2d A = Eigen::Matrix2d::Identity();

  void validate(const CameraRig *rig = nullptr) const {
    if (x.z() != 1.0 || x_prime.z() != 1.0)
      throw std::invalid_argument("correspondence coordinates must have third entry exactly 1");
    if (!x.allFinite() || !x_prime.allFinite() || !A.allFinite())
      throw std::invalid_argument("correspondence contains non-finite values");
    if (rig) {
      if (camera_k < 0 || camera_k >= rig->size() || camera_k1 < 0 || camera_k1 >= rig->size())
        throw std::invalid_argument("correspondence camera index out of range for rig");
    }
  }
};

// 6-vector line: unit direction u and moment m = p x u for a point p on the
// line, both in the rig reference frame.
struct PlueckerLine {
  Eigen::Vector3d u = Eigen::Vector3d::UnitZ();
  Eigen::Vector3d m = Eigen::Vector3d::Zero();
};

enum class MotionKind { General, Planar, VerticalAligned };

// Rigid motion of the rig between frames k and k+1, as the coordinate map
// X_{k+1} = R * X_k + t.
struct PoseHypothesis {
  Eigen::Matrix3d R = Eigen::Matrix3d::Identity();
  Eigen::Vector3d t = Eigen::Vector3d::Zero();
  MotionKind kind = MotionKind::General;
};

// Roll/pitch of one frame as reported by the IMU, radians.
struct ImuAttitude {
  double roll = 0.0;
  double pitch = 0.0;
};

struct AttitudePair {
  ImuAttitude frame_k;
  ImuAttitude frame_k1;
};

// Rational rotation parameterization by q = tan(theta/2) * axis; 180 degree
// rotations are unreachable.
inline Eigen::Matrix3d cayley_to_rotation(const Eigen::Vector3d &q) {
  const double qx = q.x(), qy = q.y(), qz = q.z();
  const double s = 1.0 / (1.0 + qx * qx + qy * qy + qz * qz);
  Eigen::Matrix3d R;
  R << 1.0 + qx * qx - qy * qy - qz * qz, 2.0 * qx * qy - 2.0 * qz, 2.0 * qy + 2.0 * qx * qz,
      2.0 * qx * qy + 2.0 * qz, 1.0 - qx * qx + qy * qy - qz * qz, 2.0 * qy * qz - 2.0 * qx,
      2.0 * qx * qz - 2.0 * qy, 2.0 * qx + 2.0 * qy * qz, 1.0 - qx * qx - qy * qy + qz * qz;
  return s * R;
}

// Inverse of cayley_to_rotation via the skew part of (R - I)(R + I)^-1.
// Rotations within ~1 degree of a half turn are rejected instead of returning
// a huge parameter vector.
inline Eigen::Vector3d rotation_to_cayley(const Eigen::Matrix3d &R) {
  const Eigen::Matrix3d S = R + Eigen::Matrix3d::Identity();
  if (std::abs(S.determinant()) < 1e-4)
    throw std::domain_error("rotation too close to 180 degrees for Cayley extraction");
  const Eigen::Matrix3d K = (R - Eigen::Matrix3d::Identity()) * S.inverse();
  return Eigen::Vector3d(K(2, 1), K(0, 2), K(1, 0));
}

// Single-parameter yaw rotation used by the planar and vertical-aligned
// motion models, q_y = tan(theta/2).
inline Eigen::Matrix3d rotation_y_from_qy(double q_y) {
  const double s = 1.0 / (1.0 + q_y * q_y);
  Eigen::Matrix3d R;
  R << 1.0 - q_y * q_y, 0.0, -2.0 * q_y, 0.0, 1.0 + q_y * q_y, 0.0, 2.0 * q_y, 0.0,
      1.0 - q_y * q_y;
  return s * R;
}

// Extracts q_y from a rotation of the rotation_y_from_qy family.
inline double qy_from_rotation_y(const Eigen::Matrix3d &R) {
  const double theta = std::atan2(R(2, 0), R(0, 0));
  return std::tan(0.5 * theta);
}

inline double rotation_angle(const Eigen::Matrix3d &R) {
  const double c = std::clamp(0.5 * (R.trace() - 1.0), -1.0, 1.0);
  return std::acos(c);
}

// Gravity alignment from roll/pitch: pitch rotation about X composed with
// roll rotation about Z. Applying the result to rig coordinates yields the
// aligned frame whose Y axis is parallel to gravity.
inline Eigen::Matrix3d imu_alignment_rotation(const ImuAttitude &att) {
  const double cp = std::cos(att.pitch), sp = std::sin(att.pitch);
  const double cr = std::cos(att.roll), sr = std::sin(att.roll);
  Eigen::Matrix3d Rp, Rr;
  Rp << 1.0, 0.0, 0.0, 0.0, cp, sp, 0.0, -sp, cp;
  Rr << cr, sr, 0.0, -sr, cr, 0.0, 0.0, 0.0, 1.0;
  return Rp * Rr;
}

// Ray of a normalized observation lifted into the rig frame.
inline PlueckerLine plucker_from_observation(const CameraRig &rig, int camera_index,
                                             const Eigen::Vector3d &x) {
  if (camera_index < 0 || camera_index >= rig.size())
    throw std::invalid_argument("camera index out of range");
  if (x.z() != 1.0) throw std::invalid_argument("observation must have third entry exactly 1");
  const RigCamera &cam = rig.camera(camera_index);
  const Eigen::Vector3d p = cam.R * x;
  const double n = p.norm();
  if (n < 1e-15) throw std::invalid_argument("observation direction has zero norm");
  PlueckerLine l;
  l.u = p / n;
  l.m = cam.t.cross(l.u);
  return l;
}

}  // namespace acpose
