#pragma once

#include <Eigen/Dense>
#include <Eigen/SVD>

#include <cmath>
#include <optional>
#include <stdexcept>
#include <vector>

#include "acpose/random.hpp"
#include "acpose/rig_geometry.hpp"

namespace acpose {

// Simulated two-camera rig and plane-based scene following the KITTI-like
// benchmark layout: 1 m baseline, 640x480 at 400 px focal length, a ground
// plane plus random planes 10-20 m ahead, 3 m inter-frame translation.
struct SceneConfig {
  int random_planes = 50;
  int ac_count = 100;
  int ground_plane_acs = 50;
  double x_range = 5.0;  // plane anchors within +-x_range
  double y_range = 5.0;
  double z_min = 10.0;
  double z_max = 20.0;
  double image_width = 640.0;
  double image_height = 480.0;
  double focal = 400.0;
  double cx = 320.0;
  double cy = 240.0;
  double baseline = 1.0;
  // Mounting height difference between the two cameras; zero reproduces the
  // equal-height degeneracy of the single-correspondence planar solver.
  double camera_height_gap = 0.3;
  double ground_plane_y = 1.5;  // Y is down

  // How the observing cameras of a correspondence are chosen.
  enum class Pairing { Mixed, Intra, Cross };
  Pairing pairing = Pairing::Mixed;

  void validate() const {
    if (ac_count <= 0 || random_planes <= 0) throw std::invalid_argument("counts must be positive");
    if (ground_plane_acs > ac_count)
      throw std::invalid_argument("ground plane correspondences exceed total");
    if (z_max <= z_min) throw std::invalid_argument("empty depth range");
  }
};

struct MotionSpec {
  MotionKind kind = MotionKind::Planar;
  double yaw_range_deg = 10.0;  // theta ~ U(-r, r)
  double phi_range_deg = 10.0;  // planar translation direction
  double distance = 3.0;        // rho, meters
  double attitude_range_deg = 10.0;

  enum class Direction { Forward, Sideways, Random };
  Direction direction = Direction::Random;  // vertical/general translation
};

struct NoiseConfig {
  double image_noise_px = 0.0;     // gaussian std on pixel coordinates
  double nonplanar_noise_deg = 0.0;  // X/Z rotation and YZ translation tilt
  double imu_noise_deg = 0.0;      // gaussian std on reported roll/pitch
  double outlier_fraction = 0.0;

  void validate() const {
    if (image_noise_px < 0 || nonplanar_noise_deg < 0 || imu_noise_deg < 0 ||
        outlier_fraction < 0 || outlier_fraction > 1)
      throw std::invalid_argument("noise magnitudes must be non-negative");
  }
};

struct SyntheticInstance {
  CameraRig rig;
  PoseHypothesis pose_gt;           // the actual generated motion
  AttitudePair attitudes_true;
  AttitudePair attitudes_measured;  // handed to the vertical solver
  std::vector<AffineCorrespondence> acs;
  std::vector<uint8_t> inlier;      // ground-truth labels
  // Plane behind each correspondence as (unit normal, offset); lets tests
  // difference the exact plane-induced warp against the stored affine part.
  std::vector<Eigen::Vector4d> ac_planes;
};

namespace synth_detail {

constexpr double kPi = 3.14159265358979323846;
constexpr double kDeg = kPi / 180.0;

struct Plane {
  Eigen::Vector3d n;       // unit normal, frame-k rig coordinates
  double d;                // n . X = d
  Eigen::Vector3d anchor;  // scene point the plane was seeded from
  Eigen::Vector3d u, v;    // in-plane orthonormal directions
};

inline Plane make_plane(const Eigen::Vector3d &normal, const Eigen::Vector3d &anchor) {
  Plane p;
  p.n = normal.normalized();
  p.anchor = anchor;
  p.d = p.n.dot(anchor);
  p.u = p.n.unitOrthogonal();
  p.v = p.n.cross(p.u);
  return p;
}

inline Eigen::Matrix3d rot_x(double a) {
  Eigen::Matrix3d m;
  m << 1, 0, 0, 0, std::cos(a), -std::sin(a), 0, std::sin(a), std::cos(a);
  return m;
}

inline Eigen::Matrix3d rot_z(double a) {
  Eigen::Matrix3d m;
  m << std::cos(a), -std::sin(a), 0, std::sin(a), std::cos(a), 0, 0, 0, 1;
  return m;
}

struct Projection {
  Eigen::Vector2d px;
  double depth;
};

// Pinhole projection into pixel coordinates of one rig camera at one frame.
inline std::optional<Projection> project(const SceneConfig &scene, const RigCamera &cam,
                                         const Eigen::Matrix3d &R_frame,
                                         const Eigen::Vector3d &t_frame, const Eigen::Vector3d &X) {
  const Eigen::Vector3d Xf = R_frame * X + t_frame;         // rig coords at that frame
  const Eigen::Vector3d Xc = cam.R.transpose() * (Xf - cam.t);
  if (Xc.z() < 0.5) return std::nullopt;
  Projection p;
  p.depth = Xc.z();
  p.px = Eigen::Vector2d(scene.focal * Xc.x() / Xc.z() + scene.cx,
                         scene.focal * Xc.y() / Xc.z() + scene.cy);
  if (p.px.x() < 0.0 || p.px.x() > scene.image_width || p.px.y() < 0.0 ||
      p.px.y() > scene.image_height)
    return std::nullopt;
  return p;
}

inline Eigen::Vector3d normalized_from_pixel(const SceneConfig &scene, const Eigen::Vector2d &px) {
  return {(px.x() - scene.cx) / scene.focal, (px.y() - scene.cy) / scene.focal, 1.0};
}

// Uniform draw from the in-plane patch around the plane anchor; visibility
// is enforced by the projection checks downstream.
inline Eigen::Vector3d sample_point_on_plane(const SceneConfig &scene, const Plane &plane,
                                             Rng &rng) {
  const double r = 0.5 * (scene.x_range + scene.y_range);
  return plane.anchor + rng.uniform(-r, r) * plane.u + rng.uniform(-r, r) * plane.v;
}

// Direct linear transform with Hartley normalization from exactly four
// correspondences in normalized image coordinates.
inline std::optional<Eigen::Matrix3d> homography_dlt(const std::vector<Eigen::Vector3d> &a,
                                                     const std::vector<Eigen::Vector3d> &b) {
  auto conditioner = [](const std::vector<Eigen::Vector3d> &pts) {
    Eigen::Vector2d c = Eigen::Vector2d::Zero();
    for (const auto &p : pts) c += p.head<2>();
    c /= static_cast<double>(pts.size());
    double mean_dist = 0.0;
    for (const auto &p : pts) mean_dist += (p.head<2>() - c).norm();
    mean_dist /= static_cast<double>(pts.size());
    const double s = mean_dist > 1e-12 ? std::sqrt(2.0) / mean_dist : 1.0;
    Eigen::Matrix3d T;
    T << s, 0, -s * c.x(), 0, s, -s * c.y(), 0, 0, 1;
    return T;
  };
  const Eigen::Matrix3d Ta = conditioner(a), Tb = conditioner(b);

  Eigen::Matrix<double, 8, 9> D;
  for (size_t i = 0; i < 4; ++i) {
    const Eigen::Vector3d p = Ta * a[i];
    const Eigen::Vector3d q = Tb * b[i];
    D.row(2 * i) << -p.x(), -p.y(), -1, 0, 0, 0, q.x() * p.x(), q.x() * p.y(), q.x();
    D.row(2 * i + 1) << 0, 0, 0, -p.x(), -p.y(), -1, q.y() * p.x(), q.y() * p.y(), q.y();
  }
  Eigen::JacobiSVD<Eigen::Matrix<double, 8, 9>> svd(D, Eigen::ComputeFullV);
  const Eigen::Matrix<double, 9, 1> h = svd.matrixV().col(8);
  Eigen::Matrix3d Hn;
  Hn << h(0), h(1), h(2), h(3), h(4), h(5), h(6), h(7), h(8);
  const Eigen::Matrix3d H = Tb.inverse() * Hn * Ta;
  if (!H.allFinite() || std::abs(H(2, 2)) < 1e-15) return std::nullopt;
  return H;
}

// First-order approximation of the homography at the point pair.
inline Eigen::Matrix2d affine_from_homography(const Eigen::Matrix3d &H, const Eigen::Vector3d &x,
                                              const Eigen::Vector3d &x_prime) {
  const double w = H.row(2).dot(x);
  Eigen::Matrix2d A;
  for (int r = 0; r < 2; ++r)
    for (int c = 0; c < 2; ++c) A(r, c) = (H(r, c) - x_prime(r) * H(2, c)) / w;
  return A;
}

inline bool collinear_px(const Eigen::Vector2d &a, const Eigen::Vector2d &b,
                         const Eigen::Vector2d &c) {
  const Eigen::Vector2d u = b - a, v = c - a;
  return std::abs(u.x() * v.y() - u.y() * v.x()) < 2000.0;  // twice the triangle area, px^2
}

}  // namespace synth_detail

// Motion with the reported roll/pitch attached. The pose maps frame-k rig
// coordinates to frame-k+1 rig coordinates.
struct GeneratedMotion {
  PoseHypothesis pose;
  AttitudePair attitudes;
};

inline GeneratedMotion sample_motion(const MotionSpec &motion, const NoiseConfig &noise, Rng &rng) {
  using namespace synth_detail;
  GeneratedMotion out;
  const double yaw = rng.uniform(-motion.yaw_range_deg, motion.yaw_range_deg) * kDeg;

  if (motion.kind == MotionKind::Planar) {
    const double phi = rng.uniform(-motion.phi_range_deg, motion.phi_range_deg) * kDeg;
    out.pose.kind = MotionKind::Planar;
    out.pose.R = rotation_y_from_qy(std::tan(0.5 * yaw));
    out.pose.t = motion.distance * Eigen::Vector3d(std::sin(phi), 0.0, -std::cos(phi));
    if (noise.nonplanar_noise_deg > 0.0) {
      // Out-of-plane disturbance: X and Z rotation components plus a tilt of
      // the translation inside the YZ plane.
      const double ax = noise.nonplanar_noise_deg * kDeg * rng.normal();
      const double az = noise.nonplanar_noise_deg * kDeg * rng.normal();
      const double at = noise.nonplanar_noise_deg * kDeg * rng.normal();
      out.pose.R = rot_x(ax) * rot_z(az) * out.pose.R;
      out.pose.t = rot_x(at) * out.pose.t;
      out.pose.kind = MotionKind::General;
    }
    return out;
  }

  // 4DOF (and general) motion: yaw about the gravity axis between two frames
  // with independently drawn roll/pitch.
  const double r = motion.attitude_range_deg * kDeg;
  out.attitudes.frame_k = {rng.uniform(-r, r), rng.uniform(-r, r)};
  out.attitudes.frame_k1 = {rng.uniform(-r, r), rng.uniform(-r, r)};
  const Eigen::Matrix3d R_imu = imu_alignment_rotation(out.attitudes.frame_k);
  const Eigen::Matrix3d R_imu1 = imu_alignment_rotation(out.attitudes.frame_k1);

  Eigen::Vector3d dir;
  switch (motion.direction) {
    case MotionSpec::Direction::Forward: dir = Eigen::Vector3d(0, 0, -1); break;
    case MotionSpec::Direction::Sideways: dir = Eigen::Vector3d(1, 0, 0); break;
    case MotionSpec::Direction::Random: {
      do {
        dir = Eigen::Vector3d(rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1));
      } while (dir.norm() < 1e-3);
      dir.normalize();
      break;
    }
  }
  out.pose.kind = MotionKind::VerticalAligned;
  out.pose.R = R_imu1.transpose() * rotation_y_from_qy(std::tan(0.5 * yaw)) * R_imu;
  out.pose.t = R_imu1.transpose() * (motion.distance * dir);
  return out;
}

// One synthetic trial: rig, motion, scene planes and the correspondence set
// with ground-truth inlier labels. For every correspondence a random plane
// point is reprojected into both frames; the affine part is the first-order
// approximation of a homography estimated from four extra coplanar points
// that carry the same pixel noise, so noise enters the affine component in a
// geometrically consistent way.
inline SyntheticInstance generate_instance(const SceneConfig &scene, const MotionSpec &motion,
                                           const NoiseConfig &noise, uint64_t seed) {
  using namespace synth_detail;
  scene.validate();
  noise.validate();
  Rng rng(seed);

  SyntheticInstance inst;
  inst.rig.cameras.resize(2);
  inst.rig.cameras[0].t =
      Eigen::Vector3d(-0.5 * scene.baseline, -0.5 * scene.camera_height_gap, 0.0);
  inst.rig.cameras[1].t =
      Eigen::Vector3d(0.5 * scene.baseline, 0.5 * scene.camera_height_gap, 0.0);

  const GeneratedMotion gm = sample_motion(motion, noise, rng);
  inst.pose_gt = gm.pose;
  inst.attitudes_true = gm.attitudes;
  inst.attitudes_measured = gm.attitudes;
  if (noise.imu_noise_deg > 0.0) {
    inst.attitudes_measured.frame_k.roll += noise.imu_noise_deg * kDeg * rng.normal();
    inst.attitudes_measured.frame_k.pitch += noise.imu_noise_deg * kDeg * rng.normal();
    inst.attitudes_measured.frame_k1.roll += noise.imu_noise_deg * kDeg * rng.normal();
    inst.attitudes_measured.frame_k1.pitch += noise.imu_noise_deg * kDeg * rng.normal();
  }

  // Ground plane plus one plane per remaining correspondence slot. Ground
  // correspondences live ahead of the rig at road distance. Random planes
  // must keep a sane clearance from the rig: a plane slicing next to a
  // camera center induces a near-degenerate homography whose affine part is
  // pure noise.
  std::vector<Plane> planes;
  planes.push_back(make_plane(Eigen::Vector3d(0, 1, 0),
                              Eigen::Vector3d(0.0, scene.ground_plane_y,
                                              0.5 * (scene.z_min + scene.z_max))));
  auto fresh_plane = [&](Rng &r) {
    for (;;) {
      Eigen::Vector3d n;
      do {
        n = Eigen::Vector3d(r.uniform(-1, 1), r.uniform(-1, 1), r.uniform(-1, 1));
      } while (n.norm() < 1e-3);
      const Eigen::Vector3d anchor(r.uniform(-scene.x_range, scene.x_range),
                                   r.uniform(-scene.y_range, scene.y_range),
                                   r.uniform(scene.z_min, scene.z_max));
      const Plane pl = make_plane(n, anchor);
      if (std::abs(pl.d) >= 0.4 * scene.z_min) return pl;  // clearance from the rig
    }
  };
  for (int i = 0; i < scene.random_planes; ++i) planes.push_back(fresh_plane(rng));

  const int n_outliers = static_cast<int>(std::floor(noise.outlier_fraction * scene.ac_count));

  for (int i = 0; i < scene.ac_count; ++i) {
    const bool on_ground = i < scene.ground_plane_acs;
    Plane plane = on_ground ? planes[0]
                            : planes[1 + (i - scene.ground_plane_acs) % scene.random_planes];

    int cam_k = 0, cam_k1 = 0;
    switch (scene.pairing) {
      case SceneConfig::Pairing::Mixed:
        cam_k = rng.below(2);
        cam_k1 = rng.below(2);
        break;
      case SceneConfig::Pairing::Intra:
        cam_k = cam_k1 = rng.below(2);
        break;
      case SceneConfig::Pairing::Cross:
        cam_k = rng.below(2);
        cam_k1 = 1 - cam_k;
        break;
    }
    const RigCamera &ca = inst.rig.camera(cam_k);
    const RigCamera &cb = inst.rig.camera(cam_k1);

    const bool is_outlier = i < n_outliers;

    AffineCorrespondence ac;
    ac.camera_k = cam_k;
    ac.camera_k1 = cam_k1;
    bool built = false;
    for (int attempt = 0; attempt < 2000 && !built; ++attempt) {
      // A steep random plane may share almost no visible patch between the
      // two frames; swap it for a fresh one rather than starving.
      if (!on_ground && attempt > 0 && attempt % 100 == 0) plane = fresh_plane(rng);
      const Eigen::Vector3d X = sample_point_on_plane(scene, plane, rng);
      const auto pk = project(scene, ca, Eigen::Matrix3d::Identity(), Eigen::Vector3d::Zero(), X);
      if (!pk) continue;
      const auto pk1 = project(scene, cb, inst.pose_gt.R, inst.pose_gt.t, X);
      if (!pk1) continue;

      Eigen::Vector2d px_k = pk->px, px_k1 = pk1->px;
      if (noise.image_noise_px > 0.0) {
        px_k += noise.image_noise_px * Eigen::Vector2d(rng.normal(), rng.normal());
        px_k1 += noise.image_noise_px * Eigen::Vector2d(rng.normal(), rng.normal());
      }
      ac.x = normalized_from_pixel(scene, px_k);
      ac.x_prime = normalized_from_pixel(scene, px_k1);

      // Four extra coplanar support points for the homography, one per
      // image quadrant around the point so the point sits inside their hull
      // with a wide spread: the affine part is a derivative of the fitted
      // homography and its noise scales inversely with that spread.
      std::vector<Eigen::Vector3d> ha, hb;
      double radius_px = 0.45 * std::min(scene.image_width, scene.image_height);
      for (int ring = 0; ring < 4 && ha.size() < 4; ++ring, radius_px *= 0.55) {
        ha.clear();
        hb.clear();
        for (int quadrant = 0; quadrant < 4; ++quadrant) {
          for (int guard = 0; guard < 60; ++guard) {
            const double ang = (quadrant + rng.uniform(0.15, 0.85)) * 0.5 * kPi;
            const double r = radius_px * rng.uniform(0.7, 1.0);
            const Eigen::Vector2d target = pk->px + r * Eigen::Vector2d(std::cos(ang), std::sin(ang));
            if (target.x() < 0.0 || target.x() > scene.image_width || target.y() < 0.0 ||
                target.y() > scene.image_height)
              continue;
            const Eigen::Vector3d dir = ca.R * normalized_from_pixel(scene, target);
            const double denom = plane.n.dot(dir);
            if (std::abs(denom) < 1e-9) continue;
            const double depth = (plane.d - plane.n.dot(ca.t)) / denom;
            if (depth < 1.0 || depth > 10.0 * scene.z_max) continue;
            const Eigen::Vector3d S = ca.t + depth * dir;
            const auto sk1 = project(scene, cb, inst.pose_gt.R, inst.pose_gt.t, S);
            if (!sk1) continue;
            Eigen::Vector2d a = target, b = sk1->px;
            if (noise.image_noise_px > 0.0) {
              a += noise.image_noise_px * Eigen::Vector2d(rng.normal(), rng.normal());
              b += noise.image_noise_px * Eigen::Vector2d(rng.normal(), rng.normal());
            }
            ha.push_back(normalized_from_pixel(scene, a));
            hb.push_back(normalized_from_pixel(scene, b));
            break;
          }
        }
      }
      if (ha.size() < 4) continue;
      const auto H = homography_dlt(ha, hb);
      if (!H) continue;
      ac.A = affine_from_homography(*H, ac.x, ac.x_prime);
      if (!ac.A.allFinite()) continue;
      built = true;
    }
    if (!built) throw std::runtime_error("failed to synthesize a visible correspondence");

    if (is_outlier) {
      // Gross mismatch: the frame-k+1 point comes from an unrelated scene
      // point and the affine part from an unrelated similarity.
      bool corrupted = false;
      for (int attempt = 0; attempt < 400 && !corrupted; ++attempt) {
        const Plane &other = planes[static_cast<size_t>(rng.below(static_cast<int>(planes.size())))];
        const Eigen::Vector3d X = sample_point_on_plane(scene, other, rng);
        const auto pk1 = project(scene, cb, inst.pose_gt.R, inst.pose_gt.t, X);
        if (!pk1) continue;
        Eigen::Vector2d px = pk1->px;
        if (noise.image_noise_px > 0.0)
          px += noise.image_noise_px * Eigen::Vector2d(rng.normal(), rng.normal());
        ac.x_prime = normalized_from_pixel(scene, px);
        const double s = rng.uniform(0.7, 1.3), a = rng.uniform(-kPi, kPi);
        ac.A << s * std::cos(a), -s * std::sin(a), s * std::sin(a), s * std::cos(a);
        corrupted = true;
      }
      if (!corrupted) throw std::runtime_error("failed to synthesize an outlier");
    }

    inst.acs.push_back(ac);
    inst.inlier.push_back(is_outlier ? 0 : 1);
    inst.ac_planes.emplace_back(plane.n.x(), plane.n.y(), plane.n.z(), plane.d);
  }
  return inst;
}

}  // namespace acpose
