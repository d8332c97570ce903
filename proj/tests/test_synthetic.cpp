#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "acpose/constraints.hpp"
#include "acpose/metrics.hpp"
#include "acpose/synthetic.hpp"

using namespace acpose;

namespace {
constexpr double kDeg = 3.14159265358979323846 / 180.0;

// Exact plane-induced warp between the two observing frames, evaluated by
// geometry alone: cast the frame-k ray, intersect the plane, reproject at
// frame k+1. Differencing this map is the oracle for the stored affine part.
Eigen::Vector2d plane_warp(const SyntheticInstance &inst, size_t ac_index,
                           const Eigen::Vector2d &xy) {
  const AffineCorrespondence &ac = inst.acs[ac_index];
  const RigCamera &a = inst.rig.camera(ac.camera_k);
  const RigCamera &b = inst.rig.camera(ac.camera_k1);
  const Eigen::Vector4d pl = inst.ac_planes[ac_index];
  const Eigen::Vector3d n = pl.head<3>();

  const Eigen::Vector3d dir = a.R * Eigen::Vector3d(xy.x(), xy.y(), 1.0);
  const double s = (pl(3) - n.dot(a.t)) / n.dot(dir);
  const Eigen::Vector3d X = a.t + s * dir;
  const Eigen::Vector3d X1 = inst.pose_gt.R * X + inst.pose_gt.t;
  const Eigen::Vector3d xc = b.R.transpose() * (X1 - b.t);
  return {xc.x() / xc.z(), xc.y() / xc.z()};
}
}  // namespace

TEST_CASE("noise-free instances satisfy every constraint at ground truth") {
  SceneConfig scene;
  scene.ac_count = 30;
  scene.ground_plane_acs = 15;
  for (uint64_t seed : {1ULL, 2ULL, 3ULL}) {
    for (MotionKind kind : {MotionKind::Planar, MotionKind::VerticalAligned}) {
      MotionSpec motion;
      motion.kind = kind;
      const SyntheticInstance inst = generate_instance(scene, motion, NoiseConfig{}, seed);
      REQUIRE(inst.acs.size() == 30);
      const std::vector<double> r = stacked_6dof_residuals(inst.rig, inst.acs, inst.pose_gt);
      for (double v : r) REQUIRE(std::abs(v) < 1e-8);
    }
  }
}

TEST_CASE("stored affine parts match the differenced plane warp") {
  SceneConfig scene;
  scene.ac_count = 25;
  scene.ground_plane_acs = 10;
  MotionSpec motion;
  motion.kind = MotionKind::Planar;
  const SyntheticInstance inst = generate_instance(scene, motion, NoiseConfig{}, 7);

  const double h = 1e-6;
  for (size_t i = 0; i < inst.acs.size(); ++i) {
    const Eigen::Vector2d x0 = inst.acs[i].x.head<2>();
    Eigen::Matrix2d A_fd;
    for (int c = 0; c < 2; ++c) {
      Eigen::Vector2d hi = x0, lo = x0;
      hi(c) += h;
      lo(c) -= h;
      A_fd.col(c) = (plane_warp(inst, i, hi) - plane_warp(inst, i, lo)) / (2.0 * h);
    }
    REQUIRE((A_fd - inst.acs[i].A).cwiseAbs().maxCoeff() < 1e-6);
  }
}

TEST_CASE("instances are bit-identical for a fixed seed") {
  SceneConfig scene;
  scene.ac_count = 12;
  scene.ground_plane_acs = 6;
  MotionSpec motion;
  motion.kind = MotionKind::VerticalAligned;
  NoiseConfig noise;
  noise.image_noise_px = 0.7;
  noise.imu_noise_deg = 0.3;
  noise.outlier_fraction = 0.25;

  const SyntheticInstance a = generate_instance(scene, motion, noise, 99);
  const SyntheticInstance b = generate_instance(scene, motion, noise, 99);
  REQUIRE(a.acs.size() == b.acs.size());
  REQUIRE(a.pose_gt.R == b.pose_gt.R);
  REQUIRE(a.pose_gt.t == b.pose_gt.t);
  for (size_t i = 0; i < a.acs.size(); ++i) {
    REQUIRE(a.acs[i].x == b.acs[i].x);
    REQUIRE(a.acs[i].x_prime == b.acs[i].x_prime);
    REQUIRE(a.acs[i].A == b.acs[i].A);
    REQUIRE(a.inlier[i] == b.inlier[i]);
  }

  const SyntheticInstance c = generate_instance(scene, motion, noise, 100);
  REQUIRE(a.pose_gt.t != c.pose_gt.t);
}

TEST_CASE("outlier labels are honest") {
  SceneConfig scene;
  scene.ac_count = 40;
  scene.ground_plane_acs = 20;
  MotionSpec motion;
  NoiseConfig noise;
  noise.outlier_fraction = 0.3;
  const SyntheticInstance inst = generate_instance(scene, motion, noise, 5);

  int outliers = 0;
  for (size_t i = 0; i < inst.acs.size(); ++i) {
    const std::array<AffineCorrespondence, 1> one{inst.acs[i]};
    const std::vector<double> r = stacked_6dof_residuals(inst.rig, one, inst.pose_gt);
    double worst = 0.0;
    for (double v : r) worst = std::max(worst, std::abs(v));
    if (!inst.inlier[i]) {
      ++outliers;
      REQUIRE(worst > 1e-6);
    } else {
      REQUIRE(worst < 1e-8);
    }
  }
  REQUIRE(outliers == 12);
}

TEST_CASE("imu noise perturbs only the reported attitudes") {
  SceneConfig scene;
  scene.ac_count = 4;
  scene.ground_plane_acs = 2;
  MotionSpec motion;
  motion.kind = MotionKind::VerticalAligned;
  NoiseConfig noise;
  noise.imu_noise_deg = 0.5;
  const SyntheticInstance inst = generate_instance(scene, motion, noise, 11);
  REQUIRE(inst.attitudes_true.frame_k.roll != inst.attitudes_measured.frame_k.roll);
  // Ground truth motion still decomposes through the true attitudes.
  const Eigen::Matrix3d R_imu = imu_alignment_rotation(inst.attitudes_true.frame_k);
  const Eigen::Matrix3d R_imu1 = imu_alignment_rotation(inst.attitudes_true.frame_k1);
  const Eigen::Matrix3d Ry = R_imu1 * inst.pose_gt.R * R_imu.transpose();
  REQUIRE(std::abs(Ry(1, 1) - 1.0) < 1e-12);
  REQUIRE(std::abs(Ry(0, 1)) < 1e-12);
  REQUIRE(std::abs(Ry(1, 0)) < 1e-12);
}

TEST_CASE("rotation error metric") {
  const Eigen::Matrix3d I = Eigen::Matrix3d::Identity();
  REQUIRE(rotation_error_deg(I, I) == 0.0);

  const Eigen::Matrix3d R5 = rotation_y_from_qy(std::tan(2.5 * kDeg));
  REQUIRE(std::abs(rotation_error_deg(R5, I) - 5.0) < 1e-9);
  const Eigen::Matrix3d Rg = cayley_to_rotation({0.1, -0.2, 0.3});
  REQUIRE(std::abs(rotation_error_deg(Rg, Rg * R5) - 5.0) < 1e-9);
  REQUIRE(rotation_error_deg(Rg, R5) == Catch::Approx(rotation_error_deg(R5, Rg)));
}

TEST_CASE("translation error metric") {
  const Eigen::Vector3d t(1.0, -2.0, 0.5);
  REQUIRE(translation_error(t, t) == 0.0);
  REQUIRE(translation_error(t, -t) == 2.0);
  REQUIRE(translation_error(t, 2.0 * t) == Catch::Approx(2.0 / 3.0));
  REQUIRE(translation_error(Eigen::Vector3d::Zero(), Eigen::Vector3d::Zero()) == 0.0);
  // Scale symmetry 2|1-s|/(1+s).
  for (double s : {0.5, 1.0, 2.0}) {
    REQUIRE(translation_error(t, s * t) ==
            Catch::Approx(2.0 * std::abs(1.0 - s) / (1.0 + s)).margin(1e-12));
  }
}

TEST_CASE("translation direction error metric") {
  const Eigen::Vector3d t(0.0, 0.0, -3.0);
  REQUIRE(translation_direction_error_deg(t, 2.0 * t) < 1e-12);
  REQUIRE(std::abs(translation_direction_error_deg(t, Eigen::Vector3d(1, 0, 0)) - 90.0) < 1e-12);
  REQUIRE(std::abs(translation_direction_error_deg(t, -t) - 180.0) < 1e-12);
  REQUIRE_THROWS_AS(translation_direction_error_deg(t, Eigen::Vector3d::Zero()),
                    std::invalid_argument);
}

TEST_CASE("scene validation") {
  SceneConfig scene;
  scene.ac_count = 0;
  MotionSpec motion;
  REQUIRE_THROWS_AS(generate_instance(scene, motion, NoiseConfig{}, 1), std::invalid_argument);
  NoiseConfig bad;
  bad.outlier_fraction = 1.5;
  REQUIRE_THROWS_AS(generate_instance(SceneConfig{}, motion, bad, 1), std::invalid_argument);
}
