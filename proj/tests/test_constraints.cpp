#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "acpose/constraints.hpp"
#include "acpose/rig_geometry.hpp"
#include "oracles.hpp"

using namespace acpose;

namespace {
constexpr double kDeg = 3.14159265358979323846 / 180.0;

PoseHypothesis random_general_pose(std::mt19937_64 &rng, double angle_scale = 0.15,
                                   double t_scale = 3.0) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  PoseHypothesis pose;
  pose.R = cayley_to_rotation(angle_scale * Eigen::Vector3d(u(rng), u(rng), u(rng)));
  pose.t = t_scale * Eigen::Vector3d(u(rng), u(rng), u(rng));
  return pose;
}
}  // namespace

TEST_CASE("generalized epipolar residual") {
  SECTION("identity motion on a shared line vanishes by incidence") {
    CameraRig rig = oracle::two_camera_rig();
    const PlueckerLine l = plucker_from_observation(rig, 1, Eigen::Vector3d(0.1, -0.2, 1.0));
    PoseHypothesis identity;
    REQUIRE(std::abs(generalized_epipolar_residual(identity, l, l)) < 1e-15);
  }

  SECTION("vanishes on synthesized rays at the true pose, fires off it") {
    std::mt19937_64 rng(31);
    const CameraRig rig = oracle::two_camera_rig();
    for (int i = 0; i < 200; ++i) {
      const PoseHypothesis pose = random_general_pose(rng);
      const AffineCorrespondence ac = oracle::random_ac(rig, pose, i % 2, (i / 2) % 2, rng);
      const PlueckerLine l = plucker_from_observation(rig, ac.camera_k, ac.x);
      const PlueckerLine lp = plucker_from_observation(rig, ac.camera_k1, ac.x_prime);
      REQUIRE(std::abs(generalized_epipolar_residual(pose, l, lp)) < 1e-10);

      PoseHypothesis off = pose;
      off.R = cayley_to_rotation(Eigen::Vector3d(0, std::tan(0.5 * kDeg), 0)) * pose.R;
      REQUIRE(std::abs(generalized_epipolar_residual(off, l, lp)) > 1e-6);
    }
  }
}

TEST_CASE("essential matrix routes agree") {
  std::mt19937_64 rng(32);
  std::uniform_real_distribution<double> u(-1.0, 1.0);

  SECTION("identity rig collapses to the rig pose essential") {
    CameraRig rig;
    rig.cameras.resize(1);
    for (int i = 0; i < 50; ++i) {
      const PoseHypothesis pose = random_general_pose(rng);
      const Eigen::Matrix3d E = essential_from_camera_pair(rig, 0, pose);
      REQUIRE((E - skew(pose.t) * pose.R).cwiseAbs().maxCoeff() < 1e-12);
    }
  }

  SECTION("direct and factored forms agree entrywise, determinant vanishes") {
    CameraRig rig;
    rig.cameras.resize(3);
    for (int i = 0; i < 300; ++i) {
      for (auto &cam : rig.cameras) {
        cam.R = cayley_to_rotation(Eigen::Vector3d(u(rng), u(rng), u(rng)));
        cam.t = Eigen::Vector3d(u(rng), u(rng), u(rng));
      }
      const PoseHypothesis pose = random_general_pose(rng);
      const int a = i % 3, b = (i / 3) % 3;
      const Eigen::Matrix3d E1 = essential_between(rig, a, b, pose);
      const Eigen::Matrix3d E2 = essential_between_factored(rig, a, b, pose);
      const double scale = std::max(1.0, E1.cwiseAbs().maxCoeff());
      REQUIRE((E1 - E2).cwiseAbs().maxCoeff() < 1e-12 * scale);
      REQUIRE(std::abs(E1.determinant()) < 1e-10 * scale * scale * scale);
    }
  }
}

TEST_CASE("affine constraint rows") {
  SECTION("zero at synthesized correspondences, nonzero for corrupted A") {
    std::mt19937_64 rng(33);
    const CameraRig rig = oracle::two_camera_rig();
    for (int i = 0; i < 200; ++i) {
      const PoseHypothesis pose = random_general_pose(rng);
      AffineCorrespondence ac = oracle::random_ac(rig, pose, i % 2, (i / 2) % 2, rng);
      const Eigen::Vector2d r = affine_constraint_rows(rig, ac, pose);
      REQUIRE(r.cwiseAbs().maxCoeff() < 1e-9);

      ac.A += 0.1 * Eigen::Matrix2d::Identity();
      const Eigen::Vector2d r2 = affine_constraint_rows(rig, ac, pose);
      REQUIRE(r2.cwiseAbs().maxCoeff() > 1e-6);
    }
  }

  SECTION("identity everything gives a zero essential and zero rows") {
    CameraRig rig;
    rig.cameras.resize(1);
    AffineCorrespondence ac;  // x = x' = (0,0,1), A = I
    PoseHypothesis identity;
    REQUIRE(essential_from_camera_pair(rig, 0, identity).cwiseAbs().maxCoeff() == 0.0);
    REQUIRE(affine_constraint_rows(rig, ac, identity).cwiseAbs().maxCoeff() == 0.0);
  }
}

TEST_CASE("stacked residuals") {
  std::mt19937_64 rng(34);
  const CameraRig rig = oracle::two_camera_rig();
  const PoseHypothesis pose = random_general_pose(rng);
  std::vector<AffineCorrespondence> acs;
  for (int i = 0; i < 5; ++i) acs.push_back(oracle::random_ac(rig, pose, i % 2, (i + 1) % 2, rng));

  const std::vector<double> r = stacked_6dof_residuals(rig, acs, pose);
  REQUIRE(r.size() == acs.size() * 3);
  for (double v : r) REQUIRE(std::abs(v) < 1e-9);

  REQUIRE_THROWS_AS(stacked_6dof_residuals(rig, {}, pose), std::invalid_argument);
}

TEST_CASE("planar system") {
  std::mt19937_64 rng(35);
  std::uniform_real_distribution<double> u(-1.0, 1.0);

  SECTION("rows reproduce the numeric residuals at arbitrary planar poses") {
    const CameraRig rig = oracle::two_camera_rig();
    for (int i = 0; i < 100; ++i) {
      const PoseHypothesis gen = oracle::planar_pose(0.2 * u(rng), u(rng), 3.0);
      const AffineCorrespondence ac = oracle::random_ac(rig, gen, i % 2, (i / 2) % 2, rng);
      const auto rows = planar_constraint_rows(rig, ac);

      // Evaluate rows at a pose different from the generating one; they must
      // match the numeric constraint values there too.
      const double theta = 0.3 * u(rng);
      const double qy = std::tan(0.5 * theta);
      const Eigen::Vector2d txz(3.0 * u(rng), 3.0 * u(rng));
      PoseHypothesis probe;
      probe.kind = MotionKind::Planar;
      probe.R = rotation_y_from_qy(qy);
      probe.t = Eigen::Vector3d(txz(0), 0.0, txz(1));

      const PlueckerLine l = plucker_from_observation(rig, ac.camera_k, ac.x);
      const PlueckerLine lp = plucker_from_observation(rig, ac.camera_k1, ac.x_prime);
      const double gec = generalized_epipolar_residual(probe, l, lp);
      const Eigen::Vector2d aff = affine_constraint_rows(rig, ac, probe);

      const double s = 1.0 + qy * qy;
      const Eigen::VectorXd t = txz;
      REQUIRE(std::abs(rows[0].eval(qy, t) / s - gec) < 1e-9);
      REQUIRE(std::abs(rows[1].eval(qy, t) / s - aff(0)) < 1e-9);
      REQUIRE(std::abs(rows[2].eval(qy, t) / s - aff(1)) < 1e-9);
    }
  }

  SECTION("system vanishes at ground truth, entries stay quadratic") {
    const CameraRig rig = oracle::two_camera_rig();
    for (int i = 0; i < 100; ++i) {
      const double theta = 0.3 * u(rng), phi = u(rng);
      const PoseHypothesis pose = oracle::planar_pose(theta, phi, 3.0);
      const AffineCorrespondence ac1 = oracle::random_ac(rig, pose, 0, 1, rng);
      const AffineCorrespondence ac2 = oracle::random_ac(rig, pose, 1, 0, rng);

      const double qy = std::tan(0.5 * theta);
      Eigen::Vector3d v(pose.t.x(), pose.t.z(), 1.0);

      const std::array<AffineCorrespondence, 1> one{ac1};
      const ConstraintSystem sys1 = build_planar_system(rig, one);
      REQUIRE(sys1.M.n == 3);
      REQUIRE(sys1.M.max_entry_degree() <= 2);
      REQUIRE(sys1.unused_rows.empty());
      REQUIRE((sys1.M.eval(qy) * v).norm() < 1e-9 * (1.0 + sys1.M.eval(qy).norm()));

      const std::array<AffineCorrespondence, 2> two{ac1, ac2};
      const ConstraintSystem sys2 = build_planar_system(rig, two);
      REQUIRE(sys2.M.max_entry_degree() <= 2);
      REQUIRE(sys2.unused_rows.size() == 3);
      REQUIRE((sys2.M.eval(qy) * v).norm() < 1e-9 * (1.0 + sys2.M.eval(qy).norm()));
      // Held-out rows are satisfied at ground truth as well.
      const Eigen::VectorXd t = v.head(2);
      for (const ConstraintRow &row : sys2.unused_rows)
        REQUIRE(std::abs(row.eval(qy, t)) < 1e-9);
    }
  }

  SECTION("zero motion is satisfied by the trivial solution") {
    const CameraRig rig = oracle::two_camera_rig();
    std::mt19937_64 rng2(36);
    const PoseHypothesis zero = oracle::planar_pose(0.0, 0.0, 0.0);
    const AffineCorrespondence ac = oracle::random_ac(rig, zero, 0, 1, rng2);
    const ConstraintSystem sys = build_planar_system(rig, std::array{ac});
    REQUIRE((sys.M.eval(0.0) * Eigen::Vector3d(0, 0, 1)).norm() < 1e-12);
  }

  SECTION("input validation") {
    const CameraRig rig = oracle::two_camera_rig();
    std::vector<AffineCorrespondence> none;
    REQUIRE_THROWS_AS(build_planar_system(rig, none), std::invalid_argument);
    std::mt19937_64 rng2(37);
    const PoseHypothesis pose = oracle::planar_pose(0.1, 0.2, 3.0);
    std::vector<AffineCorrespondence> two{oracle::random_ac(rig, pose, 0, 1, rng2),
                                          oracle::random_ac(rig, pose, 1, 0, rng2)};
    const std::array<int, 3> bad{0, 1, 7};
    REQUIRE_THROWS_AS(build_planar_system(rig, two, bad), std::invalid_argument);
  }
}

TEST_CASE("world yaw equivariance of the planar system") {
  // Rotating rig and scene by a fixed yaw leaves ground-truth satisfaction
  // intact.
  std::mt19937_64 rng(38);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const CameraRig rig = oracle::two_camera_rig();
  for (int i = 0; i < 50; ++i) {
    const double theta = 0.25 * u(rng);
    const PoseHypothesis pose = oracle::planar_pose(theta, u(rng), 3.0);
    const Eigen::Matrix3d W = rotation_y_from_qy(std::tan(0.35 * u(rng)));

    CameraRig rig_w = rig;
    for (auto &cam : rig_w.cameras) {
      cam.R = W * cam.R;
      cam.t = W * cam.t;
    }
    // Conjugated motion in the rotated world.
    PoseHypothesis pose_w = pose;
    pose_w.R = W * pose.R * W.transpose();
    pose_w.t = W * pose.t;

    const AffineCorrespondence ac = oracle::random_ac(rig_w, pose_w, 0, 1, rng);
    const ConstraintSystem sys = build_planar_system(rig_w, std::array{ac});
    const double qy = qy_from_rotation_y(pose_w.R);
    const Eigen::Vector3d v(pose_w.t.x(), pose_w.t.z(), 1.0);
    REQUIRE((sys.M.eval(qy) * v).norm() < 1e-9 * (1.0 + sys.M.eval(qy).norm()));
  }
}

TEST_CASE("vertical system") {
  std::mt19937_64 rng(39);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const CameraRig rig = oracle::two_camera_rig();

  SECTION("vanishes at ground truth with quadratic entries") {
    for (int i = 0; i < 100; ++i) {
      AttitudePair att{{0.15 * u(rng), 0.15 * u(rng)}, {0.15 * u(rng), 0.15 * u(rng)}};
      const double theta = 0.3 * u(rng);
      const Eigen::Vector3d t_aligned(3.0 * u(rng), u(rng), 3.0 * u(rng));
      const PoseHypothesis pose = oracle::vertical_pose(theta, att, t_aligned);

      const std::array<AffineCorrespondence, 2> acs{oracle::random_ac(rig, pose, 0, 1, rng),
                                                    oracle::random_ac(rig, pose, 1, 0, rng)};
      const ConstraintSystem sys = build_vertical_system(rig, acs, att);
      REQUIRE(sys.M.n == 4);
      REQUIRE(sys.M.max_entry_degree() <= 2);
      REQUIRE(sys.unused_rows.size() == 2);

      const double qy = std::tan(0.5 * theta);
      Eigen::Vector4d v;
      v << t_aligned, 1.0;
      REQUIRE((sys.M.eval(qy) * v).norm() < 1e-9 * (1.0 + sys.M.eval(qy).norm()));
      for (const ConstraintRow &row : sys.unused_rows)
        REQUIRE(std::abs(row.eval(qy, Eigen::VectorXd(t_aligned))) < 1e-9);
    }
  }

  SECTION("identity attitudes embed the planar problem") {
    const AttitudePair id{};
    for (int i = 0; i < 50; ++i) {
      const double theta = 0.3 * u(rng);
      const PoseHypothesis pose = oracle::planar_pose(theta, u(rng), 3.0);
      const std::array<AffineCorrespondence, 2> acs{oracle::random_ac(rig, pose, 0, 1, rng),
                                                    oracle::random_ac(rig, pose, 1, 0, rng)};
      const ConstraintSystem sys = build_vertical_system(rig, acs, id);
      const double qy = std::tan(0.5 * theta);
      const Eigen::Vector4d v(pose.t.x(), 0.0, pose.t.z(), 1.0);
      REQUIRE((sys.M.eval(qy) * v).norm() < 1e-9 * (1.0 + sys.M.eval(qy).norm()));

      // With identity attitudes the rows agree with the planar rows on the
      // shared unknowns.
      const auto vrows = vertical_constraint_rows(rig, acs[0], id);
      const auto prows = planar_constraint_rows(rig, acs[0]);
      const Eigen::VectorXd t3 = Eigen::Vector3d(pose.t.x(), 0.0, pose.t.z());
      const Eigen::VectorXd t2 = Eigen::Vector2d(pose.t.x(), pose.t.z());
      for (int r = 0; r < 3; ++r) {
        const double a = vrows[static_cast<size_t>(r)].eval(qy, t3);
        const double b = prows[static_cast<size_t>(r)].eval(qy, t2);
        REQUIRE(std::abs(a - b) < 1e-10 * (1.0 + std::abs(b)));
      }
    }
  }

  SECTION("wrong correspondence count rejected") {
    const AttitudePair id{};
    std::vector<AffineCorrespondence> one(1);
    one[0].validate();
    REQUIRE_THROWS_AS(build_vertical_system(rig, one, id), std::invalid_argument);
  }
}
