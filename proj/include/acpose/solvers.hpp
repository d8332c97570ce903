#pragma once

#include <Eigen/Dense>
#include <Eigen/SVD>

#include <cmath>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "acpose/constraints.hpp"
#include "acpose/rig_geometry.hpp"
#include "acpose/roots.hpp"

namespace acpose {

enum class SolverStatus { Ok, NoRealRoots, SingularBackSubstitution, DegenerateSystem };

struct HypothesisDiagnostics {
  double root = 0.0;                 // q_y the hypothesis came from
  double back_sub_residual = 0.0;    // ||M v|| / (||M||_F ||v||) at the root
  bool degenerate = false;           // translation scale unobservable
  Eigen::VectorXd system_translation;  // unknown vector of the polynomial system
};

struct SolverOutput {
  SolverStatus status = SolverStatus::Ok;
  std::vector<PoseHypothesis> hypotheses;
  std::vector<HypothesisDiagnostics> diagnostics;
  std::vector<ConstraintRow> unused_rows;
  UnivariatePoly reduced_poly;        // quartic (planar) or sextic (vertical)
  double quotient_remainder_rel = 0.0;
  bool degenerate_rig = false;        // planar 1AC geometric degeneracy
};

// Scale observability analysis for the single-correspondence planar solver.
// The translation scale is lost when the observing cameras sit at the same
// height; with a candidate pose the test sharpens to the vertical component
// of the relative camera displacement.
struct DegeneracyCheck {
  bool degenerate = false;
  double height_gap = 0.0;           // |t_i.y - t_j.y|
  double scale_observability = std::numeric_limits<double>::quiet_NaN();
  bool scale_free = false;
};

inline DegeneracyCheck check_planar_degeneracy(const CameraRig &rig, int camera_index_k,
                                               int camera_index_k1, double tol_y = 1e-9,
                                               const PoseHypothesis *pose = nullptr) {
  const RigCamera &a = rig.camera(camera_index_k);
  const RigCamera &b = rig.camera(camera_index_k1);
  DegeneracyCheck out;
  out.height_gap = std::abs(a.t.y() - b.t.y());
  out.degenerate = out.height_gap < tol_y;
  if (pose) {
    // Direction of the displacement between the two observing cameras in
    // frame k+1; a vanishing vertical component leaves the scale lambda of
    // lambda * d - t + (t_j - R t_i) = 0 free.
    const Eigen::Vector3d d = pose->R * a.t + pose->t - b.t;
    const double n = d.norm();
    out.scale_observability = n > 0.0 ? std::abs(d.y()) / n : 0.0;
    out.scale_free = out.scale_observability < 1e-6;
  }
  return out;
}

namespace detail {

struct BackSubstitution {
  bool ok = false;
  bool rank_deficient = false;
  Eigen::VectorXd t_sys;   // translation unknowns, homogeneous entry removed
  double residual_rel = 0.0;
};

// Null vector of the evaluated system, normalized to homogeneous entry 1.
// When the second-smallest singular value also vanishes the solution is a
// one-parameter family; the minimum-norm member is returned and flagged.
inline BackSubstitution solve_translation(const PolynomialMatrix &M, double q) {
  const int n = M.n;
  const Eigen::MatrixXd A = M.eval(q);
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(A, Eigen::ComputeFullV);
  const Eigen::VectorXd &sv = svd.singularValues();
  BackSubstitution out;
  out.rank_deficient = sv(n - 2) <= 1e-8 * sv(0);

  Eigen::VectorXd v = svd.matrixV().col(n - 1);
  if (out.rank_deficient) {
    // Minimize the translation norm over the null plane subject to the
    // homogeneous entry being 1.
    const Eigen::VectorXd v2 = svd.matrixV().col(n - 2);
    const Eigen::Vector2d h(v(n - 1), v2(n - 1));
    Eigen::Matrix2d G;
    G << v.head(n - 1).squaredNorm(), v.head(n - 1).dot(v2.head(n - 1)),
        v.head(n - 1).dot(v2.head(n - 1)), v2.head(n - 1).squaredNorm();
    const double detG = G.determinant();
    Eigen::Vector2d c;
    if (std::abs(detG) > 1e-14 * G.norm() * G.norm()) {
      const Eigen::Vector2d Gib = G.inverse() * h;
      const double denom = h.dot(Gib);
      if (std::abs(denom) < 1e-14) return out;
      c = Gib / denom;
    } else {
      const double hn2 = h.squaredNorm();
      if (hn2 < 1e-20) return out;
      c = h / hn2;
    }
    v = c(0) * v + c(1) * v2;
  } else {
    if (std::abs(v(n - 1)) < 1e-10 * v.norm()) return out;
    v /= v(n - 1);
  }

  const double mnorm = A.norm();
  out.residual_rel = mnorm > 0.0 ? (A * v).norm() / (mnorm * v.norm()) : 0.0;
  out.t_sys = v.head(n - 1);
  out.ok = true;
  return out;
}

}  // namespace detail

namespace detail {

inline SolverOutput reduce_and_back_substitute(
    ConstraintSystem sys, bool planar, const Eigen::Matrix3d &R_imu_t_prime,
    const Eigen::Matrix3d &R_imu, bool rig_degenerate) {
  SolverOutput out;
  out.unused_rows = std::move(sys.unused_rows);
  out.degenerate_rig = rig_degenerate;

  const UnivariatePoly det = det_poly(sys.M);
  // A determinant that is zero to rounding for every q_y means the system
  // has a translation family at every rotation (e.g. both correspondences
  // tracked by one camera); its roots would be pure noise.
  double row_scale_product = 1.0;
  for (int r = 0; r < sys.M.n; ++r) {
    double row_scale = 0.0;
    for (int c = 0; c < sys.M.n; ++c)
      row_scale = std::max(row_scale, sys.M.at(r, c).max_abs_coeff());
    row_scale_product *= row_scale;
  }
  if (det.is_zero() || det.max_abs_coeff() < 1e-10 * row_scale_product) {
    out.status = SolverStatus::DegenerateSystem;
    return out;
  }
  const PolyQuotient quot = quotient_by_q2_plus_1(det);
  out.reduced_poly = quot.quotient;
  out.quotient_remainder_rel = quot.remainder_rel;
  if (out.reduced_poly.is_zero() || out.reduced_poly.degree() < 1) {
    out.status = SolverStatus::DegenerateSystem;
    return out;
  }

  const RealRootSet roots = real_roots(out.reduced_poly, RootMethod::CompanionMatrix);
  if (roots.roots.empty()) {
    out.status = SolverStatus::NoRealRoots;
    return out;
  }

  for (const RealRoot &root : roots.roots) {
    const BackSubstitution bs = solve_translation(sys.M, root.value);
    if (!bs.ok) continue;
    PoseHypothesis pose;
    const Eigen::Matrix3d Ry = rotation_y_from_qy(root.value);
    if (planar) {
      pose.kind = MotionKind::Planar;
      pose.R = Ry;
      pose.t = Eigen::Vector3d(bs.t_sys(0), 0.0, bs.t_sys(1));
    } else {
      pose.kind = MotionKind::VerticalAligned;
      pose.R = R_imu_t_prime * Ry * R_imu;
      pose.t = R_imu_t_prime * bs.t_sys;
    }
    HypothesisDiagnostics diag;
    diag.root = root.value;
    diag.back_sub_residual = bs.residual_rel;
    diag.degenerate = bs.rank_deficient || rig_degenerate;
    diag.system_translation = bs.t_sys;
    out.hypotheses.push_back(pose);
    out.diagnostics.push_back(std::move(diag));
  }
  if (out.hypotheses.empty()) out.status = SolverStatus::SingularBackSubstitution;
  return out;
}

}  // namespace detail

// Scale-degenerate fallback: the rig-level system is singular for every
// q_y, but the camera-pair subproblem still pins the yaw. Solves the
// homogeneous 3x3 system in the camera-pair translation, then places the
// rig translation at the minimum-norm member of its one-parameter family.
inline SolverOutput solve_planar_1ac_degenerate(const CameraRig &rig,
                                                const AffineCorrespondence &ac) {
  SolverOutput out;
  out.degenerate_rig = true;

  const PolynomialMatrix M = build_monocular_yaw_system(rig, ac);
  const UnivariatePoly det = det_poly(M);
  if (det.is_zero()) {
    out.status = SolverStatus::DegenerateSystem;
    return out;
  }
  const PolyQuotient quot = quotient_by_q2_plus_1(det);
  out.reduced_poly = quot.quotient;
  out.quotient_remainder_rel = quot.remainder_rel;
  if (out.reduced_poly.is_zero() || out.reduced_poly.degree() < 1) {
    out.status = SolverStatus::DegenerateSystem;
    return out;
  }
  const RealRootSet roots = real_roots(out.reduced_poly, RootMethod::CompanionMatrix);
  if (roots.roots.empty()) {
    out.status = SolverStatus::NoRealRoots;
    return out;
  }

  const RigCamera &a = rig.camera(ac.camera_k);
  const RigCamera &b = rig.camera(ac.camera_k1);
  for (const RealRoot &root : roots.roots) {
    const Eigen::Matrix3d A = M.eval(root.value);
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(A, Eigen::ComputeFullV);
    const Eigen::VectorXd t_cam = svd.matrixV().col(2);

    PoseHypothesis pose;
    pose.kind = MotionKind::Planar;
    pose.R = rotation_y_from_qy(root.value);
    // Rig translation family t(lambda) = base + lambda * dir; both base and
    // dir lie in the motion plane here, which is what makes lambda free.
    const Eigen::Vector3d base = b.t - pose.R * a.t;
    const Eigen::Vector3d dir = b.R * t_cam;
    const Eigen::Vector2d b_xz(base.x(), base.z());
    const Eigen::Vector2d d_xz(dir.x(), dir.z());
    const double dn = d_xz.squaredNorm();
    const double lambda = dn > 1e-20 ? -b_xz.dot(d_xz) / dn : 0.0;
    pose.t = Eigen::Vector3d(base.x() + lambda * dir.x(), 0.0, base.z() + lambda * dir.z());

    HypothesisDiagnostics diag;
    diag.root = root.value;
    const double mnorm = A.norm();
    diag.back_sub_residual = mnorm > 0.0 ? (A * t_cam).norm() / mnorm : 0.0;
    diag.degenerate = true;
    diag.system_translation = Eigen::Vector2d(pose.t.x(), pose.t.z());
    out.hypotheses.push_back(pose);
    out.diagnostics.push_back(std::move(diag));
  }
  if (out.hypotheses.empty()) out.status = SolverStatus::SingularBackSubstitution;
  return out;
}

// Planar motion from a single affine correspondence. The correspondence must
// couple cameras mounted at different heights for the translation scale to be
// observable; otherwise hypotheses carry the minimum-norm translation and the
// degenerate flag.
inline SolverOutput solve_planar_1ac(const CameraRig &rig, const AffineCorrespondence &ac) {
  const DegeneracyCheck deg = check_planar_degeneracy(rig, ac.camera_k, ac.camera_k1);
  if (deg.degenerate) return solve_planar_1ac_degenerate(rig, ac);
  ConstraintSystem sys = build_planar_system(rig, std::span<const AffineCorrespondence>(&ac, 1));
  SolverOutput out = detail::reduce_and_back_substitute(std::move(sys), /*planar=*/true,
                                                        Eigen::Matrix3d::Identity(),
                                                        Eigen::Matrix3d::Identity(), false);
  // Near-degenerate rigs can still defeat the determinant route; retry the
  // camera-pair reduction so the rotation survives.
  if (out.status == SolverStatus::DegenerateSystem) return solve_planar_1ac_degenerate(rig, ac);
  return out;
}

// Planar motion from two affine correspondences; immune to the equal-height
// degeneracy of the single-correspondence solver. The rows left out of the
// square system are returned for preemptive hypothesis testing.
inline SolverOutput solve_planar_2ac(const CameraRig &rig, const AffineCorrespondence &ac1,
                                     const AffineCorrespondence &ac2,
                                     std::span<const int> row_selection = {}) {
  const std::array<AffineCorrespondence, 2> acs{ac1, ac2};
  ConstraintSystem sys = build_planar_system(rig, acs, row_selection);
  return detail::reduce_and_back_substitute(std::move(sys), /*planar=*/true,
                                            Eigen::Matrix3d::Identity(),
                                            Eigen::Matrix3d::Identity(), false);
}

// Yaw plus 3D translation from two affine correspondences with roll/pitch of
// both frames known. Two rows of the second correspondence are held out for
// preemptive testing.
inline SolverOutput solve_vertical_2ac(const CameraRig &rig, const AffineCorrespondence &ac1,
                                       const AffineCorrespondence &ac2,
                                       const AttitudePair &attitudes,
                                       std::span<const int> row_selection = {}) {
  const std::array<AffineCorrespondence, 2> acs{ac1, ac2};
  ConstraintSystem sys = build_vertical_system(rig, acs, attitudes, row_selection);
  const Eigen::Matrix3d R_imu = imu_alignment_rotation(attitudes.frame_k);
  const Eigen::Matrix3d R_imu1 = imu_alignment_rotation(attitudes.frame_k1);
  return detail::reduce_and_back_substitute(std::move(sys), /*planar=*/false, R_imu1.transpose(),
                                            R_imu, false);
}

}  // namespace acpose
