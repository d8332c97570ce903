#pragma once

#include <Eigen/Dense>

#include <array>
#include <cmath>
#include <span>
#include <stdexcept>
#include <vector>

#include "acpose/polynomial.hpp"
#include "acpose/rig_geometry.hpp"

namespace acpose {

// --------------------------------------------------------------------------
// Numeric constraint evaluation
// --------------------------------------------------------------------------

// Bilinear coupling of two rig-frame rays through the rig motion; zero when
// the rays meet in space under that motion.
inline double generalized_epipolar_residual(const PoseHypothesis &pose, const PlueckerLine &l,
                                            const PlueckerLine &l_prime) {
  const Eigen::Vector3d Ru = pose.R * l.u;
  return l_prime.u.dot(pose.t.cross(Ru)) + l_prime.u.dot(pose.R * l.m) + l_prime.m.dot(Ru);
}

// Per-camera motion induced by the rig motion: maps coordinates of the
// camera observing at frame k into those of the camera observing at frame
// k+1.
inline void relative_camera_motion(const CameraRig &rig, int cam_k, int cam_k1,
                                   const PoseHypothesis &pose, Eigen::Matrix3d *R_c,
                                   Eigen::Vector3d *t_c) {
  const RigCamera &a = rig.camera(cam_k);
  const RigCamera &b = rig.camera(cam_k1);
  *R_c = b.R.transpose() * pose.R * a.R;
  *t_c = b.R.transpose() * (pose.R * a.t + pose.t - b.t);
}

// Essential matrix between the two observing cameras, direct route
// E = [t_c]x R_c.
inline Eigen::Matrix3d essential_between(const CameraRig &rig, int cam_k, int cam_k1,
                                         const PoseHypothesis &pose) {
  Eigen::Matrix3d R_c;
  Eigen::Vector3d t_c;
  relative_camera_motion(rig, cam_k, cam_k1, pose, &R_c, &t_c);
  return skew(t_c) * R_c;
}

// Same matrix through the factored form that keeps the rig motion visible:
// E = R_j^T (R [t_i]x R^T + [t]x - [t_j]x) R R_i. Kept as an independent
// algebraic route; tests require the two to agree.
inline Eigen::Matrix3d essential_between_factored(const CameraRig &rig, int cam_k, int cam_k1,
                                                  const PoseHypothesis &pose) {
  const RigCamera &a = rig.camera(cam_k);
  const RigCamera &b = rig.camera(cam_k1);
  const Eigen::Matrix3d bracket =
      pose.R * skew(a.t) * pose.R.transpose() + skew(pose.t) - skew(b.t);
  return b.R.transpose() * bracket * pose.R * a.R;
}

// Single-camera track convenience, the common case.
inline Eigen::Matrix3d essential_from_camera_pair(const CameraRig &rig, int camera_index,
                                                  const PoseHypothesis &pose) {
  return essential_between(rig, camera_index, camera_index, pose);
}

inline Eigen::Matrix3d hat_affine(const Eigen::Matrix2d &A) {
  Eigen::Matrix3d Ah = Eigen::Matrix3d::Zero();
  Ah.topLeftCorner<2, 2>() = A;
  return Ah;
}

// The two scalar constraints a local affine transformation adds on top of
// the point's epipolar constraint: (E^T x')_(1:2) + (A^^T E x)_(1:2).
inline Eigen::Vector2d affine_constraint_rows(const CameraRig &rig,
                                              const AffineCorrespondence &ac,
                                              const PoseHypothesis &pose) {
  const Eigen::Matrix3d E = essential_between(rig, ac.camera_k, ac.camera_k1, pose);
  const Eigen::Vector3d r = E.transpose() * ac.x_prime + hat_affine(ac.A).transpose() * (E * ac.x);
  return r.head<2>();
}

// All three residuals of every correspondence at a 6DOF pose; drives scoring
// and the cross-checks between the numeric and polynomial constraint paths.
inline std::vector<double> stacked_6dof_residuals(const CameraRig &rig,
                                                  std::span<const AffineCorrespondence> acs,
                                                  const PoseHypothesis &pose) {
  if (acs.empty()) throw std::invalid_argument("need at least one correspondence");
  std::vector<double> out;
  out.reserve(acs.size() * 3);
  for (const AffineCorrespondence &ac : acs) {
    const PlueckerLine l = plucker_from_observation(rig, ac.camera_k, ac.x);
    const PlueckerLine lp = plucker_from_observation(rig, ac.camera_k1, ac.x_prime);
    out.push_back(generalized_epipolar_residual(pose, l, lp));
    const Eigen::Vector2d aff = affine_constraint_rows(rig, ac, pose);
    out.push_back(aff(0));
    out.push_back(aff(1));
  }
  return out;
}

// --------------------------------------------------------------------------
// Polynomial constraint assembly in q_y = tan(theta/2)
// --------------------------------------------------------------------------

namespace polydetail {

using PolyVec3 = std::array<UnivariatePoly, 3>;
using PolyMat3 = std::array<PolyVec3, 3>;

inline PolyMat3 to_poly(const Eigen::Matrix3d &m) {
  PolyMat3 p;
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c) p[r][c] = UnivariatePoly::constant(m(r, c));
  return p;
}

// (1 + q^2) times the yaw rotation; entries are plain quadratics.
inline PolyMat3 ry_bar() {
  PolyMat3 p;
  const UnivariatePoly one_minus{1.0, 0.0, -1.0};
  const UnivariatePoly one_plus{1.0, 0.0, 1.0};
  const UnivariatePoly two_q{0.0, 2.0};
  p[0][0] = one_minus;
  p[0][2] = -two_q;
  p[1][1] = one_plus;
  p[2][0] = two_q;
  p[2][2] = one_minus;
  return p;
}

inline PolyMat3 matmul(const PolyMat3 &a, const PolyMat3 &b) {
  PolyMat3 r;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      for (int k = 0; k < 3; ++k) r[i][j] += a[i][k] * b[k][j];
  return r;
}

inline PolyMat3 matmul(const Eigen::Matrix3d &a, const PolyMat3 &b) { return matmul(to_poly(a), b); }
inline PolyMat3 matmul(const PolyMat3 &a, const Eigen::Matrix3d &b) { return matmul(a, to_poly(b)); }

inline PolyMat3 sub(const PolyMat3 &a, const PolyMat3 &b) {
  PolyMat3 r;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) r[i][j] = a[i][j] - b[i][j];
  return r;
}

inline PolyVec3 apply(const PolyMat3 &m, const Eigen::Vector3d &v) {
  PolyVec3 r;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) r[i] += m[i][j] * v(j);
  return r;
}

// m^T v, i.e. v through the transposed matrix.
inline PolyVec3 apply_transposed(const PolyMat3 &m, const Eigen::Vector3d &v) {
  PolyVec3 r;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) r[i] += m[j][i] * v(j);
  return r;
}

inline UnivariatePoly dot(const PolyVec3 &a, const Eigen::Vector3d &b) {
  return a[0] * b(0) + a[1] * b(1) + a[2] * b(2);
}

inline PolyVec3 cross(const PolyVec3 &a, const Eigen::Vector3d &b) {
  return PolyVec3{a[1] * b(2) - a[2] * b(1), a[2] * b(0) - a[0] * b(2), a[0] * b(1) - a[1] * b(0)};
}

}  // namespace polydetail

enum class RowSource { Epipolar = 0, AffineRow1 = 1, AffineRow2 = 2 };

// One scalar constraint, linear in the unknown translation with polynomial
// coefficients in q_y. Carries the common (1 + q_y^2) factor, so eval() is
// (1 + q_y^2) times the underlying residual.
struct ConstraintRow {
  RowSource source = RowSource::Epipolar;
  int ac_index = 0;
  // coeff[0..w-1] multiply the translation unknowns, coeff[w] is the
  // homogeneous term; w is 2 for planar (t_x, t_z) and 3 for vertical.
  std::vector<UnivariatePoly> coeff;

  int unknowns() const { return static_cast<int>(coeff.size()) - 1; }

  double eval(double q_y, const Eigen::VectorXd &t) const {
    const int w = unknowns();
    double r = coeff[static_cast<size_t>(w)](q_y);
    for (int i = 0; i < w; ++i) r += coeff[static_cast<size_t>(i)](q_y) * t(i);
    return r;
  }

  // Scale bound |row(q_y, t)| <= scale(q_y, t); used to express residual
  // tolerances relative to the row magnitude.
  double scale(double q_y, const Eigen::VectorXd &t) const {
    double c2 = 0.0;
    for (const UnivariatePoly &p : coeff) {
      const double v = p(q_y);
      c2 += v * v;
    }
    return std::sqrt(c2) * std::sqrt(1.0 + t.squaredNorm());
  }
};

namespace polydetail {

// Affine-row coefficient matrices for one correspondence. Builds the
// essential matrix scaled by (1 + q^2) split into a translation-free part
// and one part per translation unknown:
//   Ebar(q, t) = E0(q) + sum_c t_c * Ec(q).
struct AffineRowParts {
  PolyMat3 e0;
  std::array<PolyMat3, 3> ec;  // per unit translation direction
};

inline AffineRowParts affine_row_parts(const Eigen::Matrix3d &Rk, const Eigen::Vector3d &tk,
                                       const Eigen::Matrix3d &Rk1, const Eigen::Vector3d &tk1) {
  AffineRowParts parts;
  const PolyMat3 ry = ry_bar();
  const Eigen::Matrix3d Rk1t = Rk1.transpose();
  parts.e0 = matmul(matmul(Rk1t, sub(matmul(ry, skew(tk)), matmul(skew(tk1), ry))), Rk);
  for (int c = 0; c < 3; ++c) {
    const Eigen::Matrix3d g = skew(Eigen::Vector3d::Unit(c));
    parts.ec[static_cast<size_t>(c)] = matmul(matmul(Rk1t, matmul(g, ry)), Rk);
  }
  return parts;
}

// (E^T x')_a + (A^^T E x)_a as a polynomial, for one coefficient matrix E.
inline UnivariatePoly affine_row_poly(const PolyMat3 &E, const Eigen::Vector3d &x,
                                      const Eigen::Vector3d &x_prime, const Eigen::Matrix3d &Ahat,
                                      int a) {
  const PolyVec3 lhs = apply_transposed(E, x_prime);
  const PolyVec3 Ex = apply(E, x);
  PolyVec3 rhs;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) rhs[i] += Ex[j] * Ahat(j, i);  // A^^T (E x)
  return lhs[static_cast<size_t>(a)] + rhs[static_cast<size_t>(a)];
}

struct FramePair {
  Eigen::Matrix3d Rk, Rk1;
  Eigen::Vector3d tk, tk1;
};

// Three rows (epipolar, affine-1, affine-2) for one correspondence given the
// effective per-frame camera poses. For the planar system these are the rig
// extrinsics; for the vertical system they are pre-rotated into the
// gravity-aligned frame.
inline std::array<ConstraintRow, 3> constraint_rows(const FramePair &fp,
                                                    const AffineCorrespondence &ac, int ac_index,
                                                    const std::array<int, 3> &unknown_axes,
                                                    int n_unknowns) {
  std::array<ConstraintRow, 3> rows;

  // Epipolar row from the ray pair: coefficient of t_c is ((Ry u) x u')_c,
  // homogeneous term u'^T Ry m + m'^T Ry u.
  Eigen::Vector3d p = fp.Rk * ac.x;
  const Eigen::Vector3d u = p / p.norm();
  const Eigen::Vector3d m = fp.tk.cross(u);
  Eigen::Vector3d pp = fp.Rk1 * ac.x_prime;
  const Eigen::Vector3d up = pp / pp.norm();
  const Eigen::Vector3d mp = fp.tk1.cross(up);

  const PolyMat3 ry = ry_bar();
  const PolyVec3 ry_u = apply(ry, u);
  const PolyVec3 tcoef = cross(ry_u, up);
  rows[0].source = RowSource::Epipolar;
  rows[0].ac_index = ac_index;
  rows[0].coeff.resize(static_cast<size_t>(n_unknowns) + 1);
  for (int c = 0; c < n_unknowns; ++c)
    rows[0].coeff[static_cast<size_t>(c)] = tcoef[static_cast<size_t>(unknown_axes[static_cast<size_t>(c)])];
  rows[0].coeff[static_cast<size_t>(n_unknowns)] = dot(apply(ry, m), up) + dot(ry_u, mp);

  const AffineRowParts parts = affine_row_parts(fp.Rk, fp.tk, fp.Rk1, fp.tk1);
  const Eigen::Matrix3d Ahat = hat_affine(ac.A);
  for (int a = 0; a < 2; ++a) {
    ConstraintRow &row = rows[static_cast<size_t>(a + 1)];
    row.source = a == 0 ? RowSource::AffineRow1 : RowSource::AffineRow2;
    row.ac_index = ac_index;
    row.coeff.resize(static_cast<size_t>(n_unknowns) + 1);
    for (int c = 0; c < n_unknowns; ++c)
      row.coeff[static_cast<size_t>(c)] = affine_row_poly(
          parts.ec[static_cast<size_t>(unknown_axes[static_cast<size_t>(c)])], ac.x, ac.x_prime, Ahat, a);
    row.coeff[static_cast<size_t>(n_unknowns)] = affine_row_poly(parts.e0, ac.x, ac.x_prime, Ahat, a);
  }
  return rows;
}

}  // namespace polydetail

// Rows provided by one correspondence under the planar motion model, in the
// fixed order (epipolar, affine-1, affine-2). Unknowns are (t_x, t_z).
inline std::array<ConstraintRow, 3> planar_constraint_rows(const CameraRig &rig,
                                                           const AffineCorrespondence &ac,
                                                           int ac_index = 0) {
  ac.validate(&rig);
  polydetail::FramePair fp{rig.camera(ac.camera_k).R, rig.camera(ac.camera_k1).R,
                           rig.camera(ac.camera_k).t, rig.camera(ac.camera_k1).t};
  return polydetail::constraint_rows(fp, ac, ac_index, {0, 2, -1}, 2);
}

// Rows under the known-vertical model, expressed in the gravity-aligned
// frame. Unknowns are the aligned translation (t_x, t_y, t_z).
inline std::array<ConstraintRow, 3> vertical_constraint_rows(const CameraRig &rig,
                                                             const AffineCorrespondence &ac,
                                                             const AttitudePair &attitudes,
                                                             int ac_index = 0) {
  ac.validate(&rig);
  const Eigen::Matrix3d R_imu = imu_alignment_rotation(attitudes.frame_k);
  const Eigen::Matrix3d R_imu1 = imu_alignment_rotation(attitudes.frame_k1);
  polydetail::FramePair fp{R_imu * rig.camera(ac.camera_k).R, R_imu1 * rig.camera(ac.camera_k1).R,
                           R_imu * rig.camera(ac.camera_k).t, R_imu1 * rig.camera(ac.camera_k1).t};
  return polydetail::constraint_rows(fp, ac, ac_index, {0, 1, 2}, 3);
}

// Square polynomial system together with the rows that were left out of it;
// the unused rows feed the preemptive hypothesis tests.
struct ConstraintSystem {
  PolynomialMatrix M;
  std::vector<ConstraintRow> rows;
  std::vector<ConstraintRow> unused_rows;
};

namespace polydetail {

inline ConstraintSystem select_rows(std::vector<ConstraintRow> all, std::span<const int> selection,
                                    int n) {
  ConstraintSystem sys;
  std::vector<bool> used(all.size(), false);
  sys.M = PolynomialMatrix(n);
  int r = 0;
  for (int idx : selection) {
    if (idx < 0 || idx >= static_cast<int>(all.size()))
      throw std::invalid_argument("row selection index out of range");
    if (used[static_cast<size_t>(idx)]) throw std::invalid_argument("row selected twice");
    used[static_cast<size_t>(idx)] = true;
    for (int c = 0; c < n; ++c) sys.M.at(r, c) = all[static_cast<size_t>(idx)].coeff[static_cast<size_t>(c)];
    sys.rows.push_back(all[static_cast<size_t>(idx)]);
    ++r;
  }
  for (size_t i = 0; i < all.size(); ++i)
    if (!used[i]) sys.unused_rows.push_back(std::move(all[i]));
  return sys;
}

}  // namespace polydetail

inline constexpr std::array<int, 3> kPlanar1acRows{0, 1, 2};
// Two-correspondence default: epipolar and first affine row of the first
// correspondence plus the epipolar row of the second.
inline constexpr std::array<int, 3> kPlanar2acRows{0, 1, 3};
// Vertical default: all rows of the first correspondence plus the epipolar
// row of the second.
inline constexpr std::array<int, 4> kVertical2acRows{0, 1, 2, 3};

// 3x3 system M(q_y) with quadratic entries such that
// M(q_y) (t_x, t_z, 1)^T = 0 at the true planar motion (up to the dropped
// 1/(1+q_y^2) factor).
inline ConstraintSystem build_planar_system(const CameraRig &rig,
                                            std::span<const AffineCorrespondence> acs,
                                            std::span<const int> row_selection = {}) {
  if (acs.size() != 1 && acs.size() != 2)
    throw std::invalid_argument("planar system needs one or two correspondences");
  std::vector<ConstraintRow> all;
  for (size_t i = 0; i < acs.size(); ++i) {
    auto rows = planar_constraint_rows(rig, acs[i], static_cast<int>(i));
    all.insert(all.end(), rows.begin(), rows.end());
  }
  std::span<const int> sel = row_selection;
  if (sel.empty()) sel = acs.size() == 1 ? std::span<const int>(kPlanar1acRows) : std::span<const int>(kPlanar2acRows);
  if (sel.size() != 3) throw std::invalid_argument("planar system needs exactly 3 rows");
  return polydetail::select_rows(std::move(all), sel, 3);
}

// Single-camera-pair system, homogeneous in the camera-pair translation
// t_c: rows of M_c(q_y) t_c = 0 are the three correspondence constraints
// with the rotation restricted to yaw. This is the reduction the planar
// solver falls back to when the rig-level system is scale-degenerate: the
// yaw remains observable even though the rig translation scale is not.
inline PolynomialMatrix build_monocular_yaw_system(const CameraRig &rig,
                                                   const AffineCorrespondence &ac) {
  ac.validate(&rig);
  using namespace polydetail;
  const Eigen::Matrix3d &Ri = rig.camera(ac.camera_k).R;
  const Eigen::Matrix3d &Rj = rig.camera(ac.camera_k1).R;
  const PolyMat3 Rc = matmul(matmul(Rj.transpose(), ry_bar()), Ri);  // (1+q^2) R_c

  PolynomialMatrix M(3);
  const PolyVec3 Rcx = apply(Rc, ac.x);
  const PolyVec3 epi = cross(Rcx, ac.x_prime);  // x'^T [t_c]x R_c x = <(R_c x) x x', t_c>
  const Eigen::Matrix3d Ahat = hat_affine(ac.A);
  for (int c = 0; c < 3; ++c) {
    M.at(0, c) = epi[static_cast<size_t>(c)];
    const PolyMat3 Ec = matmul(skew(Eigen::Vector3d::Unit(c)), Rc);
    for (int a = 0; a < 2; ++a)
      M.at(a + 1, c) = affine_row_poly(Ec, ac.x, ac.x_prime, Ahat, a);
  }
  return M;
}

// 4x4 system in the aligned frame, M~(q_y) (t_x, t_y, t_z, 1)^T = 0.
inline ConstraintSystem build_vertical_system(const CameraRig &rig,
                                              std::span<const AffineCorrespondence> acs,
                                              const AttitudePair &attitudes,
                                              std::span<const int> row_selection = {}) {
  if (acs.size() != 2)
    throw std::invalid_argument("vertical system needs exactly two correspondences");
  std::vector<ConstraintRow> all;
  for (size_t i = 0; i < acs.size(); ++i) {
    auto rows = vertical_constraint_rows(rig, acs[i], attitudes, static_cast<int>(i));
    all.insert(all.end(), rows.begin(), rows.end());
  }
  std::span<const int> sel = row_selection;
  if (sel.empty()) sel = kVertical2acRows;
  if (sel.size() != 4) throw std::invalid_argument("vertical system needs exactly 4 rows");
  return polydetail::select_rows(std::move(all), sel, 4);
}

}  // namespace acpose
