#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <span>
#include <stdexcept>
#include <vector>

#include "acpose/constraints.hpp"
#include "acpose/random.hpp"
#include "acpose/rig_geometry.hpp"
#include "acpose/solvers.hpp"

namespace acpose {

enum class SolverKind { Planar1AC, Planar2AC, Vertical2AC };

inline int minimal_sample_size(SolverKind kind) { return kind == SolverKind::Planar1AC ? 1 : 2; }

inline const char *solver_name(SolverKind kind) {
  switch (kind) {
    case SolverKind::Planar1AC: return "planar-1ac";
    case SolverKind::Planar2AC: return "planar-2ac";
    case SolverKind::Vertical2AC: return "vertical-2ac";
  }
  return "unknown";
}

struct RansacConfig {
  double confidence = 0.99;
  double inlier_threshold = 0.1 * 3.14159265358979323846 / 180.0;  // radians
  int max_iterations = 10000;
  // Accuracy comes from best-of-many selection, so the adaptive bound gets a
  // substantial floor; the 0.1 degree threshold saturates quickly and would
  // otherwise stop after a handful of samples.
  int min_iterations = 100;
  SolverKind solver = SolverKind::Planar2AC;
  bool preemptive = true;
  // Relative residual bound for the held-out rows, calibrated so hypotheses
  // that go on to win the inlier count always pass while spurious roots and
  // contaminated samples mostly fail.
  double preemptive_residual_tol = 0.2;
  uint64_t seed = 0;

  void validate() const {
    if (!(confidence > 0.0 && confidence < 1.0))
      throw std::invalid_argument("confidence must be in (0, 1)");
    if (!(inlier_threshold > 0.0)) throw std::invalid_argument("inlier threshold must be positive");
  }
};

enum class RansacStatus { Ok, NoModelFound };

struct RansacStats {
  int iterations = 0;
  int hypotheses_generated = 0;
  int hypotheses_rejected_preemptively = 0;
  int hypotheses_scored = 0;
  long long point_evaluations = 0;  // correspondences touched by full scoring
};

struct RansacResult {
  RansacStatus status = RansacStatus::NoModelFound;
  PoseHypothesis pose;
  std::vector<uint8_t> inlier_mask;
  int inlier_count = 0;
  double inlier_error_sum = 0.0;
  RansacStats stats;
};

// Maximum angle between each measured ray and the ray toward the midpoint
// triangulation of the correspondence under the hypothesized motion. Rays
// that triangulate behind a camera or fail to converge score pi.
inline double angular_inlier_error(const CameraRig &rig, const AffineCorrespondence &ac,
                                   const PoseHypothesis &pose) {
  constexpr double kPi = 3.14159265358979323846;
  const RigCamera &a = rig.camera(ac.camera_k);
  const RigCamera &b = rig.camera(ac.camera_k1);

  // Both lines expressed in frame k+1.
  const Eigen::Vector3d d1 = pose.R * (a.R * ac.x).normalized();
  const Eigen::Vector3d c1 = pose.R * a.t + pose.t;
  const Eigen::Vector3d d2 = (b.R * ac.x_prime).normalized();
  const Eigen::Vector3d c2 = b.t;

  const double d12 = d1.dot(d2);
  const double denom = 1.0 - d12 * d12;
  if (denom < 1e-12) return kPi;
  const Eigen::Vector3d r = c2 - c1;
  const double rd1 = r.dot(d1), rd2 = r.dot(d2);
  const double s = (rd1 - d12 * rd2) / denom;
  const double u = (d12 * rd1 - rd2) / denom;
  if (s <= 0.0 || u <= 0.0) return kPi;

  const Eigen::Vector3d X = 0.5 * ((c1 + s * d1) + (c2 + u * d2));
  const Eigen::Vector3d v1 = X - c1, v2 = X - c2;
  const double a1 = std::atan2(d1.cross(v1).norm(), d1.dot(v1));
  const double a2 = std::atan2(d2.cross(v2).norm(), d2.dot(v2));
  return std::max(a1, a2);
}

// True when every held-out constraint row is satisfied at the hypothesis to
// within tol relative to the row magnitude. Rejected hypotheses never reach
// inlier counting.
inline bool preemptive_check(std::span<const ConstraintRow> unused_rows, double q_y,
                             const Eigen::VectorXd &translation, double tol) {
  for (const ConstraintRow &row : unused_rows) {
    if (std::abs(row.eval(q_y, translation)) > tol * row.scale(q_y, translation)) return false;
  }
  return true;
}

namespace detail {

inline void sample_distinct(Rng &rng, int n, int k, int *out) {
  for (int i = 0; i < k; ++i) {
    bool fresh = false;
    while (!fresh) {
      out[i] = rng.below(n);
      fresh = true;
      for (int j = 0; j < i; ++j) fresh = fresh && out[i] != out[j];
    }
  }
}

inline int adaptive_iterations(double confidence, double inlier_ratio, int sample_size) {
  const double p_good = std::pow(inlier_ratio, sample_size);
  if (p_good >= 1.0) return 0;
  if (p_good <= 1e-12) return std::numeric_limits<int>::max();
  const double n = std::log(1.0 - confidence) / std::log(1.0 - p_good);
  if (n >= static_cast<double>(std::numeric_limits<int>::max())) return std::numeric_limits<int>::max();
  return static_cast<int>(std::ceil(n));
}

}  // namespace detail

// Adaptive RANSAC over affine correspondences. Sampling is uniform over all
// correspondences; hypotheses from each minimal sample pass the preemptive
// row test before any inlier counting; the surviving hypothesis with the
// highest inlier count (ties broken by lower inlier error sum) wins.
// Deterministic for a fixed seed.
inline RansacResult ransac_estimate(const CameraRig &rig,
                                    std::span<const AffineCorrespondence> acs,
                                    const RansacConfig &config,
                                    const AttitudePair *attitudes = nullptr) {
  config.validate();
  const int n = static_cast<int>(acs.size());
  const int k = minimal_sample_size(config.solver);
  if (n < k) throw std::invalid_argument("not enough correspondences for the chosen solver");
  if (config.solver == SolverKind::Vertical2AC && attitudes == nullptr)
    throw std::invalid_argument("vertical solver requires roll/pitch attitudes for both frames");

  Rng rng(config.seed);
  RansacResult best;
  best.inlier_count = -1;

  int target = config.max_iterations;
  int iter = 0;
  for (; iter < target; ++iter) {
    int idx[2] = {0, 0};
    detail::sample_distinct(rng, n, k, idx);

    SolverOutput out;
    switch (config.solver) {
      case SolverKind::Planar1AC: out = solve_planar_1ac(rig, acs[idx[0]]); break;
      case SolverKind::Planar2AC: out = solve_planar_2ac(rig, acs[idx[0]], acs[idx[1]]); break;
      case SolverKind::Vertical2AC:
        out = solve_vertical_2ac(rig, acs[idx[0]], acs[idx[1]], *attitudes);
        break;
    }

    for (size_t h = 0; h < out.hypotheses.size(); ++h) {
      ++best.stats.hypotheses_generated;
      if (config.preemptive &&
          !preemptive_check(out.unused_rows, out.diagnostics[h].root,
                            out.diagnostics[h].system_translation,
                            config.preemptive_residual_tol)) {
        ++best.stats.hypotheses_rejected_preemptively;
        continue;
      }
      ++best.stats.hypotheses_scored;
      best.stats.point_evaluations += n;
      int count = 0;
      double err_sum = 0.0;
      for (const AffineCorrespondence &ac : acs) {
        const double e = angular_inlier_error(rig, ac, out.hypotheses[h]);
        if (e < config.inlier_threshold) {
          ++count;
          err_sum += e;
        }
      }
      if (count > best.inlier_count ||
          (count == best.inlier_count && err_sum < best.inlier_error_sum)) {
        best.inlier_count = count;
        best.inlier_error_sum = err_sum;
        best.pose = out.hypotheses[h];
        best.status = RansacStatus::Ok;
        target = std::min(config.max_iterations,
                          std::max(config.min_iterations,
                                   detail::adaptive_iterations(
                                       config.confidence, static_cast<double>(count) / n, k)));
      }
    }
  }
  best.stats.iterations = iter;

  if (best.status != RansacStatus::Ok) {
    best.inlier_count = 0;
    return best;
  }

  // Final mask from a clean re-scoring of the winning pose.
  best.inlier_mask.assign(static_cast<size_t>(n), 0);
  best.inlier_count = 0;
  best.inlier_error_sum = 0.0;
  for (int i = 0; i < n; ++i) {
    const double e = angular_inlier_error(rig, acs[static_cast<size_t>(i)], best.pose);
    if (e < config.inlier_threshold) {
      best.inlier_mask[static_cast<size_t>(i)] = 1;
      ++best.inlier_count;
      best.inlier_error_sum += e;
    }
  }
  return best;
}

}  // namespace acpose
