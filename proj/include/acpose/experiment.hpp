#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <future>
#include <limits>
#include <ostream>
#include <string>
#include <thread>
#include <vector>

#include "acpose/metrics.hpp"
#include "acpose/ransac.hpp"
#include "acpose/synthetic.hpp"

namespace acpose {

enum class SweepKind { ImageNoise, NonplanarNoise, ImuNoise, OutlierFraction };

inline const char *sweep_name(SweepKind kind) {
  switch (kind) {
    case SweepKind::ImageNoise: return "image_px";
    case SweepKind::NonplanarNoise: return "nonplanar_deg";
    case SweepKind::ImuNoise: return "imu_deg";
    case SweepKind::OutlierFraction: return "outlier_frac";
  }
  return "unknown";
}

struct GridSpec {
  std::vector<SolverKind> solvers{SolverKind::Planar2AC};
  SweepKind sweep = SweepKind::ImageNoise;
  std::vector<double> levels{0.0, 0.5, 1.0, 1.5, 2.0};
  int trials = 200;
  uint64_t master_seed = 1;
  SceneConfig scene;
  MotionSpec motion;
  NoiseConfig base_noise;  // fields not being swept
  RansacConfig ransac;     // solver field is overridden per cell
  int workers = 1;
};

struct CellResult {
  std::string solver;
  std::string noise_kind;
  double noise_level = 0.0;
  int trials = 0;
  double median_rot_err_deg = 0.0;
  double median_trans_err = 0.0;
  double median_dir_err_deg = 0.0;
  double fail_rate = 0.0;
  double mean_ransac_iters = 0.0;
};

struct TrialResult {
  bool ok = false;
  double rot_err_deg = std::numeric_limits<double>::quiet_NaN();
  double trans_err = std::numeric_limits<double>::quiet_NaN();
  double dir_err_deg = std::numeric_limits<double>::quiet_NaN();
  int iterations = 0;
  RansacStats stats;
  PoseHypothesis pose;
  int true_inliers_recovered = 0;
  int true_inlier_count = 0;
};

// One benchmark trial: synthesize an instance, run the estimator, measure
// against the generated motion.
inline TrialResult run_trial(const SceneConfig &scene, const MotionSpec &motion,
                             const NoiseConfig &noise, const RansacConfig &ransac,
                             uint64_t trial_seed) {
  TrialResult out;
  const SyntheticInstance inst = generate_instance(scene, motion, noise, trial_seed);
  RansacConfig cfg = ransac;
  cfg.seed = Rng::derive(trial_seed, 0x5eed, 0);
  RansacResult res;
  try {
    res = ransac_estimate(inst.rig, inst.acs, cfg,
                          cfg.solver == SolverKind::Vertical2AC ? &inst.attitudes_measured
                                                                : nullptr);
  } catch (const std::exception &) {
    return out;
  }
  out.iterations = res.stats.iterations;
  out.stats = res.stats;
  if (res.status != RansacStatus::Ok) return out;

  out.ok = true;
  out.pose = res.pose;
  out.rot_err_deg = rotation_error_deg(inst.pose_gt.R, res.pose.R);
  out.trans_err = translation_error(inst.pose_gt.t, res.pose.t);
  if (res.pose.t.norm() > 0.0 && inst.pose_gt.t.norm() > 0.0)
    out.dir_err_deg = translation_direction_error_deg(inst.pose_gt.t, res.pose.t);
  for (size_t i = 0; i < inst.acs.size(); ++i) {
    if (!inst.inlier[i]) continue;
    ++out.true_inlier_count;
    if (res.inlier_mask[i]) ++out.true_inliers_recovered;
  }
  return out;
}

namespace detail {

inline double median_of(std::vector<double> v) {
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(v.begin(), v.end());
  const size_t n = v.size();
  return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

// Index-ordered parallel map; the work partition cannot affect results
// because every trial derives its own seed.
template <typename Fn>
void parallel_for(int n, int workers, Fn &&fn) {
  workers = std::max(1, workers);
  if (workers == 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<int> cursor{0};
  std::vector<std::thread> pool;
  pool.reserve(static_cast<size_t>(workers));
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&]() {
      for (int i = cursor.fetch_add(1); i < n; i = cursor.fetch_add(1)) fn(i);
    });
  }
  for (auto &t : pool) t.join();
}

}  // namespace detail

// Runs every (solver, level) cell of the grid; per-trial seeds are derived
// from (master seed, cell index, trial index) so tables are reproducible at
// any worker count. Failed trials are excluded from medians and reported in
// fail_rate.
inline std::vector<CellResult> run_experiment_grid(const GridSpec &grid) {
  std::vector<CellResult> table;
  int cell_index = 0;
  for (SolverKind solver : grid.solvers) {
    for (double level : grid.levels) {
      NoiseConfig noise = grid.base_noise;
      switch (grid.sweep) {
        case SweepKind::ImageNoise: noise.image_noise_px = level; break;
        case SweepKind::NonplanarNoise: noise.nonplanar_noise_deg = level; break;
        case SweepKind::ImuNoise: noise.imu_noise_deg = level; break;
        case SweepKind::OutlierFraction: noise.outlier_fraction = level; break;
      }
      RansacConfig ransac = grid.ransac;
      ransac.solver = solver;

      std::vector<TrialResult> results(static_cast<size_t>(grid.trials));
      detail::parallel_for(grid.trials, grid.workers, [&](int t) {
        const uint64_t seed =
            Rng::derive(grid.master_seed, static_cast<uint64_t>(cell_index), static_cast<uint64_t>(t));
        results[static_cast<size_t>(t)] = run_trial(grid.scene, grid.motion, noise, ransac, seed);
      });

      CellResult cell;
      cell.solver = solver_name(solver);
      cell.noise_kind = sweep_name(grid.sweep);
      cell.noise_level = level;
      cell.trials = grid.trials;
      std::vector<double> rot, trans, dir;
      double iter_sum = 0.0;
      int fails = 0;
      for (const TrialResult &r : results) {
        iter_sum += r.iterations;
        if (!r.ok) {
          ++fails;
          continue;
        }
        rot.push_back(r.rot_err_deg);
        trans.push_back(r.trans_err);
        if (std::isfinite(r.dir_err_deg)) dir.push_back(r.dir_err_deg);
      }
      cell.median_rot_err_deg = detail::median_of(std::move(rot));
      cell.median_trans_err = detail::median_of(std::move(trans));
      cell.median_dir_err_deg = detail::median_of(std::move(dir));
      cell.fail_rate = static_cast<double>(fails) / grid.trials;
      cell.mean_ransac_iters = iter_sum / grid.trials;
      table.push_back(std::move(cell));
      ++cell_index;
    }
  }
  return table;
}

inline void write_csv(std::ostream &os, std::span<const CellResult> table) {
  os << "solver,noise_kind,noise_level,trials,median_rot_err_deg,median_trans_err,"
        "median_dir_err_deg,fail_rate,mean_ransac_iters\n";
  char line[512];
  for (const CellResult &c : table) {
    std::snprintf(line, sizeof(line), "%s,%s,%.17g,%d,%.17g,%.17g,%.17g,%.17g,%.17g\n",
                  c.solver.c_str(), c.noise_kind.c_str(), c.noise_level, c.trials,
                  c.median_rot_err_deg, c.median_trans_err, c.median_dir_err_deg, c.fail_rate,
                  c.mean_ransac_iters);
    os << line;
  }
}

}  // namespace acpose
