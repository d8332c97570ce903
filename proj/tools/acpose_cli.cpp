// Command line front end: synthetic dataset emission, robust estimation,
// benchmark grids and error evaluation over the line-delimited dataset and
// results formats.

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include "acpose/dataset.hpp"
#include "acpose/experiment.hpp"
#include "acpose/ransac.hpp"
#include "acpose/synthetic.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitDataError = 1;
constexpr int kExitEstimationError = 2;
constexpr double kDeg = 3.14159265358979323846 / 180.0;

acpose::SolverKind parse_solver(const std::string &name) {
  if (name == "planar-1ac") return acpose::SolverKind::Planar1AC;
  if (name == "planar-2ac") return acpose::SolverKind::Planar2AC;
  if (name == "vertical-2ac") return acpose::SolverKind::Vertical2AC;
  throw acpose::DataError("unknown solver '" + name + "'");
}

struct StreamChoice {
  std::ifstream in_file;
  std::ofstream out_file;

  std::istream &in(const std::string &path) {
    if (path.empty() || path == "-") return std::cin;
    in_file.open(path);
    if (!in_file) throw acpose::DataError("cannot open input '" + path + "'");
    return in_file;
  }

  std::ostream &out(const std::string &path) {
    if (path.empty() || path == "-") return std::cout;
    out_file.open(path);
    if (!out_file) throw acpose::DataError("cannot open output '" + path + "'");
    return out_file;
  }
};

struct SynthOptions {
  uint64_t seed = 1;
  int pairs = 1;
  int acs = 100;
  std::string motion = "planar";
  double noise_px = 0.0;
  double nonplanar_deg = 0.0;
  double imu_noise_deg = 0.0;
  double outlier_frac = 0.0;
  bool equal_heights = false;
  std::string pairing = "mixed";
  std::string output;
};

int run_synth(const SynthOptions &opt) {
  acpose::SceneConfig scene;
  scene.ac_count = opt.acs;
  scene.ground_plane_acs = opt.acs / 2;
  if (opt.equal_heights) scene.camera_height_gap = 0.0;
  if (opt.pairing == "mixed")
    scene.pairing = acpose::SceneConfig::Pairing::Mixed;
  else if (opt.pairing == "intra")
    scene.pairing = acpose::SceneConfig::Pairing::Intra;
  else if (opt.pairing == "cross")
    scene.pairing = acpose::SceneConfig::Pairing::Cross;
  else
    throw acpose::DataError("unknown pairing '" + opt.pairing + "'");

  acpose::MotionSpec motion;
  if (opt.motion == "planar")
    motion.kind = acpose::MotionKind::Planar;
  else if (opt.motion == "vertical")
    motion.kind = acpose::MotionKind::VerticalAligned;
  else
    throw acpose::DataError("unknown motion '" + opt.motion + "'");

  acpose::NoiseConfig noise;
  noise.image_noise_px = opt.noise_px;
  noise.nonplanar_noise_deg = opt.nonplanar_deg;
  noise.imu_noise_deg = opt.imu_noise_deg;
  noise.outlier_fraction = opt.outlier_frac;

  acpose::Dataset ds;
  for (int p = 0; p < opt.pairs; ++p) {
    const uint64_t seed = acpose::Rng::derive(opt.seed, static_cast<uint64_t>(p), 0);
    const acpose::SyntheticInstance inst = acpose::generate_instance(scene, motion, noise, seed);
    if (p == 0) ds.rig = inst.rig;
    acpose::Dataset::FramePair pair;
    pair.id = std::to_string(p);
    pair.acs = inst.acs;
    pair.gt = inst.pose_gt;
    if (motion.kind == acpose::MotionKind::VerticalAligned) {
      const auto &m = inst.attitudes_measured;
      pair.attitude_deg = Eigen::Vector4d(m.frame_k.roll / kDeg, m.frame_k.pitch / kDeg,
                                          m.frame_k1.roll / kDeg, m.frame_k1.pitch / kDeg);
    }
    ds.pairs.push_back(std::move(pair));
  }

  StreamChoice streams;
  acpose::save_dataset(streams.out(opt.output), ds);
  return kExitOk;
}

struct EstimateOptions {
  std::string input;
  std::string output;
  std::string solver = "planar-2ac";
  double threshold_deg = 0.1;
  double confidence = 0.99;
  uint64_t seed = 0;
  std::string preemptive = "on";
  int min_iterations = 100;
  int max_iterations = 10000;
  int workers = 1;
};

int run_estimate(const EstimateOptions &opt) {
  StreamChoice streams;
  const acpose::Dataset ds = acpose::load_dataset(streams.in(opt.input));
  for (const std::string &w : ds.warnings) std::cerr << "warning: " << w << '\n';

  acpose::RansacConfig cfg;
  cfg.solver = parse_solver(opt.solver);
  cfg.inlier_threshold = opt.threshold_deg * kDeg;
  cfg.confidence = opt.confidence;
  cfg.min_iterations = opt.min_iterations;
  cfg.max_iterations = opt.max_iterations;
  if (opt.preemptive == "on")
    cfg.preemptive = true;
  else if (opt.preemptive == "off")
    cfg.preemptive = false;
  else
    throw acpose::DataError("--preemptive expects on or off");
  cfg.validate();

  if (cfg.solver == acpose::SolverKind::Vertical2AC) {
    for (const auto &pair : ds.pairs)
      if (!pair.attitude_deg)
        throw acpose::DataError("pair '" + pair.id +
                                "' has no attitude record; the vertical solver needs roll/pitch");
  }

  std::vector<acpose::PairResult> results(ds.pairs.size());
  std::vector<uint8_t> failed(ds.pairs.size(), 0);
  acpose::detail::parallel_for(static_cast<int>(ds.pairs.size()), opt.workers, [&](int i) {
    const auto &pair = ds.pairs[static_cast<size_t>(i)];
    acpose::RansacConfig pair_cfg = cfg;
    pair_cfg.seed = acpose::Rng::derive(opt.seed, static_cast<uint64_t>(i), 1);
    acpose::PairResult out;
    out.id = pair.id;
    out.ac_count = static_cast<int>(pair.acs.size());
    out.gt = pair.gt;
    try {
      acpose::AttitudePair att;
      const bool vertical = pair_cfg.solver == acpose::SolverKind::Vertical2AC;
      if (vertical) att = pair.attitudes_radians();
      const acpose::RansacResult res =
          acpose::ransac_estimate(ds.rig, pair.acs, pair_cfg, vertical ? &att : nullptr);
      if (res.status != acpose::RansacStatus::Ok) {
        failed[static_cast<size_t>(i)] = 1;
      } else {
        out.pose = res.pose;
        out.inlier_count = res.inlier_count;
        out.iterations = res.stats.iterations;
      }
    } catch (const std::exception &) {
      failed[static_cast<size_t>(i)] = 1;
    }
    results[static_cast<size_t>(i)] = std::move(out);
  });

  std::vector<acpose::PairResult> ok_results;
  int failures = 0;
  for (size_t i = 0; i < results.size(); ++i) {
    if (failed[i]) {
      ++failures;
      std::cerr << "estimation failed for pair '" << results[i].id << "'\n";
    } else {
      ok_results.push_back(results[i]);
    }
  }
  acpose::save_results(streams.out(opt.output), ok_results);
  return failures == 0 ? kExitOk : kExitEstimationError;
}

struct BenchOptions {
  std::string grid = "imagenoise-planar";
  int trials = 200;
  uint64_t seed = 1;
  int workers = 1;
  std::string preemptive = "on";
  std::string output;
};

acpose::GridSpec named_grid(const std::string &name) {
  using acpose::MotionKind;
  using acpose::SolverKind;
  using acpose::SweepKind;
  acpose::GridSpec grid;
  grid.scene.pairing = acpose::SceneConfig::Pairing::Cross;
  grid.ransac.min_iterations = 200;
  if (name == "imagenoise-planar") {
    grid.solvers = {SolverKind::Planar1AC, SolverKind::Planar2AC};
    grid.sweep = SweepKind::ImageNoise;
    grid.levels = {0.0, 0.5, 1.0, 1.5, 2.0};
    grid.motion.kind = MotionKind::Planar;
  } else if (name == "imagenoise-vertical") {
    grid.solvers = {SolverKind::Vertical2AC};
    grid.sweep = SweepKind::ImageNoise;
    grid.levels = {0.0, 0.5, 1.0, 1.5, 2.0};
    grid.motion.kind = MotionKind::VerticalAligned;
  } else if (name == "nonplanar-planar") {
    grid.solvers = {SolverKind::Planar1AC, SolverKind::Planar2AC};
    grid.sweep = SweepKind::NonplanarNoise;
    grid.levels = {0.0, 0.1, 0.2, 0.4, 0.6, 0.8, 1.0};
    grid.motion.kind = MotionKind::Planar;
    grid.base_noise.image_noise_px = 1.0;
  } else if (name == "imunoise-vertical") {
    grid.solvers = {SolverKind::Vertical2AC};
    grid.sweep = SweepKind::ImuNoise;
    grid.levels = {0.0, 0.2, 0.4, 0.6, 0.8, 1.0};
    grid.motion.kind = MotionKind::VerticalAligned;
    grid.base_noise.image_noise_px = 1.0;
  } else if (name == "outlier-planar") {
    grid.solvers = {SolverKind::Planar2AC};
    grid.sweep = SweepKind::OutlierFraction;
    grid.levels = {0.0, 0.1, 0.2, 0.3};
    grid.motion.kind = MotionKind::Planar;
    grid.base_noise.image_noise_px = 0.5;
  } else {
    throw acpose::DataError("unknown grid '" + name + "'");
  }
  return grid;
}

int run_bench(const BenchOptions &opt) {
  acpose::GridSpec grid = named_grid(opt.grid);
  grid.trials = opt.trials;
  grid.master_seed = opt.seed;
  grid.workers = opt.workers;
  grid.ransac.preemptive = opt.preemptive == "on";
  const std::vector<acpose::CellResult> table = acpose::run_experiment_grid(grid);
  StreamChoice streams;
  acpose::write_csv(streams.out(opt.output), table);
  return kExitOk;
}

struct EvalOptions {
  std::string input;
  std::string output;
  std::string kitti_gt;
};

int run_eval(const EvalOptions &opt) {
  StreamChoice streams;
  std::vector<acpose::PairResult> results = acpose::load_results(streams.in(opt.input));
  if (!opt.kitti_gt.empty()) {
    std::ifstream kf(opt.kitti_gt);
    if (!kf) throw acpose::DataError("cannot open KITTI pose file '" + opt.kitti_gt + "'");
    const std::vector<acpose::KittiPose> poses = acpose::load_kitti_poses(kf);
    for (acpose::PairResult &r : results) {
      size_t frame = 0;
      const auto res = std::from_chars(r.id.data(), r.id.data() + r.id.size(), frame);
      if (res.ec != std::errc() || frame + 1 >= poses.size())
        throw acpose::DataError("pair '" + r.id + "' has no matching KITTI pose row");
      r.gt = acpose::kitti_relative_pose(poses[frame], poses[frame + 1]);
    }
  }
  const std::vector<acpose::EvalRow> rows = acpose::evaluate_results(results);
  acpose::write_eval_csv(streams.out(opt.output), rows);
  return kExitOk;
}

}  // namespace

int main(int argc, char **argv) {
  CLI::App app{"Relative pose of a multi-camera rig from affine correspondences"};
  app.require_subcommand(1);

  SynthOptions synth;
  CLI::App *synth_cmd = app.add_subcommand("synth", "emit a synthetic dataset");
  synth_cmd->add_option("--seed", synth.seed, "master seed");
  synth_cmd->add_option("--pairs", synth.pairs, "number of frame pairs");
  synth_cmd->add_option("--acs", synth.acs, "correspondences per pair");
  synth_cmd->add_option("--motion", synth.motion, "planar|vertical");
  synth_cmd->add_option("--noise-px", synth.noise_px, "image noise std, pixels");
  synth_cmd->add_option("--nonplanar-deg", synth.nonplanar_deg, "non-planar motion noise, degrees");
  synth_cmd->add_option("--imu-noise-deg", synth.imu_noise_deg, "roll/pitch noise std, degrees");
  synth_cmd->add_option("--outlier-frac", synth.outlier_frac, "fraction of gross outliers");
  synth_cmd->add_flag("--equal-heights", synth.equal_heights,
                      "mount both cameras at the same height");
  synth_cmd->add_option("--pairing", synth.pairing, "mixed|intra|cross");
  synth_cmd->add_option("-o,--output", synth.output, "output file (default stdout)");

  EstimateOptions est;
  CLI::App *est_cmd = app.add_subcommand("estimate", "estimate per-pair poses from a dataset");
  est_cmd->add_option("-i,--input", est.input, "dataset file (default stdin)");
  est_cmd->add_option("-o,--output", est.output, "results file (default stdout)");
  est_cmd->add_option("--solver", est.solver, "planar-1ac|planar-2ac|vertical-2ac");
  est_cmd->add_option("--threshold-deg", est.threshold_deg, "inlier threshold angle, degrees");
  est_cmd->add_option("--confidence", est.confidence, "RANSAC confidence");
  est_cmd->add_option("--seed", est.seed, "RANSAC seed");
  est_cmd->add_option("--preemptive", est.preemptive, "on|off");
  est_cmd->add_option("--min-iterations", est.min_iterations, "RANSAC iteration floor");
  est_cmd->add_option("--max-iterations", est.max_iterations, "RANSAC iteration cap");
  est_cmd->add_option("--workers", est.workers, "parallel workers over pairs");

  BenchOptions bench;
  CLI::App *bench_cmd = app.add_subcommand("bench", "run a named experiment grid");
  bench_cmd->add_option("--grid", bench.grid,
                        "imagenoise-planar|imagenoise-vertical|nonplanar-planar|"
                        "imunoise-vertical|outlier-planar");
  bench_cmd->add_option("--trials", bench.trials, "trials per cell");
  bench_cmd->add_option("--seed", bench.seed, "master seed");
  bench_cmd->add_option("--workers", bench.workers, "parallel workers over trials");
  bench_cmd->add_option("--preemptive", bench.preemptive, "on|off");
  bench_cmd->add_option("-o,--output", bench.output, "CSV output (default stdout)");

  EvalOptions eval;
  CLI::App *eval_cmd = app.add_subcommand("eval", "error table from results with ground truth");
  eval_cmd->add_option("-i,--input", eval.input, "results file (default stdin)");
  eval_cmd->add_option("-o,--output", eval.output, "CSV output (default stdout)");
  eval_cmd->add_option("--kitti-gt", eval.kitti_gt,
                       "KITTI pose file; pair ids select consecutive rows");

  CLI11_PARSE(app, argc, argv);

  try {
    if (synth_cmd->parsed()) return run_synth(synth);
    if (est_cmd->parsed()) return run_estimate(est);
    if (bench_cmd->parsed()) return run_bench(bench);
    if (eval_cmd->parsed()) return run_eval(eval);
  } catch (const acpose::DataError &e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitDataError;
  } catch (const std::invalid_argument &e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitDataError;
  } catch (const std::exception &e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitEstimationError;
  }
  return kExitOk;
}
