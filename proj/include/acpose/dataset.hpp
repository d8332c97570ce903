#pragma once

#include <Eigen/Dense>
#include <Eigen/SVD>

#include <charconv>
#include <cstdio>
#include <istream>
#include <optional>
#include <ostream>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "acpose/metrics.hpp"
#include "acpose/rig_geometry.hpp"

namespace acpose {

class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Line-delimited dataset: one record per line, fixed field order, floats with
// 17 significant digits so canonical files round-trip byte for byte.
//
//   # acpose dataset v1
//   camera r00 r01 r02 r10 r11 r12 r20 r21 r22 tx ty tz
//   pair <id>
//   attitude <roll_k> <pitch_k> <roll_k1> <pitch_k1>     (degrees)
//   gt r00 ... r22 tx ty tz
//   ac <cam_k> <cam_k1> <x0> <x1> <x'0> <x'1> <a00> <a01> <a10> <a11>
//
// camera records precede pairs; attitude/gt/ac rows attach to the most
// recent pair record. Angles are degrees in files, radians in memory.
struct Dataset {
  struct FramePair {
    std::string id;
    std::vector<AffineCorrespondence> acs;
    std::optional<Eigen::Vector4d> attitude_deg;  // roll_k pitch_k roll_k1 pitch_k1
    std::optional<PoseHypothesis> gt;

    AttitudePair attitudes_radians() const {
      if (!attitude_deg) throw DataError("frame pair " + id + " has no attitude record");
      constexpr double d2r = 3.14159265358979323846 / 180.0;
      return {{(*attitude_deg)(0) * d2r, (*attitude_deg)(1) * d2r},
              {(*attitude_deg)(2) * d2r, (*attitude_deg)(3) * d2r}};
    }
  };

  CameraRig rig;
  std::vector<FramePair> pairs;
  std::vector<std::string> warnings;
};

namespace io_detail {

inline std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

struct LineTokenizer {
  std::string_view rest;
  int line = 0;

  std::optional<std::string_view> next() {
    size_t i = 0;
    while (i < rest.size() && (rest[i] == ' ' || rest[i] == '\t')) ++i;
    rest.remove_prefix(i);
    if (rest.empty()) return std::nullopt;
    size_t j = 0;
    while (j < rest.size() && rest[j] != ' ' && rest[j] != '\t') ++j;
    std::string_view tok = rest.substr(0, j);
    rest.remove_prefix(j);
    return tok;
  }

  double next_double(const char *what) {
    const auto tok = next();
    if (!tok) throw DataError("line " + std::to_string(line) + ": missing " + what);
    double v = 0.0;
    const auto res = std::from_chars(tok->data(), tok->data() + tok->size(), v);
    if (res.ec != std::errc() || res.ptr != tok->data() + tok->size())
      throw DataError("line " + std::to_string(line) + ": bad number '" + std::string(*tok) +
                      "' for " + what);
    return v;
  }

  int next_int(const char *what) {
    const auto tok = next();
    if (!tok) throw DataError("line " + std::to_string(line) + ": missing " + what);
    int v = 0;
    const auto res = std::from_chars(tok->data(), tok->data() + tok->size(), v);
    if (res.ec != std::errc() || res.ptr != tok->data() + tok->size())
      throw DataError("line " + std::to_string(line) + ": bad integer '" + std::string(*tok) +
                      "' for " + what);
    return v;
  }

  void expect_end() {
    if (next()) throw DataError("line " + std::to_string(line) + ": trailing fields");
  }
};

// Rotations within 1e-6 of orthonormal are snapped to the nearest rotation
// with a warning; anything worse is an error.
inline Eigen::Matrix3d checked_rotation(const Eigen::Matrix3d &R, int line,
                                        std::vector<std::string> *warnings) {
  const double dev = (R.transpose() * R - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff();
  const double ddet = std::abs(R.determinant() - 1.0);
  if (dev > 1e-6 || ddet > 1e-6)
    throw DataError("line " + std::to_string(line) + ": rotation is not orthonormal (deviation " +
                    format_double(std::max(dev, ddet)) + ")");
  if (dev > 1e-12 || ddet > 1e-12) {
    Eigen::JacobiSVD<Eigen::Matrix3d> svd(R, Eigen::ComputeFullU | Eigen::ComputeFullV);
    Eigen::Matrix3d fixed = svd.matrixU() * svd.matrixV().transpose();
    if (fixed.determinant() < 0.0) {
      Eigen::Matrix3d flip = Eigen::Matrix3d::Identity();
      flip(2, 2) = -1.0;
      fixed = svd.matrixU() * flip * svd.matrixV().transpose();
    }
    if (warnings)
      warnings->push_back("line " + std::to_string(line) + ": rotation re-orthonormalized");
    return fixed;
  }
  return R;
}

inline void read_rotation_translation(LineTokenizer &tok, Eigen::Matrix3d *R, Eigen::Vector3d *t) {
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c) (*R)(r, c) = tok.next_double("rotation entry");
  for (int r = 0; r < 3; ++r) (*t)(r) = tok.next_double("translation entry");
}

inline void write_rotation_translation(std::ostream &os, const Eigen::Matrix3d &R,
                                       const Eigen::Vector3d &t) {
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c) os << ' ' << format_double(R(r, c));
  for (int r = 0; r < 3; ++r) os << ' ' << format_double(t(r));
}

}  // namespace io_detail

inline Dataset load_dataset(std::istream &is) {
  using io_detail::LineTokenizer;
  Dataset ds;
  std::string line;
  int line_no = 0;
  bool any_pair = false;
  while (std::getline(is, line)) {
    ++line_no;
    LineTokenizer tok{line, line_no};
    const auto kind = tok.next();
    if (!kind || (*kind)[0] == '#') continue;

    if (*kind == "camera") {
      if (any_pair) throw DataError("line " + std::to_string(line_no) + ": camera after pair records");
      RigCamera cam;
      io_detail::read_rotation_translation(tok, &cam.R, &cam.t);
      tok.expect_end();
      cam.R = io_detail::checked_rotation(cam.R, line_no, &ds.warnings);
      if (!cam.t.allFinite())
        throw DataError("line " + std::to_string(line_no) + ": non-finite camera translation");
      ds.rig.cameras.push_back(cam);
    } else if (*kind == "pair") {
      const auto id = tok.next();
      if (!id) throw DataError("line " + std::to_string(line_no) + ": pair record without id");
      tok.expect_end();
      any_pair = true;
      ds.pairs.push_back({std::string(*id), {}, std::nullopt, std::nullopt});
    } else if (*kind == "attitude" || *kind == "gt" || *kind == "ac") {
      if (ds.pairs.empty())
        throw DataError("line " + std::to_string(line_no) + ": '" + std::string(*kind) +
                        "' record before any pair");
      Dataset::FramePair &pair = ds.pairs.back();
      if (*kind == "attitude") {
        Eigen::Vector4d att;
        for (int i = 0; i < 4; ++i) att(i) = tok.next_double("attitude angle");
        tok.expect_end();
        pair.attitude_deg = att;
      } else if (*kind == "gt") {
        PoseHypothesis gt;
        io_detail::read_rotation_translation(tok, &gt.R, &gt.t);
        tok.expect_end();
        gt.R = io_detail::checked_rotation(gt.R, line_no, &ds.warnings);
        pair.gt = gt;
      } else {
        AffineCorrespondence ac;
        ac.camera_k = tok.next_int("camera index (frame k)");
        ac.camera_k1 = tok.next_int("camera index (frame k+1)");
        ac.x.x() = tok.next_double("x0");
        ac.x.y() = tok.next_double("x1");
        ac.x.z() = 1.0;
        ac.x_prime.x() = tok.next_double("x'0");
        ac.x_prime.y() = tok.next_double("x'1");
        ac.x_prime.z() = 1.0;
        ac.A(0, 0) = tok.next_double("a00");
        ac.A(0, 1) = tok.next_double("a01");
        ac.A(1, 0) = tok.next_double("a10");
        ac.A(1, 1) = tok.next_double("a11");
        tok.expect_end();
        try {
          ac.validate(&ds.rig);
        } catch (const std::invalid_argument &e) {
          throw DataError("line " + std::to_string(line_no) + ": " + e.what());
        }
        pair.acs.push_back(ac);
      }
    } else {
      throw DataError("line " + std::to_string(line_no) + ": unknown record '" +
                      std::string(*kind) + "'");
    }
  }
  try {
    ds.rig.validate(1e-10);
  } catch (const std::invalid_argument &e) {
    throw DataError(std::string("rig: ") + e.what());
  }
  return ds;
}

inline void save_dataset(std::ostream &os, const Dataset &ds) {
  os << "# acpose dataset v1\n";
  for (const RigCamera &cam : ds.rig.cameras) {
    os << "camera";
    io_detail::write_rotation_translation(os, cam.R, cam.t);
    os << '\n';
  }
  for (const Dataset::FramePair &pair : ds.pairs) {
    os << "pair " << pair.id << '\n';
    if (pair.attitude_deg) {
      os << "attitude";
      for (int i = 0; i < 4; ++i) os << ' ' << io_detail::format_double((*pair.attitude_deg)(i));
      os << '\n';
    }
    if (pair.gt) {
      os << "gt";
      io_detail::write_rotation_translation(os, pair.gt->R, pair.gt->t);
      os << '\n';
    }
    for (const AffineCorrespondence &ac : pair.acs) {
      os << "ac " << ac.camera_k << ' ' << ac.camera_k1;
      os << ' ' << io_detail::format_double(ac.x.x()) << ' ' << io_detail::format_double(ac.x.y());
      os << ' ' << io_detail::format_double(ac.x_prime.x()) << ' '
         << io_detail::format_double(ac.x_prime.y());
      os << ' ' << io_detail::format_double(ac.A(0, 0)) << ' '
         << io_detail::format_double(ac.A(0, 1)) << ' ' << io_detail::format_double(ac.A(1, 0))
         << ' ' << io_detail::format_double(ac.A(1, 1)) << '\n';
    }
  }
}

// ---------------------------------------------------------------------------
// KITTI odometry ground truth: one 3x4 row-major camera-to-world matrix per
// line. Values survive a parse/emit cycle exactly.
// ---------------------------------------------------------------------------

using KittiPose = Eigen::Matrix<double, 3, 4>;

inline std::vector<KittiPose> load_kitti_poses(std::istream &is) {
  std::vector<KittiPose> poses;
  std::string line;
  int line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    io_detail::LineTokenizer tok{line, line_no};
    if (line.empty()) continue;
    KittiPose p;
    for (int r = 0; r < 3; ++r)
      for (int c = 0; c < 4; ++c) p(r, c) = tok.next_double("pose entry");
    tok.expect_end();
    poses.push_back(p);
  }
  return poses;
}

inline void save_kitti_poses(std::ostream &os, std::span<const KittiPose> poses) {
  for (const KittiPose &p : poses) {
    for (int r = 0; r < 3; ++r)
      for (int c = 0; c < 4; ++c) {
        if (r + c > 0) os << ' ';
        os << io_detail::format_double(p(r, c));
      }
    os << '\n';
  }
}

// Relative motion between consecutive camera-to-world poses, as the frame-k
// to frame-k+1 coordinate map used throughout.
inline PoseHypothesis kitti_relative_pose(const KittiPose &k, const KittiPose &k1) {
  PoseHypothesis rel;
  const Eigen::Matrix3d Rk = k.leftCols<3>(), Rk1 = k1.leftCols<3>();
  const Eigen::Vector3d ck = k.col(3), ck1 = k1.col(3);
  rel.R = Rk1.transpose() * Rk;
  rel.t = Rk1.transpose() * (ck - ck1);
  return rel;
}

// ---------------------------------------------------------------------------
// Estimation results: per-pair pose plus inlier statistics, with ground truth
// carried along so downstream evaluation needs a single stream.
// ---------------------------------------------------------------------------

struct PairResult {
  std::string id;
  PoseHypothesis pose;
  int inlier_count = 0;
  int ac_count = 0;
  int iterations = 0;
  std::optional<PoseHypothesis> gt;
};

inline void save_results(std::ostream &os, std::span<const PairResult> results) {
  os << "# acpose results v1\n";
  for (const PairResult &r : results) {
    os << "result " << r.id;
    io_detail::write_rotation_translation(os, r.pose.R, r.pose.t);
    os << ' ' << r.inlier_count << ' ' << r.ac_count << ' ' << r.iterations << '\n';
    if (r.gt) {
      os << "gt " << r.id;
      io_detail::write_rotation_translation(os, r.gt->R, r.gt->t);
      os << '\n';
    }
  }
}

inline std::vector<PairResult> load_results(std::istream &is) {
  std::vector<PairResult> results;
  std::string line;
  int line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    io_detail::LineTokenizer tok{line, line_no};
    const auto kind = tok.next();
    if (!kind || (*kind)[0] == '#') continue;
    if (*kind == "result") {
      PairResult r;
      const auto id = tok.next();
      if (!id) throw DataError("line " + std::to_string(line_no) + ": result without id");
      r.id = std::string(*id);
      io_detail::read_rotation_translation(tok, &r.pose.R, &r.pose.t);
      r.inlier_count = tok.next_int("inlier count");
      r.ac_count = tok.next_int("correspondence count");
      r.iterations = tok.next_int("iteration count");
      tok.expect_end();
      results.push_back(std::move(r));
    } else if (*kind == "gt") {
      const auto id = tok.next();
      if (!id) throw DataError("line " + std::to_string(line_no) + ": gt without id");
      PoseHypothesis gt;
      io_detail::read_rotation_translation(tok, &gt.R, &gt.t);
      tok.expect_end();
      bool attached = false;
      for (PairResult &r : results) {
        if (r.id == *id) {
          r.gt = gt;
          attached = true;
          break;
        }
      }
      if (!attached)
        throw DataError("line " + std::to_string(line_no) + ": gt for unknown pair '" +
                        std::string(*id) + "'");
    } else {
      throw DataError("line " + std::to_string(line_no) + ": unknown record '" +
                      std::string(*kind) + "'");
    }
  }
  return results;
}

struct EvalRow {
  std::string id;
  double rot_err_deg = 0.0;
  double trans_err = 0.0;
  double dir_err_deg = std::numeric_limits<double>::quiet_NaN();
};

// Error table from results that carry ground truth; pairs without it are an
// error since evaluating nothing is a usage bug.
inline std::vector<EvalRow> evaluate_results(std::span<const PairResult> results) {
  std::vector<EvalRow> rows;
  for (const PairResult &r : results) {
    if (!r.gt) throw DataError("pair '" + r.id + "' has no ground truth to evaluate against");
    EvalRow row;
    row.id = r.id;
    row.rot_err_deg = rotation_error_deg(r.gt->R, r.pose.R);
    row.trans_err = translation_error(r.gt->t, r.pose.t);
    if (r.gt->t.norm() > 0.0 && r.pose.t.norm() > 0.0)
      row.dir_err_deg = translation_direction_error_deg(r.gt->t, r.pose.t);
    rows.push_back(std::move(row));
  }
  return rows;
}

inline void write_eval_csv(std::ostream &os, std::span<const EvalRow> rows) {
  os << "pair,rot_err_deg,trans_err,dir_err_deg\n";
  std::vector<double> rot, trans, dir;
  for (const EvalRow &r : rows) {
    os << r.id << ',' << io_detail::format_double(r.rot_err_deg) << ','
       << io_detail::format_double(r.trans_err) << ','
       << io_detail::format_double(r.dir_err_deg) << '\n';
    rot.push_back(r.rot_err_deg);
    trans.push_back(r.trans_err);
    if (std::isfinite(r.dir_err_deg)) dir.push_back(r.dir_err_deg);
  }
  auto median = [](std::vector<double> v) {
    if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
    std::sort(v.begin(), v.end());
    const size_t n = v.size();
    return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
  };
  os << "median," << io_detail::format_double(median(rot)) << ','
     << io_detail::format_double(median(trans)) << ',' << io_detail::format_double(median(dir))
     << '\n';
}

}  // namespace acpose
