#include "mche/residual_eval.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "mche/board.hpp"
#include "mche/camera_model.hpp"
#include "mche/errors.hpp"

namespace mche {

namespace {

// Capped residual for corners that land behind a camera during a trial
// step: constant magnitude (10 x image diagonal) with zero Jacobian, so the
// step is rejected by cost comparison instead of crashing the solve.
Vec2 capped_residual(const CameraIntrinsics& intr) {
  const double m = 10.0 * intr.image_diagonal() / std::sqrt(2.0);
  return Vec2(m, m);
}

}  // namespace

void SolverOptions::validate() const {
  if (max_iterations < 1) {
    throw ConfigError("max_iterations must be >= 1");
  }
  if (gradient_tolerance <= 0.0 || parameter_tolerance <= 0.0 ||
      cost_tolerance <= 0.0) {
    throw ConfigError("solver tolerances must be positive");
  }
  if (cauchy_scale <= 0.0) {
    throw ConfigError("cauchy_scale must be positive");
  }
}

int ParameterBlock::pair_index(int k, int t) const {
  const auto it = std::lower_bound(pair_keys.begin(), pair_keys.end(),
                                   std::make_pair(k, t));
  if (it == pair_keys.end() || *it != std::make_pair(k, t)) return -1;
  return static_cast<int>(it - pair_keys.begin());
}

void ParameterBlock::apply_step(const Eigen::VectorXd& delta) {
  auto bump = [&delta](PoseParams& p, int offset) {
    p.axis_angle += delta.segment<3>(offset);
    p.translation += delta.segment<3>(offset + 3);
  };
  for (size_t k = 0; k < hand_eye.size(); ++k) {
    bump(hand_eye[k], hand_eye_offset(static_cast<int>(k)));
  }
  for (size_t z = 0; z < board_to_ee.size(); ++z) {
    bump(board_to_ee[z], z_offset(static_cast<int>(z)));
  }
  for (size_t p = 0; p < cam_to_cam.size(); ++p) {
    bump(cam_to_cam[p], pair_offset(static_cast<int>(p)));
  }
}

void ParameterBlock::canonicalize() {
  for (auto& p : hand_eye) p.canonicalize();
  for (auto& p : board_to_ee) p.canonicalize();
  for (auto& p : cam_to_cam) p.canonicalize();
}

ParameterBlock make_parameter_block(const Dataset& d, const InitialGuess& g,
                                    const SolverOptions& options) {
  options.validate();
  if (g.hand_eye.size() != static_cast<size_t>(d.camera_count())) {
    throw DimensionMismatch("initial guess covers " +
                            std::to_string(g.hand_eye.size()) +
                            " cameras, dataset has " +
                            std::to_string(d.camera_count()));
  }
  ParameterBlock p;
  p.hand_eye.reserve(g.hand_eye.size());
  for (const auto& x : g.hand_eye) p.hand_eye.push_back(PoseParams::from_pose(x));

  const int nz = options.shared_z_enabled ? 1 : d.camera_count();
  p.board_to_ee.assign(nz, PoseParams::from_pose(g.board_to_ee));

  if (options.cross_term_enabled) {
    p.pair_keys = covisible_ordered_pairs(d);
    p.cam_to_cam.reserve(p.pair_keys.size());
    for (const auto& [k, t] : p.pair_keys) {
      const auto it = g.cam_to_cam.find({k, t});
      const Pose pose = (it != g.cam_to_cam.end())
                            ? it->second
                            : compose(g.hand_eye[k], invert(g.hand_eye[t]));
      p.cam_to_cam.push_back(PoseParams::from_pose(pose));
    }
  }
  return p;
}

double cauchy_cost(double squared_norm, double scale) {
  const double s2 = scale * scale;
  return s2 * std::log1p(squared_norm / s2);
}

namespace {

// Chain evaluation shared by the public residual helpers and the evaluator.
std::vector<Vec2> chain_residuals(const Detection& det, const Pose& to_camera,
                                  const CameraIntrinsics& intr,
                                  const std::vector<Vec3>& object_points) {
  std::vector<Vec2> out(object_points.size());
  for (size_t i = 0; i < object_points.size(); ++i) {
    const Vec3 q = to_camera.apply(object_points[i]);
    Vec2 px;
    if (!try_project(q, intr, px)) {
      out[i] = capped_residual(intr);
    } else {
      out[i] = px - det.corners[i];
    }
  }
  return out;
}

const Detection& require_detection(const Dataset& d, int j, int k) {
  const Detection* det = d.find_detection(j, k);
  if (det == nullptr) {
    throw MissingBoardPose("no detection for camera " + std::to_string(k) +
                           " at pose " + std::to_string(j));
  }
  return *det;
}

}  // namespace

std::vector<Vec2> residual_rpj(int j, int k, const ParameterBlock& params,
                               const Dataset& d) {
  const Detection& det = require_detection(d, j, k);
  const Pose x = params.hand_eye[k].to_pose();
  const Pose z = params.board_to_ee[params.z_index(k)].to_pose();
  const Pose chain = compose(x, compose(d.robot_poses[j].transform, z));
  return chain_residuals(det, chain, d.cameras[k], corner_points(d.board));
}

std::vector<Vec2> residual_cross(int j, int k, int t,
                                 const ParameterBlock& params,
                                 const Dataset& d) {
  const Detection& det = require_detection(d, j, k);
  require_detection(d, j, t);  // pre: cross entry (k, t) is set
  const int pi = params.pair_index(k, t);
  if (pi < 0) {
    throw MissingBoardPose("no pair transform for cameras (" +
                           std::to_string(k) + ", " + std::to_string(t) + ")");
  }
  const Pose pair = params.cam_to_cam[pi].to_pose();
  const Pose xt = params.hand_eye[t].to_pose();
  const Pose z = params.board_to_ee[params.z_index(t)].to_pose();
  const Pose chain = compose(
      pair, compose(xt, compose(d.robot_poses[j].transform, z)));
  return chain_residuals(det, chain, d.cameras[k], corner_points(d.board));
}

CostReport total_cost(const ParameterBlock& params, const Dataset& d,
                      const SolverOptions& options) {
  return ResidualEvaluator(d, options).cost(params, /*parallel=*/false);
}

// ---------------------------------------------------------------------------

struct ResidualEvaluator::BlockResult {
  Eigen::Matrix<double, 18, 18> h;
  Eigen::Matrix<double, 18, 1> g;
  double cost = 0.0;
  double raw_squared_px = 0.0;  // un-robust pixel cost, for RMS reporting
};

ResidualEvaluator::ResidualEvaluator(const Dataset& d,
                                     const SolverOptions& options)
    : dataset_(d), options_(options), object_points_(corner_points(d.board)) {
  options_.validate();
  for (const auto& det : d.detections) {
    Block b;
    b.pose = det.pose_index;
    b.camera = det.camera_index;
    b.det = &det;
    blocks_.push_back(b);
  }
  if (options_.cross_term_enabled) {
    for (int j = 0; j < d.pose_count(); ++j) {
      const auto x = cross_matrix(d, j);
      for (int k = 0; k < d.camera_count(); ++k) {
        for (int t = 0; t < d.camera_count(); ++t) {
          if (x.entries(k, t) == 0) continue;
          Block b;
          b.cross = true;
          b.pose = j;
          b.camera = k;
          b.source = t;
          b.det = d.find_detection(j, k);
          blocks_.push_back(b);
        }
      }
    }
  }
}

void ResidualEvaluator::compute_block(const Block& b,
                                      const ParameterBlock& params,
                                      bool want_jacobian,
                                      BlockResult& out) const {
  const int width = b.cross ? 18 : 12;
  out.h.setZero();
  out.g.setZero();
  out.cost = 0.0;
  out.raw_squared_px = 0.0;

  const CameraIntrinsics& intr = dataset_.cameras[b.camera];
  const Pose& robot = dataset_.robot_poses[b.pose].transform;
  const int zi = params.z_index(b.cross ? b.source : b.camera);
  const PoseParams& zp = params.board_to_ee[zi];
  const Mat3 r_z = axis_angle_to_rotation(zp.axis_angle);
  const Mat3 jr_z = so3_right_jacobian(zp.axis_angle);

  const PoseParams& xp = params.hand_eye[b.cross ? b.source : b.camera];
  const Mat3 r_x = axis_angle_to_rotation(xp.axis_angle);
  const Mat3 jr_x = so3_right_jacobian(xp.axis_angle);

  Mat3 r_p = Mat3::Identity();
  Mat3 jr_p = Mat3::Identity();
  Vec3 t_p = Vec3::Zero();
  int pi = -1;
  if (b.cross) {
    pi = params.pair_index(b.camera, b.source);
    const PoseParams& pp = params.cam_to_cam[pi];
    r_p = axis_angle_to_rotation(pp.axis_angle);
    jr_p = so3_right_jacobian(pp.axis_angle);
    t_p = pp.translation;
  }

  const double c2 = options_.cauchy_scale * options_.cauchy_scale;
  Eigen::Matrix<double, 2, 18> jac = Eigen::Matrix<double, 2, 18>::Zero();

  for (size_t i = 0; i < object_points_.size(); ++i) {
    const Vec3& pt = object_points_[i];
    const Vec3 u2 = r_z * pt + zp.translation;    // board -> end effector
    const Vec3 u1 = robot.apply(u2);              // -> world
    const Vec3 w1 = r_x * u1 + xp.translation;    // -> camera (k or t)
    const Vec3 q = b.cross ? Vec3(r_p * w1 + t_p) : w1;  // -> camera k

    Vec2 r;
    bool capped = false;
    Vec2 px;
    if (!try_project(q, intr, px)) {
      r = capped_residual(intr);
      capped = true;
    } else {
      r = px - b.det->corners[i];
    }

    const double s = r.squaredNorm();
    out.cost += cauchy_cost(s, options_.cauchy_scale);
    out.raw_squared_px += s;

    if (!want_jacobian || capped) continue;

    const double weight = std::sqrt(1.0 / (1.0 + s / c2));
    const Eigen::Matrix<double, 2, 3> jpi = project_jacobian(q, intr);
    const Mat3 r_pb = dataset_.robot_poses[b.pose].transform.rotation;

    if (!b.cross) {
      // columns: [v_X t_X v_Z t_Z]
      jac.block<2, 3>(0, 0) = jpi * (-r_x * skew(u1) * jr_x);
      jac.block<2, 3>(0, 3) = jpi;
      const Mat3 m = r_x * r_pb;
      jac.block<2, 3>(0, 6) = jpi * (-(m * r_z) * skew(pt) * jr_z);
      jac.block<2, 3>(0, 9) = jpi * m;
    } else {
      // columns: [v_P t_P v_Xt t_Xt v_Zt t_Zt]
      jac.block<2, 3>(0, 0) = jpi * (-r_p * skew(w1) * jr_p);
      jac.block<2, 3>(0, 3) = jpi;
      jac.block<2, 3>(0, 6) = jpi * (-(r_p * r_x) * skew(u1) * jr_x);
      jac.block<2, 3>(0, 9) = jpi * r_p;
      const Mat3 m = r_p * r_x * r_pb;
      jac.block<2, 3>(0, 12) = jpi * (-(m * r_z) * skew(pt) * jr_z);
      jac.block<2, 3>(0, 15) = jpi * m;
    }

    const auto jw = (weight * jac.leftCols(width)).eval();
    const Vec2 rw = weight * r;
    out.h.topLeftCorner(width, width).noalias() += jw.transpose() * jw;
    out.g.head(width).noalias() += jw.transpose() * rw;
  }
}

CostReport ResidualEvaluator::cost(const ParameterBlock& params,
                                   bool parallel) const {
  const long n = block_count();
  std::vector<double> costs(n);
  std::vector<BlockResult> scratch;

  if (parallel) {
#pragma omp parallel
    {
      BlockResult local;
#pragma omp for schedule(static)
      for (long i = 0; i < n; ++i) {
        compute_block(blocks_[i], params, /*want_jacobian=*/false, local);
        costs[i] = local.cost;
      }
    }
  } else {
    BlockResult local;
    for (long i = 0; i < n; ++i) {
      compute_block(blocks_[i], params, /*want_jacobian=*/false, local);
      costs[i] = local.cost;
    }
  }

  CostReport rep;
  for (long i = 0; i < n; ++i) {  // fixed-order accumulation
    if (blocks_[i].cross) {
      rep.c_cross += costs[i];
    } else {
      rep.c_rpj += costs[i];
    }
    rep.residual_count += static_cast<long>(object_points_.size());
  }
  rep.c_total = rep.c_rpj + rep.c_cross;
  return rep;
}

NormalEquations ResidualEvaluator::normal_equations(
    const ParameterBlock& params, bool parallel) const {
  const long n = block_count();
  const int dim = params.scalar_count();
  std::vector<BlockResult> results(n);

  if (parallel) {
#pragma omp parallel for schedule(static)
    for (long i = 0; i < n; ++i) {
      compute_block(blocks_[i], params, /*want_jacobian=*/true, results[i]);
    }
  } else {
    for (long i = 0; i < n; ++i) {
      compute_block(blocks_[i], params, /*want_jacobian=*/true, results[i]);
    }
  }

  NormalEquations eq;
  eq.h = Eigen::MatrixXd::Zero(dim, dim);
  eq.g = Eigen::VectorXd::Zero(dim);

  // Serial scatter in block order: identical result whatever the thread
  // count above.
  for (long i = 0; i < n; ++i) {
    const Block& b = blocks_[i];
    const BlockResult& res = results[i];
    int offsets[3];
    int chunks;
    if (!b.cross) {
      offsets[0] = params.hand_eye_offset(b.camera);
      offsets[1] = params.z_offset(params.z_index(b.camera));
      chunks = 2;
    } else {
      offsets[0] = params.pair_offset(params.pair_index(b.camera, b.source));
      offsets[1] = params.hand_eye_offset(b.source);
      offsets[2] = params.z_offset(params.z_index(b.source));
      chunks = 3;
    }
    for (int a = 0; a < chunks; ++a) {
      eq.g.segment<6>(offsets[a]) += res.g.segment<6>(6 * a);
      for (int c = 0; c < chunks; ++c) {
        eq.h.block<6, 6>(offsets[a], offsets[c]) +=
            res.h.block<6, 6>(6 * a, 6 * c);
      }
    }
    if (b.cross) {
      eq.report.c_cross += res.cost;
    } else {
      eq.report.c_rpj += res.cost;
    }
    eq.report.residual_count += static_cast<long>(object_points_.size());
  }
  eq.report.c_total = eq.report.c_rpj + eq.report.c_cross;
  return eq;
}

std::vector<double> ResidualEvaluator::per_camera_rms(
    const ParameterBlock& params) const {
  std::vector<double> sum(dataset_.camera_count(), 0.0);
  std::vector<long> count(dataset_.camera_count(), 0);
  BlockResult local;
  for (const Block& b : blocks_) {
    if (b.cross) continue;
    compute_block(b, params, /*want_jacobian=*/false, local);
    sum[b.camera] += local.raw_squared_px;
    count[b.camera] += static_cast<long>(object_points_.size());
  }
  std::vector<double> rms(dataset_.camera_count(), 0.0);
  for (int k = 0; k < dataset_.camera_count(); ++k) {
    if (count[k] > 0) rms[k] = std::sqrt(sum[k] / static_cast<double>(count[k]));
  }
  return rms;
}

}  // namespace mche
