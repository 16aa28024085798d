#include "mche/initialization.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include <Eigen/Dense>

#include "mche/errors.hpp"

namespace mche {

namespace {

constexpr int kUndistortIterations = 10;
constexpr double kMinMotionAngle = deg2rad(1.0);
constexpr double kAxisSpreadTol = 1e-6;  // parallel-axis detection

Vec2 undistort_normalized(const Vec2& distorted, const CameraIntrinsics& intr) {
  const double k1 = intr.dist[0], k2 = intr.dist[1], p1 = intr.dist[2],
               p2 = intr.dist[3], k3 = intr.dist[4];
  double x = distorted.x(), y = distorted.y();
  for (int it = 0; it < kUndistortIterations; ++it) {
    const double r2 = x * x + y * y;
    const double radial = 1.0 + r2 * (k1 + r2 * (k2 + r2 * k3));
    const double dx = 2.0 * p1 * x * y + p2 * (r2 + 2.0 * x * x);
    const double dy = p1 * (r2 + 2.0 * y * y) + 2.0 * p2 * x * y;
    x = (distorted.x() - dx) / radial;
    y = (distorted.y() - dy) / radial;
  }
  return {x, y};
}

// Hartley normalization: centroid to origin, mean length sqrt(2).
Eigen::Matrix3d normalizing_transform(const std::vector<Vec2>& pts) {
  Vec2 centroid = Vec2::Zero();
  for (const auto& p : pts) centroid += p;
  centroid /= static_cast<double>(pts.size());
  double mean_dist = 0.0;
  for (const auto& p : pts) mean_dist += (p - centroid).norm();
  mean_dist /= static_cast<double>(pts.size());
  const double s = mean_dist > 1e-15 ? std::sqrt(2.0) / mean_dist : 1.0;
  Eigen::Matrix3d t = Eigen::Matrix3d::Identity();
  t(0, 0) = t(1, 1) = s;
  t(0, 2) = -s * centroid.x();
  t(1, 2) = -s * centroid.y();
  return t;
}

Mat3 orthonormalized(const Mat3& m) {
  Eigen::JacobiSVD<Mat3> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Mat3 r = svd.matrixU() * svd.matrixV().transpose();
  if (r.determinant() < 0.0) {
    Mat3 u = svd.matrixU();
    u.col(2) *= -1.0;
    r = u * svd.matrixV().transpose();
  }
  return r;
}

struct RelativeMotions {
  std::vector<Pose> cam;    // board-in-camera motions A_rel
  std::vector<Pose> robot;  // end-effector motions B_rel
};

// Consecutive-station motion pairs (j, j+1), kept only when the camera saw
// the board at both stations and the robot rotated by at least 1 degree.
RelativeMotions collect_motions(const std::vector<BoardPoseEstimate>& board_poses,
                                const std::vector<RobotPose>& robot_poses) {
  std::map<int, const Pose*> by_index;
  for (const auto& bp : board_poses) {
    by_index[bp.pose_index] = &bp.board_in_camera;
  }
  for (const auto& kv : by_index) {
    if (kv.first < 0 || kv.first >= static_cast<int>(robot_poses.size())) {
      throw ValidationError("board pose references robot station " +
                            std::to_string(kv.first) + " with no robot pose");
    }
  }
  RelativeMotions rel;
  for (const auto& [j, a_curr] : by_index) {
    const auto next = by_index.find(j + 1);
    if (next == by_index.end()) continue;
    const Pose& b1 = robot_poses[j].transform;
    const Pose& b2 = robot_poses[j + 1].transform;
    const Pose b_rel = compose(b2, invert(b1));
    if (rotation_to_axis_angle(b_rel.rotation).norm() < kMinMotionAngle) {
      continue;
    }
    rel.cam.push_back(compose(*next->second, invert(*a_curr)));
    rel.robot.push_back(b_rel);
  }
  if (rel.cam.size() < 2) {
    throw InsufficientMotion(
        "need at least two relative motions with rotation >= 1 degree, got " +
        std::to_string(rel.cam.size()));
  }
  return rel;
}

// Shared second step: stack (R_A - I) t_X = R_X t_B - t_A over all motions.
Vec3 solve_hand_eye_translation(const RelativeMotions& rel, const Mat3& r_x) {
  const int n = static_cast<int>(rel.cam.size());
  Eigen::MatrixXd lhs(3 * n, 3);
  Eigen::VectorXd rhs(3 * n);
  for (int i = 0; i < n; ++i) {
    lhs.middleRows<3>(3 * i) = rel.cam[i].rotation - Mat3::Identity();
    rhs.segment<3>(3 * i) =
        r_x * rel.robot[i].translation - rel.cam[i].translation;
  }
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(lhs);
  if (qr.rank() < 3) {
    throw InsufficientMotion(
        "relative rotation axes do not determine the hand-eye translation");
  }
  return qr.solve(rhs);
}

// Recover Z at every observed station from A = X B Z and average.
Pose recover_board_to_ee(const std::vector<BoardPoseEstimate>& board_poses,
                         const std::vector<RobotPose>& robot_poses,
                         const Pose& hand_eye) {
  std::vector<Pose> zs;
  zs.reserve(board_poses.size());
  for (const auto& bp : board_poses) {
    const Pose& b = robot_poses[bp.pose_index].transform;
    zs.push_back(
        compose(invert(compose(hand_eye, b)), bp.board_in_camera));
  }
  return average_poses(zs);
}

void check_axis_spread(const Eigen::JacobiSVD<Mat3>& svd) {
  const auto& s = svd.singularValues();
  if (s(0) < 1e-12 || s(1) / s(0) < kAxisSpreadTol) {
    throw InsufficientMotion(
        "relative rotation axes are parallel; hand-eye rotation is not "
        "observable");
  }
}

}  // namespace

Pose planar_pose(const std::vector<Vec2>& corners, const BoardModel& board,
                 const CameraIntrinsics& intr) {
  const int n = static_cast<int>(corners.size());
  if (n < 4) {
    throw DegenerateConfiguration("planar pose needs >= 4 corners, got " +
                                  std::to_string(n));
  }
  const auto object_points = corner_points(board);
  if (n != static_cast<int>(object_points.size())) {
    throw DimensionMismatch("corner count " + std::to_string(n) +
                            " does not match board corner count " +
                            std::to_string(object_points.size()));
  }

  // Collinear image corners admit a family of homographies and carry no
  // attitude information. Undistortion bends an exact image line into a
  // shallow arc that can look numerically healthy to the DLT, so test
  // collinearity on the raw pixels.
  {
    Vec2 mean = Vec2::Zero();
    for (const auto& p : corners) mean += p;
    mean /= static_cast<double>(n);
    Eigen::MatrixXd centered(n, 2);
    for (int i = 0; i < n; ++i) centered.row(i) = (corners[i] - mean).transpose();
    Eigen::JacobiSVD<Eigen::MatrixXd> pix_svd(centered);
    const auto& ps = pix_svd.singularValues();
    if (!(ps(1) > 1e-8 * ps(0))) {
      throw DegenerateConfiguration("image corners are collinear");
    }
  }

  std::vector<Vec2> img(n), obj(n);
  for (int i = 0; i < n; ++i) {
    img[i] = undistort_normalized(
        Vec2((corners[i].x() - intr.cx) / intr.fx,
             (corners[i].y() - intr.cy) / intr.fy),
        intr);
    obj[i] = object_points[i].head<2>();
  }

  const Eigen::Matrix3d t_src = normalizing_transform(obj);
  const Eigen::Matrix3d t_dst = normalizing_transform(img);

  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(2 * n, 9);
  for (int i = 0; i < n; ++i) {
    const Vec3 src = t_src * Vec3(obj[i].x(), obj[i].y(), 1.0);
    const Vec3 dst = t_dst * Vec3(img[i].x(), img[i].y(), 1.0);
    const double sx = src.x(), sy = src.y(), dx = dst.x(), dy = dst.y();
    a.row(2 * i) << -sx, -sy, -1.0, 0.0, 0.0, 0.0, dx * sx, dx * sy, dx;
    a.row(2 * i + 1) << 0.0, 0.0, 0.0, -sx, -sy, -1.0, dy * sx, dy * sy, dy;
  }

  Eigen::JacobiSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeFullV);
  const auto& sv = svd.singularValues();
  if (sv(0) < 1e-15 || sv(7) / sv(0) < 1e-9) {
    throw DegenerateConfiguration(
        "homography system is rank deficient (collinear or repeated corners)");
  }
  Eigen::Matrix3d h_hat;
  const Eigen::VectorXd hv = svd.matrixV().col(8);
  h_hat << hv(0), hv(1), hv(2), hv(3), hv(4), hv(5), hv(6), hv(7), hv(8);
  const Eigen::Matrix3d h = t_dst.inverse() * h_hat * t_src;

  double lambda = 2.0 / (h.col(0).norm() + h.col(1).norm());
  Vec2 centroid = Vec2::Zero();
  for (const auto& p : obj) centroid += p;
  centroid /= static_cast<double>(n);
  // Centroid depth r1z*cx + r2z*cy + tz must be positive; flip scale if not.
  const double depth =
      lambda * (h(2, 0) * centroid.x() + h(2, 1) * centroid.y() + h(2, 2));
  if (depth < 0.0) lambda = -lambda;

  const Vec3 r1 = lambda * h.col(0);
  const Vec3 r2 = lambda * h.col(1);
  const Vec3 r3 = r1.cross(r2);
  const Vec3 t = lambda * h.col(2);
  // Parallel first two columns leave the rotation unconstrained.
  if (r3.norm() < 1e-6 * r1.norm() * r2.norm()) {
    throw DegenerateConfiguration(
        "homography columns are parallel; rotation is not recoverable");
  }
  Mat3 rot;
  rot.col(0) = r1;
  rot.col(1) = r2;
  rot.col(2) = r3;

  Pose pose;
  pose.rotation = orthonormalized(rot);
  pose.translation = t;
  return pose;
}

HandEyeEstimate solve_park(const std::vector<BoardPoseEstimate>& board_poses,
                           const std::vector<RobotPose>& robot_poses) {
  const RelativeMotions rel = collect_motions(board_poses, robot_poses);

  // R_A R_X = R_X R_B in so(3): alpha_i = R_X beta_i; orthogonal Procrustes
  // over the motion axis vectors.
  Mat3 cross_cov = Mat3::Zero();
  for (size_t i = 0; i < rel.cam.size(); ++i) {
    const Vec3 alpha = rotation_to_axis_angle(rel.cam[i].rotation);
    const Vec3 beta = rotation_to_axis_angle(rel.robot[i].rotation);
    cross_cov += alpha * beta.transpose();
  }
  Eigen::JacobiSVD<Mat3> svd(cross_cov,
                             Eigen::ComputeFullU | Eigen::ComputeFullV);
  check_axis_spread(svd);
  Mat3 r_x = svd.matrixU() * svd.matrixV().transpose();
  if (r_x.determinant() < 0.0) {
    Mat3 u = svd.matrixU();
    u.col(2) *= -1.0;
    r_x = u * svd.matrixV().transpose();
  }

  HandEyeEstimate est;
  est.hand_eye.rotation = r_x;
  est.hand_eye.translation = solve_hand_eye_translation(rel, r_x);
  est.board_to_ee =
      recover_board_to_ee(board_poses, robot_poses, est.hand_eye);
  return est;
}

HandEyeEstimate solve_tsai(const std::vector<BoardPoseEstimate>& board_poses,
                           const std::vector<RobotPose>& robot_poses) {
  const RelativeMotions rel = collect_motions(board_poses, robot_poses);
  const int n = static_cast<int>(rel.cam.size());

  // Modified Rodrigues vectors p = 2 sin(theta/2) axis for both motion
  // streams; skew(a + b) x' = b - a yields the scaled rotation axis of X.
  auto modified_rodrigues = [](const Mat3& r) {
    const Vec3 aa = rotation_to_axis_angle(r);
    const double theta = aa.norm();
    if (theta < 1e-14) return Vec3(Vec3::Zero());
    return Vec3(2.0 * std::sin(0.5 * theta) * aa / theta);
  };

  Eigen::MatrixXd lhs(3 * n, 3);
  Eigen::VectorXd rhs(3 * n);
  Mat3 cross_cov = Mat3::Zero();
  for (int i = 0; i < n; ++i) {
    const Vec3 a = modified_rodrigues(rel.cam[i].rotation);
    const Vec3 b = modified_rodrigues(rel.robot[i].rotation);
    lhs.middleRows<3>(3 * i) = skew(a + b);
    rhs.segment<3>(3 * i) = b - a;
    cross_cov += a * b.transpose();
  }
  check_axis_spread(
      Eigen::JacobiSVD<Mat3>(cross_cov, Eigen::ComputeFullU | Eigen::ComputeFullV));

  const Vec3 xp = lhs.colPivHouseholderQr().solve(rhs);
  const Vec3 p = 2.0 * xp / std::sqrt(1.0 + xp.squaredNorm());
  const double p2 = p.squaredNorm();
  const Mat3 r_raw = (1.0 - 0.5 * p2) * Mat3::Identity() +
                     0.5 * (p * p.transpose() +
                            std::sqrt(std::max(0.0, 4.0 - p2)) * skew(p));
  const Mat3 r_x = orthonormalized(r_raw);

  HandEyeEstimate est;
  est.hand_eye.rotation = r_x;
  est.hand_eye.translation = solve_hand_eye_translation(rel, r_x);
  est.board_to_ee =
      recover_board_to_ee(board_poses, robot_poses, est.hand_eye);
  return est;
}

InitialGuess build_initial_guess(const Dataset& d) {
  InitialGuess guess;
  std::vector<Pose> per_camera_z;
  for (int k = 0; k < d.camera_count(); ++k) {
    std::vector<BoardPoseEstimate> estimates;
    for (const auto& det : d.detections) {
      if (det.camera_index != k) continue;
      estimates.push_back({det.pose_index, k,
                           planar_pose(det.corners, d.board, d.cameras[k])});
    }
    try {
      const HandEyeEstimate est = solve_park(estimates, d.robot_poses);
      guess.hand_eye.push_back(est.hand_eye);
      per_camera_z.push_back(est.board_to_ee);
    } catch (const InsufficientMotion& e) {
      throw InsufficientMotion("camera " + std::to_string(k) + ": " +
                               e.what());
    }
  }
  guess.board_to_ee = average_poses(per_camera_z);
  for (const auto& [k, t] : covisible_ordered_pairs(d)) {
    guess.cam_to_cam[{k, t}] =
        compose(guess.hand_eye[k], invert(guess.hand_eye[t]));
  }
  return guess;
}

Pose average_poses(const std::vector<Pose>& poses) {
  if (poses.empty()) throw ValidationError("cannot average zero poses");
  Eigen::Matrix4d acc = Eigen::Matrix4d::Zero();
  Vec3 mean_t = Vec3::Zero();
  for (const auto& p : poses) {
    const Eigen::Quaterniond q(p.rotation);
    const Eigen::Vector4d v(q.x(), q.y(), q.z(), q.w());
    acc += v * v.transpose();  // sign-invariant
    mean_t += p.translation;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix4d> eig(acc);
  Eigen::Vector4d v = eig.eigenvectors().col(3);  // largest eigenvalue
  const Eigen::Quaterniond q0(poses.front().rotation);
  if (v.x() * q0.x() + v.y() * q0.y() + v.z() * q0.z() + v.w() * q0.w() <
      0.0) {
    v = -v;
  }
  Pose out;
  out.rotation =
      Eigen::Quaterniond(v.w(), v.x(), v.y(), v.z()).normalized().toRotationMatrix();
  out.translation = mean_t / static_cast<double>(poses.size());
  return out;
}

}  // namespace mche
