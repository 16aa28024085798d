#pragma once

#include <filesystem>
#include <optional>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "mche/board.hpp"
#include "mche/camera_model.hpp"
#include "mche/geometry.hpp"

namespace mche {

/// Corners of one board sighting: camera k saw the board at robot pose j.
/// Corners follow the board's row-major order; no correspondence search
/// happens downstream.
struct Detection {
  int pose_index = 0;    // j in [0, M)
  int camera_index = 0;  // k in [0, N)
  std::vector<Vec2> corners;
};

struct RobotPose {
  int pose_index = 0;
  Pose transform;  // end-effector expressed in the robot base frame
};

/// Reference poses a synthetic dataset was generated from.
struct GroundTruth {
  std::vector<Pose> hand_eye;  // per camera: base frame in camera frame
  Pose board_to_ee;
};

/// M robot poses x N cameras with a sparse set of detections.
struct Dataset {
  std::vector<CameraIntrinsics> cameras;
  BoardModel board;
  std::vector<RobotPose> robot_poses;  // dense, sorted by pose index
  std::vector<Detection> detections;   // sorted by (camera, pose)

  int camera_count() const { return static_cast<int>(cameras.size()); }
  int pose_count() const { return static_cast<int>(robot_poses.size()); }

  /// nullptr when camera k did not see the board at pose j.
  const Detection* find_detection(int j, int k) const;

  /// Detection-count and index-range rules; throws ValidationError.
  void validate() const;
};

/// Per-pose co-visibility: entry(k, t) = 1 iff cameras k and t both saw the
/// board at this pose. Symmetric, zero diagonal.
struct CrossDetectionMatrix {
  int pose_index = 0;
  Eigen::MatrixXi entries;
};

/// Throws IndexError for j outside [0, M).
CrossDetectionMatrix cross_matrix(const Dataset& d, int j);

/// All ordered pairs (k, t), k != t, that co-observe the board at one or
/// more poses, sorted lexicographically.
std::vector<std::pair<int, int>> covisible_ordered_pairs(const Dataset& d);

/// Directory layout:
///   board.json              rows, cols, spacing_m
///   robot_poses.csv         header j,x,y,z,qx,qy,qz,qw
///   cam<k>/intrinsics.json  fx, fy, cx, cy, dist[5], width, height
///   cam<k>/corners_<j>.txt  one "u v" line per corner; file absent = no detection
///   ground_truth.json       optional
Dataset load_dataset(const std::filesystem::path& root);
void save_dataset(const Dataset& d, const std::filesystem::path& root);

std::optional<GroundTruth> load_ground_truth(const std::filesystem::path& root);
void save_ground_truth(const GroundTruth& truth,
                       const std::filesystem::path& root);

}  // namespace mche
