#pragma once

#include <map>
#include <utility>
#include <vector>

#include "mche/board.hpp"
#include "mche/camera_model.hpp"
#include "mche/dataset.hpp"
#include "mche/geometry.hpp"

namespace mche {

/// Board pose in one camera for one robot station (frame B in frame C_k).
struct BoardPoseEstimate {
  int pose_index = 0;
  int camera_index = 0;
  Pose board_in_camera;
};

/// Closed-form hand-eye output: X = T_W^Ck and Z = T_B^E.
struct HandEyeEstimate {
  Pose hand_eye;
  Pose board_to_ee;
};

/// Starting point for the joint refinement.
struct InitialGuess {
  std::vector<Pose> hand_eye;                       ///< per camera, T_W^Ck
  Pose board_to_ee;                                 ///< shared T_B^E
  std::map<std::pair<int, int>, Pose> cam_to_cam;   ///< (k,t) -> T_Ct^Ck
};

/// Board-in-camera pose from detected grid corners: normalized/undistorted
/// coordinates, Hartley-normalized DLT homography, [r1 r2 t] decomposition
/// with SVD orthonormalization and positive board depth.
/// Throws DegenerateConfiguration for < 4 or collinear corners.
Pose planar_pose(const std::vector<Vec2>& corners, const BoardModel& board,
                 const CameraIntrinsics& intr);

/// Park & Martin's Lie-algebra closed form on consecutive-station relative
/// motions; Z recovered per station from the closed chain and averaged.
/// Throws InsufficientMotion when fewer than two usable relative motions
/// remain (rotation below 1 degree) or all rotation axes are parallel.
HandEyeEstimate solve_park(const std::vector<BoardPoseEstimate>& board_poses,
                           const std::vector<RobotPose>& robot_poses);

/// Tsai & Lenz's two-step angle-axis closed form; same preconditions,
/// errors and Z recovery as solve_park.
HandEyeEstimate solve_tsai(const std::vector<BoardPoseEstimate>& board_poses,
                           const std::vector<RobotPose>& robot_poses);

/// Full pipeline start: planar_pose on every detection, solve_park per
/// camera, board_to_ee averaged across cameras, camera-to-camera transforms
/// chained from the hand-eye estimates for every co-visible ordered pair.
InitialGuess build_initial_guess(const Dataset& d);

/// Rotation average by the largest eigenvector of the quaternion
/// outer-product sum; translations averaged arithmetically.
Pose average_poses(const std::vector<Pose>& poses);

}  // namespace mche
