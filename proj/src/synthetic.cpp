#include "mche/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <tuple>

#include <Eigen/Geometry>

#include "mche/camera_model.hpp"
#include "mche/errors.hpp"
#include "mche/rng.hpp"

namespace mche {

namespace {

// Workspace: 0.8 m cube of end-effector positions above the robot base.
constexpr double kCubeHalf = 0.4;
constexpr double kCubeZLo = 0.3;
constexpr double kCubeZHi = 1.1;
constexpr double kCameraHeight = 1.5;
const Vec3 kWorkcellCenter{0.0, 0.0, 0.7};

constexpr double kCamPosJitter = 0.10;               // +-10 cm
constexpr double kCamAngleJitter = deg2rad(5.0);     // +-5 deg
constexpr double kBoardFacingTilt = deg2rad(12.0);
constexpr double kMaxGrazingAngle = deg2rad(75.0);
// Obliquity band for pose sampling, as |cos| of the angle between the board
// normal and the direction to a camera. Near 1 the view is fronto-parallel
// (board attitude weakly observable), near 0 it is edge-on (projection
// nearly degenerate); both extremes make planar pose estimates
// noise-dominated, so sampling prefers poses where every camera's view is
// comfortably oblique. The band is advisory: if a pose cannot satisfy it
// within the first trials (few cameras, unlucky geometry), it is dropped
// rather than failing generation.
const double kObliqueCosMin = std::cos(deg2rad(65.0));
const double kObliqueCosMax = std::cos(deg2rad(25.0));
constexpr uint64_t kObliqueTrialBudget = 120;
constexpr double kMountMaxAngle = deg2rad(30.0);
constexpr double kMountMaxOffset = 0.15;

// World->camera pose looking from `pos` toward `target`, y axis pointing
// down-ish (image convention: x right, y down, z forward).
Pose look_at(const Vec3& pos, const Vec3& target) {
  const Vec3 z = (target - pos).normalized();
  Vec3 x = z.cross(Vec3::UnitZ());
  const double n = x.norm();
  if (n < 1e-9) {
    throw ConfigError("camera optical axis is vertical; cannot orient");
  }
  x /= n;
  const Vec3 y = z.cross(x);
  Pose p;
  p.rotation.row(0) = x.transpose();
  p.rotation.row(1) = y.transpose();
  p.rotation.row(2) = z.transpose();
  p.translation = -p.rotation * pos;
  return p;
}

// 4K machine-vision sensor; slight per-camera variation so no two cameras
// share identical intrinsics.
CameraIntrinsics make_intrinsics(int k) {
  CameraIntrinsics intr;
  intr.fx = 4200.0 + 10.0 * k;
  intr.fy = intr.fx;
  intr.cx = 2048.0 + 2.5 * k;
  intr.cy = 1536.0 - 3.0 * k;
  intr.dist = {-0.10 - 0.01 * k, 0.03, 4e-4, -3e-4, 1e-3};
  intr.image_width = 4096;
  intr.image_height = 3072;
  return intr;
}

Pose sample_board_mount(const CounterRng& rng) {
  Pose z;
  const Vec3 axis = rng.unit_vector(RngStream::kBoardMount, 0, 0, 0, 0);
  const double angle = rng.uniform(0.0, kMountMaxAngle, RngStream::kBoardMount,
                                   0, 0, 0, 2);
  z.rotation = axis_angle_to_rotation(axis * angle);
  for (int i = 0; i < 3; ++i) {
    z.translation[i] = rng.uniform(-kMountMaxOffset, kMountMaxOffset,
                                   RngStream::kBoardMount, 0, 0, 0, 3 + i);
  }
  return z;
}

// Rotation whose +z column equals `normal`, with the given roll about it.
Mat3 frame_with_normal(const Vec3& normal, double roll) {
  Vec3 ref = Vec3::UnitZ();
  if (std::abs(normal.dot(ref)) > 0.99) ref = Vec3::UnitX();
  const Vec3 x0 = ref.cross(normal).normalized();
  const Vec3 y0 = normal.cross(x0);
  Mat3 base;
  base.col(0) = x0;
  base.col(1) = y0;
  base.col(2) = normal;
  return base * axis_angle_to_rotation(Vec3(0.0, 0.0, roll));
}

}  // namespace

void SynthConfig::validate() const {
  if (n_cameras < 1) throw ConfigError("need at least one camera");
  if (n_poses < 3) throw ConfigError("need at least 3 robot poses");
  if (ring_radius < 0.8) {
    throw ConfigError("camera ring radius " + std::to_string(ring_radius) +
                      " m would place cameras inside the robot workspace");
  }
  if (pixel_noise_sigma < 0.0) throw ConfigError("negative pixel noise sigma");
  if (detection_dropout < 0.0 || detection_dropout >= 1.0) {
    throw ConfigError("detection dropout must lie in [0, 1)");
  }
  try {
    board.validate();
  } catch (const ValidationError& e) {
    throw ConfigError(e.what());
  }
}

SynthConfig preset(const std::string& name) {
  SynthConfig cfg;
  if (name == "small") {
    cfg.ring_radius = 1.4;
  } else if (name == "medium") {
    cfg.ring_radius = 2.0;
  } else if (name == "large") {
    cfg.ring_radius = 2.5;
  } else {
    throw UnknownPreset("unknown workcell preset '" + name +
                        "' (expected small, medium or large)");
  }
  return cfg;
}

SynthOutput generate(const SynthConfig& config) {
  config.validate();
  const CounterRng rng(config.seed);
  const int n_cam = config.n_cameras;
  const int n_pose = config.n_poses;

  SynthOutput out;
  out.dataset.board = config.board;

  // Cameras: ring placement with seeded position/orientation jitter.
  std::vector<Vec3> cam_centers(n_cam);
  for (int k = 0; k < n_cam; ++k) {
    const double theta = 2.0 * kPi * k / n_cam;
    Vec3 pos(config.ring_radius * std::cos(theta),
             config.ring_radius * std::sin(theta), kCameraHeight);
    for (int i = 0; i < 3; ++i) {
      pos[i] += rng.uniform(-kCamPosJitter, kCamPosJitter,
                            RngStream::kCameraPlacement, k, i);
    }
    Pose x = look_at(pos, kWorkcellCenter);
    const Vec3 axis = rng.unit_vector(RngStream::kCameraPlacement, k, 10);
    const double angle =
        rng.uniform(0.0, kCamAngleJitter, RngStream::kCameraPlacement, k, 12);
    x.rotation = axis_angle_to_rotation(axis * angle) * x.rotation;
    x.translation = -x.rotation * pos;

    cam_centers[k] = pos;
    out.truth.hand_eye.push_back(x);
    out.dataset.cameras.push_back(make_intrinsics(k));
  }

  const Pose board_to_ee = sample_board_mount(rng);
  out.truth.board_to_ee = board_to_ee;

  const auto corners_board = corner_points(config.board);
  const int n_corners = static_cast<int>(corners_board.size());
  Vec3 board_centroid = Vec3::Zero();
  for (const auto& p : corners_board) board_centroid += p;
  board_centroid /= static_cast<double>(n_corners);

  for (uint64_t attempt = 0; attempt < 100; ++attempt) {
    // Sample the end-effector pose set: positions uniform in the workspace
    // cube, orientations aimed so the board roughly faces one of the
    // cameras, with a random tilt and roll for rotation diversity.
    std::vector<RobotPose> robot_poses;
    bool set_ok = true;
    for (int j = 0; j < n_pose && set_ok; ++j) {
      bool placed = false;
      for (uint64_t trial = 0; trial < 200; ++trial) {
        Vec3 ee_pos(
            rng.uniform(-kCubeHalf, kCubeHalf, RngStream::kEndEffectorPose,
                        attempt, j, trial, 0),
            rng.uniform(-kCubeHalf, kCubeHalf, RngStream::kEndEffectorPose,
                        attempt, j, trial, 1),
            rng.uniform(kCubeZLo, kCubeZHi, RngStream::kEndEffectorPose,
                        attempt, j, trial, 2));
        const int target = std::min(
            static_cast<int>(
                rng.u01(RngStream::kEndEffectorPose, attempt, j, trial, 3) *
                n_cam),
            n_cam - 1);
        const double roll = rng.uniform(
            0.0, 2.0 * kPi, RngStream::kEndEffectorPose, attempt, j, trial, 4);
        const Vec3 tilt_axis = rng.unit_vector(RngStream::kEndEffectorPose,
                                               attempt, j, trial, 5);
        const double tilt = rng.uniform(
            0.0, kBoardFacingTilt, RngStream::kEndEffectorPose, attempt, j,
            trial, 7);

        // Aim the board between the target camera and one of its ring
        // neighbours: both get a strongly off-fronto view (good perspective
        // conditioning for planar pose estimation) and no camera sees the
        // board edge-on.
        const int step =
            (rng.u01(RngStream::kEndEffectorPose, attempt, j, trial, 8) < 0.5)
                ? 1
                : n_cam - 1;
        const int second = (target + step) % n_cam;
        const double blend = rng.uniform(
            0.25, 0.75, RngStream::kEndEffectorPose, attempt, j, trial, 9);
        const Vec3 dir_a = (cam_centers[target] - ee_pos).normalized();
        const Vec3 dir_b = (cam_centers[second] - ee_pos).normalized();
        const Vec3 facing = (blend * dir_a + (1.0 - blend) * dir_b).normalized();
        Mat3 board_rot = axis_angle_to_rotation(tilt_axis * tilt) *
                         frame_with_normal(facing, roll);

        Pose ee;  // T_E^W, board rotation folded back through the mount
        ee.rotation = board_rot * board_to_ee.rotation.transpose();
        ee.translation = ee_pos;

        // Keep only poses whose board normal makes a usable grazing angle
        // with at least one camera and, while the trial budget allows,
        // whose obliquity stays in the well-conditioned band for all
        // cameras.
        const Pose board_to_world = compose(ee, board_to_ee);
        const Vec3 board_pos = board_to_world.apply(board_centroid);
        const Vec3 normal = board_rot.col(2);
        bool faces_someone = false;
        bool in_band = true;
        for (int k = 0; k < n_cam; ++k) {
          const Vec3 to_cam = (cam_centers[k] - board_pos).normalized();
          const double c = std::clamp(normal.dot(to_cam), -1.0, 1.0);
          if (std::acos(c) <= kMaxGrazingAngle) faces_someone = true;
          if (std::abs(c) < kObliqueCosMin || std::abs(c) > kObliqueCosMax) {
            in_band = false;
          }
        }
        if (!faces_someone) continue;
        if (!in_band && trial < kObliqueTrialBudget) continue;
        robot_poses.push_back({j, ee});
        placed = true;
        break;
      }
      if (!placed) set_ok = false;
    }
    if (!set_ok) continue;

    // Project the board for every (pose, camera); a detection requires all
    // corners in front of the camera and inside the image. Dropout and
    // pixel noise use counter-based streams keyed by (pose, camera, corner)
    // so results do not depend on iteration order.
    std::vector<Detection> detections;
    std::vector<int> per_camera(n_cam, 0);
    for (int j = 0; j < n_pose; ++j) {
      const Pose board_to_world =
          compose(robot_poses[j].transform, board_to_ee);
      for (int k = 0; k < n_cam; ++k) {
        const Pose board_to_cam =
            compose(out.truth.hand_eye[k], board_to_world);
        const auto& intr = out.dataset.cameras[k];
        Detection det;
        det.pose_index = j;
        det.camera_index = k;
        det.corners.reserve(n_corners);
        bool visible = true;
        for (int i = 0; i < n_corners && visible; ++i) {
          Vec2 px;
          if (!try_project(board_to_cam.apply(corners_board[i]), intr, px) ||
              !in_image(px, intr)) {
            visible = false;
            break;
          }
          det.corners.push_back(px);
        }
        if (!visible) continue;
        if (config.detection_dropout > 0.0 &&
            rng.u01(RngStream::kDropout, j, k) < config.detection_dropout) {
          continue;
        }
        if (config.pixel_noise_sigma > 0.0) {
          for (int i = 0; i < n_corners; ++i) {
            det.corners[i].x() += config.pixel_noise_sigma *
                                  rng.gaussian(RngStream::kPixelNoise, j, k, i, 0);
            det.corners[i].y() += config.pixel_noise_sigma *
                                  rng.gaussian(RngStream::kPixelNoise, j, k, i, 1);
          }
        }
        ++per_camera[k];
        detections.push_back(std::move(det));
      }
    }

    if (*std::min_element(per_camera.begin(), per_camera.end()) < 3) continue;

    std::sort(detections.begin(), detections.end(),
              [](const Detection& a, const Detection& b) {
                return std::tie(a.camera_index, a.pose_index) <
                       std::tie(b.camera_index, b.pose_index);
              });
    out.dataset.robot_poses = std::move(robot_poses);
    out.dataset.detections = std::move(detections);
    out.visibility_stats = std::move(per_camera);
    out.dataset.validate();
    return out;
  }

  throw ConfigError(
      "no end-effector pose set gave every camera >= 3 detections after 100 "
      "attempts; enlarge n_poses or reduce dropout");
}

}  // namespace mche
