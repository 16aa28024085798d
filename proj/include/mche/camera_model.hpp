#pragma once

#include <array>

#include <Eigen/Core>

#include "mche/geometry.hpp"

namespace mche {

// Depth below which a point counts as behind the camera.
constexpr double kMinProjectionDepth = 1e-9;

/// Pinhole camera with Brown-Conrady distortion (k1, k2, p1, p2, k3).
struct CameraIntrinsics {
  double fx = 0.0;
  double fy = 0.0;
  double cx = 0.0;
  double cy = 0.0;
  std::array<double, 5> dist = {0.0, 0.0, 0.0, 0.0, 0.0};
  int image_width = 0;
  int image_height = 0;

  double image_diagonal() const;

  /// Throws ValidationError on non-positive focals or a principal point
  /// outside the image.
  void validate() const;
};

/// Projects a camera-frame point to pixels. Throws PointBehindCamera
/// when p_cam.z() <= 1e-9. The result may lie outside the image bounds.
Vec2 project(const Vec3& p_cam, const CameraIntrinsics& intr);

/// Non-throwing variant for optimizer hot paths. Returns false (pixel
/// untouched) for points at or behind the camera.
bool try_project(const Vec3& p_cam, const CameraIntrinsics& intr, Vec2& pixel);

/// d(project)/d(p_cam), defined where try_project succeeds.
Eigen::Matrix<double, 2, 3> project_jacobian(const Vec3& p_cam,
                                             const CameraIntrinsics& intr);

/// Half-open image box: 0 <= x < width, 0 <= y < height.
bool in_image(const Vec2& pixel, const CameraIntrinsics& intr);

}  // namespace mche
