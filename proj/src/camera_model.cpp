#include "mche/camera_model.hpp"

#include <cmath>
#include <string>

#include "mche/errors.hpp"

namespace mche {

double CameraIntrinsics::image_diagonal() const {
  return std::hypot(static_cast<double>(image_width),
                    static_cast<double>(image_height));
}

void CameraIntrinsics::validate() const {
  if (!(fx > 0.0) || !(fy > 0.0)) {
    throw ValidationError("focal lengths must be positive, got fx=" +
                          std::to_string(fx) + " fy=" + std::to_string(fy));
  }
  if (image_width <= 0 || image_height <= 0) {
    throw ValidationError("image size must be positive");
  }
  if (cx < 0.0 || cx >= image_width || cy < 0.0 || cy >= image_height) {
    throw ValidationError("principal point (" + std::to_string(cx) + ", " +
                          std::to_string(cy) + ") outside the image");
  }
}

namespace {

// Distorted normalized coordinates for (x, y) = (X/Z, Y/Z).
inline Vec2 distort(double x, double y, const std::array<double, 5>& d) {
  const double k1 = d[0], k2 = d[1], p1 = d[2], p2 = d[3], k3 = d[4];
  const double r2 = x * x + y * y;
  const double radial = 1.0 + r2 * (k1 + r2 * (k2 + r2 * k3));
  const double xd = x * radial + 2.0 * p1 * x * y + p2 * (r2 + 2.0 * x * x);
  const double yd = y * radial + p1 * (r2 + 2.0 * y * y) + 2.0 * p2 * x * y;
  return {xd, yd};
}

}  // namespace

bool try_project(const Vec3& p_cam, const CameraIntrinsics& intr, Vec2& pixel) {
  if (p_cam.z() <= kMinProjectionDepth) return false;
  const double x = p_cam.x() / p_cam.z();
  const double y = p_cam.y() / p_cam.z();
  const Vec2 d = distort(x, y, intr.dist);
  pixel = {intr.fx * d.x() + intr.cx, intr.fy * d.y() + intr.cy};
  return true;
}

Vec2 project(const Vec3& p_cam, const CameraIntrinsics& intr) {
  Vec2 pixel;
  if (!try_project(p_cam, intr, pixel)) {
    throw PointBehindCamera("point at depth " + std::to_string(p_cam.z()) +
                            " is behind the camera");
  }
  return pixel;
}

Eigen::Matrix<double, 2, 3> project_jacobian(const Vec3& p_cam,
                                             const CameraIntrinsics& intr) {
  const double iz = 1.0 / p_cam.z();
  const double x = p_cam.x() * iz;
  const double y = p_cam.y() * iz;

  // d(x, y) / d(p_cam)
  Eigen::Matrix<double, 2, 3> dn;
  dn << iz, 0.0, -x * iz, 0.0, iz, -y * iz;

  const double k1 = intr.dist[0], k2 = intr.dist[1], p1 = intr.dist[2],
               p2 = intr.dist[3], k3 = intr.dist[4];
  const double r2 = x * x + y * y;
  const double radial = 1.0 + r2 * (k1 + r2 * (k2 + r2 * k3));
  const double dradial = k1 + r2 * (2.0 * k2 + 3.0 * k3 * r2);

  // d(distorted) / d(x, y)
  Eigen::Matrix2d dd;
  dd(0, 0) = radial + 2.0 * x * x * dradial + 2.0 * p1 * y + 6.0 * p2 * x;
  dd(0, 1) = 2.0 * x * y * dradial + 2.0 * p1 * x + 2.0 * p2 * y;
  dd(1, 0) = dd(0, 1);
  dd(1, 1) = radial + 2.0 * y * y * dradial + 6.0 * p1 * y + 2.0 * p2 * x;

  Eigen::Matrix2d focal = Eigen::Matrix2d::Zero();
  focal(0, 0) = intr.fx;
  focal(1, 1) = intr.fy;
  return focal * dd * dn;
}

bool in_image(const Vec2& pixel, const CameraIntrinsics& intr) {
  return pixel.x() >= 0.0 && pixel.x() < intr.image_width && pixel.y() >= 0.0 &&
         pixel.y() < intr.image_height;
}

}  // namespace mche
