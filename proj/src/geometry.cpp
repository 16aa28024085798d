#include "mche/geometry.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Geometry>

#include "mche/errors.hpp"

namespace mche {

Pose compose(const Pose& a, const Pose& b) {
  Pose out;
  out.rotation = a.rotation * b.rotation;
  out.translation = a.rotation * b.translation + a.translation;
  return out;
}

Pose invert(const Pose& a) {
  Pose out;
  out.rotation = a.rotation.transpose();
  out.translation = -(out.rotation * a.translation);
  return out;
}

bool is_rotation(const Mat3& r, double tol) {
  const double ortho = (r.transpose() * r - Mat3::Identity()).norm();
  return ortho < tol && std::abs(r.determinant() - 1.0) < tol;
}

Mat3 skew(const Vec3& v) {
  Mat3 s;
  s << 0.0, -v.z(), v.y(), v.z(), 0.0, -v.x(), -v.y(), v.x(), 0.0;
  return s;
}

Mat3 axis_angle_to_rotation(const Vec3& v) {
  const double theta2 = v.squaredNorm();
  const Mat3 k = skew(v);
  if (theta2 < 1e-24) {
    // second-order Taylor; exact to machine precision at these angles
    return Mat3::Identity() + k + 0.5 * (k * k);
  }
  const double theta = std::sqrt(theta2);
  const double a = std::sin(theta) / theta;
  const double b = (1.0 - std::cos(theta)) / theta2;
  return Mat3::Identity() + a * k + b * (k * k);
}

Vec3 rotation_to_axis_angle(const Mat3& r) {
  // Quaternion route: the matrix-to-quaternion conversion pivots on the
  // largest diagonal term, and atan2 recovers the angle, so the result
  // stays accurate to a few ulp all the way to a half turn. Deriving
  // sin(theta) from an acos-based angle instead loses ~1/sin^2(theta)
  // digits near pi, which a long camera lever arm turns into visible
  // pixel error.
  const Eigen::Quaterniond q(r);
  const Eigen::AngleAxisd aa(q);  // angle in [0, pi], axis follows sign of w
  return aa.angle() * aa.axis();
}

double relative_angle_deg(const Mat3& r, const Mat3& r_hat) {
  const Mat3 rel = r.transpose() * r_hat;
  return rad2deg(rotation_to_axis_angle(rel).norm());
}

Mat3 so3_right_jacobian(const Vec3& v) {
  const double theta2 = v.squaredNorm();
  const Mat3 k = skew(v);
  double a, b;
  if (theta2 < 1e-12) {
    a = 0.5 - theta2 / 24.0;
    b = 1.0 / 6.0 - theta2 / 120.0;
  } else {
    const double theta = std::sqrt(theta2);
    a = (1.0 - std::cos(theta)) / theta2;
    b = (theta - std::sin(theta)) / (theta2 * theta);
  }
  return Mat3::Identity() - a * k + b * (k * k);
}

PoseParams PoseParams::from_pose(const Pose& p) {
  PoseParams out;
  out.axis_angle = rotation_to_axis_angle(p.rotation);
  out.translation = p.translation;
  return out;
}

Pose PoseParams::to_pose() const {
  Pose out;
  out.rotation = axis_angle_to_rotation(axis_angle);
  out.translation = translation;
  return out;
}

void PoseParams::canonicalize() {
  double theta = axis_angle.norm();
  while (theta > kPi) {
    axis_angle *= 1.0 - 2.0 * kPi / theta;
    theta = axis_angle.norm();
  }
}

std::array<double, 7> pose_to_seven(const Pose& p) {
  Eigen::Quaterniond q(p.rotation);
  q.normalize();
  if (q.w() < 0.0) q.coeffs() = -q.coeffs();
  return {p.translation.x(), p.translation.y(), p.translation.z(),
          q.x(),             q.y(),             q.z(),
          q.w()};
}

Pose pose_from_seven(const std::array<double, 7>& v) {
  Eigen::Quaterniond q(v[6], v[3], v[4], v[5]);
  const double norm = q.norm();
  if (std::abs(norm - 1.0) > 1e-3) {
    throw ValidationError("pose quaternion norm " + std::to_string(norm) +
                          " deviates from 1 by more than 1e-3");
  }
  q.normalize();
  Pose out;
  out.rotation = q.toRotationMatrix();
  out.translation = Vec3(v[0], v[1], v[2]);
  return out;
}

}  // namespace mche
