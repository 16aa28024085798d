#pragma once

#include <array>

#include <Eigen/Core>

namespace mche {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

constexpr double kPi = 3.14159265358979323846;

constexpr double deg2rad(double d) { return d * kPi / 180.0; }
constexpr double rad2deg(double r) { return r * 180.0 / kPi; }

/// Rigid transform: apply(p) = rotation * p + translation.
struct Pose {
  Mat3 rotation = Mat3::Identity();
  Vec3 translation = Vec3::Zero();

  Vec3 apply(const Vec3& p) const { return rotation * p + translation; }
};

Pose compose(const Pose& a, const Pose& b);
Pose invert(const Pose& a);

/// True iff R is orthonormal with unit determinant (Frobenius tolerance).
bool is_rotation(const Mat3& r, double tol = 1e-9);

Mat3 skew(const Vec3& v);

/// Rodrigues exponential map. Total on all finite inputs.
Mat3 axis_angle_to_rotation(const Vec3& v);

/// Inverse Rodrigues map with result norm in [0, pi]. Accurate to a few
/// ulp for all angles including half turns (quaternion-pivot conversion).
Vec3 rotation_to_axis_angle(const Mat3& r);

/// Angle of the relative rotation r^T * r_hat, reported in degrees in [0, 180].
double relative_angle_deg(const Mat3& r, const Mat3& r_hat);

/// Right Jacobian of SO(3): exp(v + d) ~ exp(v) * exp(J_r(v) * d).
Mat3 so3_right_jacobian(const Vec3& v);

/// Minimal 6-dof parameterization used by the optimizer.
struct PoseParams {
  Vec3 axis_angle = Vec3::Zero();
  Vec3 translation = Vec3::Zero();

  static PoseParams from_pose(const Pose& p);
  Pose to_pose() const;

  /// Wrap the axis-angle norm back into [0, pi] when a step pushed it past pi.
  void canonicalize();
};

/// Wire layout shared by every file format: x y z qx qy qz qw.
std::array<double, 7> pose_to_seven(const Pose& p);

/// Throws ValidationError if the quaternion norm deviates from 1 by more
/// than 1e-3; otherwise normalizes and converts.
Pose pose_from_seven(const std::array<double, 7>& v);

}  // namespace mche
