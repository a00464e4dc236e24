#pragma once

#include <Eigen/Core>

#include "mpscene/core.hpp"

namespace mpscene {

/// Angle between the camera's optical axis and the horizontal through a
/// subject's pelvis, in radians. Positive means the camera looks down.
class ElevationAngle {
 public:
  /// Throws InvalidArgument unless |radians| < pi/2.
  explicit ElevationAngle(double radians);

  double radians() const noexcept { return radians_; }

 private:
  double radians_;
};

/// Proper 3x3 rotation (orthogonal, det = +1 within 1e-9).
class RotationMatrix3 {
 public:
  RotationMatrix3() : m_(Eigen::Matrix3d::Identity()) {}
  /// Throws InvalidArgument if `m` is not a proper rotation.
  explicit RotationMatrix3(const Eigen::Matrix3d& m);

  const Eigen::Matrix3d& matrix() const noexcept { return m_; }
  RotationMatrix3 transpose() const { return RotationMatrix3(m_.transpose(), Unchecked{}); }
  Eigen::Vector3d operator*(const Eigen::Vector3d& v) const { return m_ * v; }

 private:
  struct Unchecked {};
  RotationMatrix3(const Eigen::Matrix3d& m, Unchecked) : m_(m) {}
  Eigen::Matrix3d m_;
};

/// Which sign of the sine terms the x-axis compensation rotation uses. The
/// flipped variant exists only as a negative control for the synthetic oracle.
enum class RotationSign { AsPrinted, Flipped };

/// Perspective lift of a normalized keypoint: Z = max(1, d_hat + c), (x Z, y Z, Z).
Eigen::Vector3d lift_keypoint(double x, double y, double d_hat, double c);

/// Lifts every joint independently; the root lands on (0, 0, max(1, d_root + c)).
Pose3D lift_pose(const Pose2D& pose, const LiftPrediction& prediction, double c);

/// Vertical offset between two roots both assumed c units from the camera:
/// c (tan theta1 - tan theta2).
double elevation_offset(ElevationAngle theta1, ElevationAngle theta2, double c);

/// [[1,0,0],[0,cos t,-sin t],[0,sin t,cos t]]; maps a camera-frame pose seen
/// from elevation t back to a level orientation.
RotationMatrix3 rotation_about_x(ElevationAngle theta, RotationSign sign = RotationSign::AsPrinted);

/// p -> R (p - center) + center for every joint.
Pose3D rotate_pose(const Pose3D& pose, const RotationMatrix3& rotation, const Eigen::Vector3d& center);

/// (X/Z, Y/Z). Throws DepthTooSmall when Z < 1.
Eigen::Vector2d project_keypoint(const Eigen::Vector3d& point);

}  // namespace mpscene
