#include "mpscene/geometry.hpp"

#include <Eigen/LU>

#include <cmath>
#include <numbers>

namespace mpscene {

ElevationAngle::ElevationAngle(double radians) : radians_(radians) {
  if (!std::isfinite(radians) || std::abs(radians) >= std::numbers::pi / 2)
    throw Error(ErrorCode::InvalidArgument,
                "elevation angle must satisfy |theta| < pi/2, got " + std::to_string(radians));
}

RotationMatrix3::RotationMatrix3(const Eigen::Matrix3d& m) : m_(m) {
  if (!m.allFinite() || !(m.transpose() * m).isApprox(Eigen::Matrix3d::Identity(), 1e-9) ||
      std::abs(m.determinant() - 1.0) > 1e-9)
    throw Error(ErrorCode::InvalidArgument, "matrix is not a proper rotation");
}

Eigen::Vector3d lift_keypoint(double x, double y, double d_hat, double c) {
  if (!std::isfinite(x) || !std::isfinite(y) || !std::isfinite(d_hat) || !std::isfinite(c))
    throw Error(ErrorCode::NonFiniteInput, "lift_keypoint received a non-finite value");
  const double z = std::max(1.0, d_hat + c);
  return {x * z, y * z, z};
}

Pose3D lift_pose(const Pose2D& pose, const LiftPrediction& prediction, double c) {
  const auto& norm = pose.norm_coords();
  if (prediction.depth_offsets.size() != norm.rows())
    throw Error(ErrorCode::JointCountMismatch,
                "pose has " + std::to_string(norm.rows()) + " joints but prediction has " +
                    std::to_string(prediction.depth_offsets.size()) + " depth offsets");
  Pose3D out;
  out.coords.resize(norm.rows(), 3);
  for (Eigen::Index i = 0; i < norm.rows(); ++i)
    out.coords.row(i) = lift_keypoint(norm(i, 0), norm(i, 1), prediction.depth_offsets(i), c);
  return out;
}

double elevation_offset(ElevationAngle theta1, ElevationAngle theta2, double c) {
  return c * (std::tan(theta1.radians()) - std::tan(theta2.radians()));
}

RotationMatrix3 rotation_about_x(ElevationAngle theta, RotationSign sign) {
  const double t = sign == RotationSign::AsPrinted ? theta.radians() : -theta.radians();
  const double ct = std::cos(t);
  const double st = std::sin(t);
  Eigen::Matrix3d m;
  m << 1, 0, 0,
       0, ct, -st,
       0, st, ct;
  return RotationMatrix3(m);
}

Pose3D rotate_pose(const Pose3D& pose, const RotationMatrix3& rotation, const Eigen::Vector3d& center) {
  Pose3D out;
  out.coords.resize(pose.coords.rows(), 3);
  for (Eigen::Index i = 0; i < pose.coords.rows(); ++i) {
    const Eigen::Vector3d p = pose.coords.row(i).transpose();
    out.coords.row(i) = rotation * (p - center) + center;
  }
  return out;
}

Eigen::Vector2d project_keypoint(const Eigen::Vector3d& point) {
  if (!point.allFinite()) throw Error(ErrorCode::NonFiniteInput, "non-finite 3D point");
  if (point.z() < 1.0)
    throw Error(ErrorCode::DepthTooSmall, "depth " + std::to_string(point.z()) + " is below 1");
  return {point.x() / point.z(), point.y() / point.z()};
}

}  // namespace mpscene
