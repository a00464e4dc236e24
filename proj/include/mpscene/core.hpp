#pragma once

#include <Eigen/Core>

#include "json.hpp"

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "mpscene/error.hpp"

namespace mpscene {

using Points2 = Eigen::Matrix<double, Eigen::Dynamic, 2, Eigen::RowMajor>;
using Points3 = Eigen::Matrix<double, Eigen::Dynamic, 3, Eigen::RowMajor>;

/// Joint layout shared by every pose of a run.
///
/// The root is the pelvis (midpoint of the two hips). The head joint fixes the
/// 2D normalization scale and the foot joints define the ground contact used
/// when scaling reconstructed poses.
class Skeleton {
 public:
  Skeleton(std::vector<std::string> joint_names, std::string_view root, std::string_view head,
           std::string_view left_hip, std::string_view right_hip,
           const std::vector<std::string>& feet);

  /// 16 body joints plus left/right hands.
  static const Skeleton& standard();

  static Skeleton from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;

  std::size_t size() const noexcept { return names_.size(); }
  const std::vector<std::string>& joint_names() const noexcept { return names_; }
  const std::string& name(std::size_t i) const { return names_.at(i); }
  /// Throws MissingJoint if the name is not part of the skeleton.
  std::size_t index_of(std::string_view name) const;

  std::size_t root() const noexcept { return root_; }
  std::size_t head() const noexcept { return head_; }
  std::size_t left_hip() const noexcept { return left_hip_; }
  std::size_t right_hip() const noexcept { return right_hip_; }
  const std::vector<std::size_t>& feet() const noexcept { return feet_; }

  bool operator==(const Skeleton&) const = default;

 private:
  std::vector<std::string> names_;
  std::size_t root_ = 0;
  std::size_t head_ = 0;
  std::size_t left_hip_ = 0;
  std::size_t right_hip_ = 0;
  std::vector<std::size_t> feet_;
};

struct Constants {
  /// Camera-to-root distance of a lifted pose.
  double c = 10.0;
  /// Vertical pelvis pixel distance at or below which both elevation angles are
  /// assumed equal.
  double contact_threshold_px = 50.0;

  void validate() const;
};

/// A root-centred 2D pose. Both the original pixel coordinates and the
/// normalized coordinates are kept so that image-space displacements between
/// people remain available after normalization.
///
/// Normalized y points up (pixel v points down).
class Pose2D {
 public:
  const Points2& pixel_coords() const noexcept { return pixel_; }
  const Points2& norm_coords() const noexcept { return norm_; }
  /// Pixels per normalized unit.
  double norm_scale() const noexcept { return scale_; }
  Eigen::Vector2d root_pixel() const noexcept { return root_pixel_; }
  std::size_t size() const noexcept { return static_cast<std::size_t>(norm_.rows()); }

 private:
  friend Pose2D normalize_pose(const Points2& raw, const Skeleton& skeleton, double c);

  Points2 pixel_;
  Points2 norm_;
  double scale_ = 1.0;
  Eigen::Vector2d root_pixel_ = Eigen::Vector2d::Zero();
};

struct Pose3D {
  Points3 coords;

  std::size_t size() const noexcept { return static_cast<std::size_t>(coords.rows()); }
  Eigen::Vector3d joint(std::size_t i) const { return coords.row(static_cast<Eigen::Index>(i)).transpose(); }
};

/// Two or more poses in one frame: x right, y up (ground plane y = 0), z away
/// from the camera.
struct Scene3D {
  std::vector<Pose3D> poses;
  std::vector<Eigen::Vector3d> root_offsets;
};

/// Output contract of any lifter: one depth offset per joint plus the
/// elevation angle of the camera relative to the pose's pelvis.
struct LiftPrediction {
  Eigen::VectorXd depth_offsets;
  double theta = 0.0;
};

/// Root-centres and rescales a pose so its head lies 1/c from the root.
/// `raw` holds one pixel (u, v) row per skeleton joint; NaN marks a missing joint.
Pose2D normalize_pose(const Points2& raw, const Skeleton& skeleton, double c);

/// Inverse of normalize_pose: pixel coordinates rebuilt from the normalized data.
Points2 denormalize(const Pose2D& pose);

}  // namespace mpscene
