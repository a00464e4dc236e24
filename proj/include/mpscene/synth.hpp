#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mpscene/core.hpp"
#include "mpscene/lifter.hpp"

namespace mpscene {

struct CameraConfig {
  double elevation_deg = 0.0;
  double c = 10.0;
  /// Pixels per normalized image unit for a subject at distance c.
  double pixels_per_unit = 1000.0;
  Eigen::Vector2d principal_point_px{960.0, 540.0};

  void validate() const;
  nlohmann::json to_json() const;
  static CameraConfig from_json(const nlohmann::json& j);
};

struct Range {
  double lo = 0.0;
  double hi = 0.0;

  bool operator==(const Range&) const = default;
};

/// Sampling ranges for synthetic two-person scenes. Separations and the root
/// height difference are magnitudes; their sign is drawn separately.
struct SceneSpec {
  std::uint64_t seed = 0;
  Range person_scale{0.85, 1.15};
  Range horizontal_separation{1.0, 3.0};
  /// Physical depth separation between the two pelvises. Non-zero values
  /// break the equal-distance premise of the elevation offset on purpose.
  Range depth_separation{0.0, 0.0};
  Range root_height_difference{0.8, 1.2};
  /// Share of frames in which both pelvises sit at the same height (people in
  /// contact on a common floor); the remaining frames draw from
  /// root_height_difference.
  double contact_fraction = 0.5;
  /// "mixed", "standing", "crouching", "reaching" or "leaning".
  std::string pose_library = "mixed";

  void validate() const;
  nlohmann::json to_json() const;
  static SceneSpec from_json(const nlohmann::json& j);
};

/// Scene-unit to millimetre factor: an upright person's head sits one unit
/// above the pelvis, taken as 500 mm.
inline constexpr double kMillimetresPerUnit = 500.0;

struct GroundTruthFrame {
  int frame_id = 0;
  CameraConfig camera;
  /// World position of the real camera; both pelvis rays start here.
  Eigen::Vector3d camera_position = Eigen::Vector3d::Zero();
  /// Level scene with both lowest feet on y = 0; poses ordered by pelvis pixel u.
  Scene3D world;
  /// Each pose seen from its own pitched camera, pelvis on the optical axis.
  std::vector<Points3> camera_frame;
  std::vector<Points2> pixel_coords;
  std::vector<Pose2D> poses;
  std::vector<double> theta;
  std::vector<Eigen::VectorXd> depth_offsets;
  double mm_per_unit = kMillimetresPerUnit;

  GroundTruthLift truth(std::size_t pose) const { return {depth_offsets.at(pose), theta.at(pose)}; }
};

/// Deterministic in (spec.seed, index).
/// Poses use Skeleton::standard().
GroundTruthFrame generate_frame(const SceneSpec& spec, const CameraConfig& camera, int index);

/// Re-checks the frame's internal consistency: projections match the stored 2D
/// poses, angles match the camera geometry, feet lie on the ground. Returns the
/// largest residual found.
double validate_frame(const GroundTruthFrame& frame);

}  // namespace mpscene
