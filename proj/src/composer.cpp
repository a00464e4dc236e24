#include "mpscene/composer.hpp"

#include <cmath>
#include <limits>

#include "mpscene/geometry.hpp"

namespace mpscene {
namespace {

constexpr double kMinDrop = 1e-9;

Pose3D root_centred(const Pose3D& pose, std::size_t root) {
  Pose3D out = pose;
  const Eigen::RowVector3d r = pose.coords.row(static_cast<Eigen::Index>(root));
  out.coords.rowwise() -= r;
  return out;
}

double lowest_foot_y(const Pose3D& pose, const Skeleton& skeleton) {
  double lowest = std::numeric_limits<double>::infinity();
  for (auto f : skeleton.feet()) lowest = std::min(lowest, pose.coords(static_cast<Eigen::Index>(f), 1));
  return lowest;
}

std::size_t pick_anchor(std::span<const Pose2D> poses) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < poses.size(); ++i) {
    const auto a = poses[i].root_pixel();
    const auto b = poses[best].root_pixel();
    if (a.x() < b.x() || (a.x() == b.x() && a.y() < b.y())) best = i;
  }
  return best;
}

}  // namespace

std::string AblationMode::name() const {
  if (*this == naive()) return "naive";
  if (*this == heuristic_only()) return "heuristic";
  if (*this == rotation_heuristic()) return "rotation";
  if (*this == full()) return "full";
  std::string s;
  s += elevation_compensation ? "E" : "e";
  s += rotation_compensation ? "R" : "r";
  s += contact_heuristic ? "H" : "h";
  return s;
}

AblationMode AblationMode::parse(std::string_view text) {
  if (text == "naive") return naive();
  if (text == "heuristic") return heuristic_only();
  if (text == "rotation") return rotation_heuristic();
  if (text == "full") return full();
  if (text.size() == 3) {
    auto flag = [&](char c, char on, char off) {
      if (c == on) return true;
      if (c == off) return false;
      throw Error(ErrorCode::InvalidArgument, "bad mode flag string '" + std::string(text) + "'");
    };
    return {flag(text[0], 'E', 'e'), flag(text[1], 'R', 'r'), flag(text[2], 'H', 'h')};
  }
  throw Error(ErrorCode::InvalidArgument,
              "mode must be naive, heuristic, rotation, full or a flag string like ERH, got '" +
                  std::string(text) + "'");
}

double pixel_displacement_to_scene(double delta_px, const Pose2D& a, const Pose2D& b, double c) {
  return delta_px / (0.5 * (a.norm_scale() + b.norm_scale())) * c;
}

std::pair<Pose3D, double> ground_plane_scale(const Pose3D& pose, double root_height,
                                             const Skeleton& skeleton) {
  if (!(root_height > 0.0))
    throw Error(ErrorCode::DegenerateScaling,
                "root height " + std::to_string(root_height) + " is not above the ground plane");
  const Eigen::Vector3d root = pose.joint(skeleton.root());
  const double drop = root.y() - lowest_foot_y(pose, skeleton);
  if (!(drop > kMinDrop))
    throw Error(ErrorCode::DegenerateScaling, "lowest foot is not below the root");
  const double s = root_height / drop;
  const Eigen::RowVector3d new_root(root.x(), root_height, root.z());
  Pose3D out;
  out.coords.resize(pose.coords.rows(), 3);
  for (Eigen::Index i = 0; i < pose.coords.rows(); ++i)
    out.coords.row(i) = new_root + s * (pose.coords.row(i) - root.transpose());
  return {std::move(out), s};
}

ReconstructionResult reconstruct(std::span<const Pose2D> poses,
                                 std::span<const LiftPrediction> predictions,
                                 const AblationMode& mode, const Constants& constants,
                                 const Skeleton& skeleton) {
  constants.validate();
  const std::size_t n = poses.size();
  if (n < 2) throw Error(ErrorCode::FewerThanTwoPoses, "a scene needs at least two poses");
  if (predictions.size() != n)
    throw Error(ErrorCode::JointCountMismatch, std::to_string(n) + " poses but " +
                                                   std::to_string(predictions.size()) + " predictions");
  for (const auto& p : poses)
    if (p.size() != skeleton.size())
      throw Error(ErrorCode::JointCountMismatch, "pose joint count differs from the skeleton");

  const double c = constants.c;
  ReconstructionResult result;
  result.anchor = pick_anchor(poses);
  result.rotation_angles.assign(n, 0.0);
  result.contact_assumed.assign(n, false);
  result.vertical_offsets.assign(n, 0.0);
  result.horizontal_offsets.assign(n, 0.0);
  result.root_heights.assign(n, 0.0);
  result.scale_factors.assign(n, 1.0);
  result.effective_thetas.resize(n);

  // Lift each pose on its own, move every root to the shared origin, then
  // optionally undo the camera tilt.
  std::vector<Pose3D> levelled;
  levelled.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const ElevationAngle theta(predictions[i].theta);
    Pose3D pose = root_centred(lift_pose(poses[i], predictions[i], c), skeleton.root());
    if (mode.rotation_compensation) {
      pose = rotate_pose(pose, rotation_about_x(theta), Eigen::Vector3d::Zero());
      result.rotation_angles[i] = theta.radians();
    }
    levelled.push_back(std::move(pose));
    result.effective_thetas[i] = predictions[i].theta;
  }

  const std::size_t a = result.anchor;
  const Pose2D& anchor = poses[a];
  for (std::size_t i = 0; i < n; ++i) {
    if (i == a) continue;
    const Eigen::Vector2d delta_px = poses[i].root_pixel() - anchor.root_pixel();
    const bool contact = mode.contact_heuristic && std::abs(delta_px.y()) <= constants.contact_threshold_px;
    result.contact_assumed[i] = contact;

    if (contact) {
      // Both angles are taken to be equal (their mean), so no vertical offset remains.
      const double mean = 0.5 * (predictions[a].theta + predictions[i].theta);
      result.effective_thetas[i] = mean;
      if (n == 2) {
        result.effective_thetas[a] = mean;
        result.contact_assumed[a] = true;
      }
      result.vertical_offsets[i] = 0.0;
    } else if (mode.elevation_compensation) {
      result.vertical_offsets[i] = elevation_offset(ElevationAngle(predictions[a].theta),
                                                    ElevationAngle(predictions[i].theta), c);
    } else {
      result.vertical_offsets[i] = pixel_displacement_to_scene(-delta_px.y(), anchor, poses[i], c);
    }
    result.horizontal_offsets[i] = pixel_displacement_to_scene(delta_px.x(), anchor, poses[i], c);
  }

  // The anchor keeps its own lifted proportions; its root height is the
  // distance from root down to its lowest foot.
  const double anchor_height = -lowest_foot_y(levelled[a], skeleton);
  if (!(anchor_height > kMinDrop))
    throw Error(ErrorCode::DegenerateScaling, "anchor pose has no foot below its root");

  result.scene.poses.resize(n);
  result.scene.root_offsets.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double height = anchor_height + result.vertical_offsets[i];
    if (!(height > 0.0))
      throw Error(ErrorCode::DegenerateScaling,
                  "pose " + std::to_string(i) + " root would lie on or below the ground plane");
    Pose3D shifted = levelled[i];
    shifted.coords.col(0).array() += result.horizontal_offsets[i];
    auto [scaled, s] = ground_plane_scale(shifted, height, skeleton);
    result.root_heights[i] = height;
    result.scale_factors[i] = s;
    result.scene.root_offsets[i] = scaled.joint(skeleton.root());
    result.scene.poses[i] = std::move(scaled);
  }
  return result;
}

Scene3D replay(std::span<const Pose3D> lifted, const ReconstructionResult& result,
               const Skeleton& skeleton) {
  if (lifted.size() != result.scene.poses.size())
    throw Error(ErrorCode::JointCountMismatch, "replay needs one lifted pose per scene pose");
  Scene3D scene;
  for (std::size_t i = 0; i < lifted.size(); ++i) {
    Pose3D pose = root_centred(lifted[i], skeleton.root());
    if (result.rotation_angles[i] != 0.0)
      pose = rotate_pose(pose, rotation_about_x(ElevationAngle(result.rotation_angles[i])),
                         Eigen::Vector3d::Zero());
    const Eigen::RowVector3d offset = result.scene.root_offsets[i].transpose();
    pose.coords = (pose.coords * result.scale_factors[i]).rowwise() + offset;
    scene.poses.push_back(std::move(pose));
    scene.root_offsets.push_back(result.scene.root_offsets[i]);
  }
  return scene;
}

}  // namespace mpscene
