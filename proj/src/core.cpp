#include "mpscene/core.hpp"

#include <algorithm>
#include <cmath>

namespace mpscene {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::MissingJoint: return "MissingJoint";
    case ErrorCode::DegeneratePose: return "DegeneratePose";
    case ErrorCode::NonFiniteInput: return "NonFiniteInput";
    case ErrorCode::JointCountMismatch: return "JointCountMismatch";
    case ErrorCode::DepthTooSmall: return "DepthTooSmall";
    case ErrorCode::MissingGroundTruth: return "MissingGroundTruth";
    case ErrorCode::PredictionNotFound: return "PredictionNotFound";
    case ErrorCode::SchemaViolation: return "SchemaViolation";
    case ErrorCode::FewerThanTwoPoses: return "FewerThanTwoPoses";
    case ErrorCode::DegenerateScaling: return "DegenerateScaling";
    case ErrorCode::DegenerateConfiguration: return "DegenerateConfiguration";
    case ErrorCode::ZeroNormPose: return "ZeroNormPose";
    case ErrorCode::InvalidSpec: return "InvalidSpec";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::IoFailure: return "IoFailure";
    case ErrorCode::ScenePairMismatch: return "ScenePairMismatch";
  }
  return "UnknownError";
}

// ------------------------------------------------------------------ skeleton

Skeleton::Skeleton(std::vector<std::string> joint_names, std::string_view root,
                   std::string_view head, std::string_view left_hip,
                   std::string_view right_hip, const std::vector<std::string>& feet)
    : names_(std::move(joint_names)) {
  if (names_.empty()) throw Error(ErrorCode::InvalidSpec, "skeleton has no joints");
  for (std::size_t i = 0; i < names_.size(); ++i) {
    if (names_[i].empty()) throw Error(ErrorCode::InvalidSpec, "empty joint name");
    if (std::count(names_.begin(), names_.end(), names_[i]) != 1)
      throw Error(ErrorCode::InvalidSpec, "duplicate joint name '" + names_[i] + "'");
  }
  root_ = index_of(root);
  head_ = index_of(head);
  left_hip_ = index_of(left_hip);
  right_hip_ = index_of(right_hip);
  if (head_ == root_) throw Error(ErrorCode::InvalidSpec, "head and root must differ");
  if (feet.empty()) throw Error(ErrorCode::InvalidSpec, "skeleton declares no feet");
  for (const auto& f : feet) feet_.push_back(index_of(f));
}

const Skeleton& Skeleton::standard() {
  static const Skeleton skeleton(
      {"pelvis", "r_hip", "r_knee", "r_foot", "l_hip", "l_knee", "l_foot", "spine", "thorax",
       "head", "l_shoulder", "l_elbow", "l_wrist", "r_shoulder", "r_elbow", "r_wrist", "l_hand",
       "r_hand"},
      "pelvis", "head", "l_hip", "r_hip", {"l_foot", "r_foot"});
  return skeleton;
}

std::size_t Skeleton::index_of(std::string_view name) const {
  auto it = std::find(names_.begin(), names_.end(), name);
  if (it == names_.end())
    throw Error(ErrorCode::MissingJoint, "joint '" + std::string(name) + "' not in skeleton");
  return static_cast<std::size_t>(it - names_.begin());
}

Skeleton Skeleton::from_json(const nlohmann::json& j) {
  auto field = [&](const char* key) -> const nlohmann::json& {
    if (!j.is_object() || !j.contains(key))
      throw Error(ErrorCode::SchemaViolation, std::string("skeleton: missing field '") + key + "'");
    return j.at(key);
  };
  try {
    if (field("version").get<int>() != 1)
      throw Error(ErrorCode::SchemaViolation, "skeleton: unsupported version");
    const auto& hips = field("hips");
    if (!hips.is_array() || hips.size() != 2)
      throw Error(ErrorCode::SchemaViolation, "skeleton: 'hips' must list [left, right]");
    return Skeleton(field("joints").get<std::vector<std::string>>(),
                    field("root").get<std::string>(), field("head").get<std::string>(),
                    hips[0].get<std::string>(), hips[1].get<std::string>(),
                    field("feet").get<std::vector<std::string>>());
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::SchemaViolation, std::string("skeleton: ") + e.what());
  }
}

nlohmann::json Skeleton::to_json() const {
  std::vector<std::string> feet;
  for (auto f : feet_) feet.push_back(names_[f]);
  return {{"version", 1},
          {"joints", names_},
          {"root", names_[root_]},
          {"head", names_[head_]},
          {"hips", {names_[left_hip_], names_[right_hip_]}},
          {"feet", feet}};
}

void Constants::validate() const {
  if (!std::isfinite(c) || c <= 1.0)
    throw Error(ErrorCode::InvalidArgument, "c must be finite and > 1");
  if (!std::isfinite(contact_threshold_px) || contact_threshold_px < 0.0)
    throw Error(ErrorCode::InvalidArgument, "contact threshold must be finite and >= 0");
}

// ------------------------------------------------------------- normalization

Pose2D normalize_pose(const Points2& raw, const Skeleton& skeleton, double c) {
  if (!std::isfinite(c) || c <= 1.0) throw Error(ErrorCode::InvalidArgument, "c must be > 1");
  if (static_cast<std::size_t>(raw.rows()) != skeleton.size())
    throw Error(ErrorCode::JointCountMismatch,
                "expected " + std::to_string(skeleton.size()) + " joints, got " +
                    std::to_string(raw.rows()));
  for (Eigen::Index i = 0; i < raw.rows(); ++i) {
    if (!raw.row(i).allFinite())
      throw Error(ErrorCode::MissingJoint,
                  "joint '" + skeleton.name(static_cast<std::size_t>(i)) + "' is missing");
  }

  const Eigen::Vector2d root = raw.row(static_cast<Eigen::Index>(skeleton.root())).transpose();
  const Eigen::Vector2d head = raw.row(static_cast<Eigen::Index>(skeleton.head())).transpose();
  const double head_px = (head - root).norm();
  if (head_px < 1e-6)
    throw Error(ErrorCode::DegeneratePose, "head coincides with the root; scale undefined");

  Pose2D pose;
  pose.pixel_ = raw;
  pose.root_pixel_ = root;
  pose.scale_ = head_px * c;
  pose.norm_.resize(raw.rows(), 2);
  for (Eigen::Index i = 0; i < raw.rows(); ++i) {
    pose.norm_(i, 0) = (raw(i, 0) - root.x()) / pose.scale_;
    pose.norm_(i, 1) = -(raw(i, 1) - root.y()) / pose.scale_;
  }
  pose.norm_.row(static_cast<Eigen::Index>(skeleton.root())).setZero();
  return pose;
}

Points2 denormalize(const Pose2D& pose) {
  const auto& norm = pose.norm_coords();
  Points2 out(norm.rows(), 2);
  const Eigen::Vector2d root = pose.root_pixel();
  for (Eigen::Index i = 0; i < norm.rows(); ++i) {
    out(i, 0) = norm(i, 0) * pose.norm_scale() + root.x();
    out(i, 1) = -norm(i, 1) * pose.norm_scale() + root.y();
  }
  return out;
}

}  // namespace mpscene
