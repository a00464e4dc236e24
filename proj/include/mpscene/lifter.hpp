#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <string>
#include <string_view>
#include <utility>

#include "mpscene/core.hpp"

namespace mpscene {

/// Ground-truth lift of one pose, as produced by the synthetic generator.
struct GroundTruthLift {
  Eigen::VectorXd depth_offsets;
  double theta = 0.0;
};

/// Everything a predictor may know about the pose besides its 2D keypoints.
/// No information about other poses in the frame is ever passed.
struct PredictionContext {
  int frame_id = 0;
  int pose_id = 0;
  const GroundTruthLift* truth = nullptr;
};

class Predictor {
 public:
  virtual ~Predictor() = default;
  virtual LiftPrediction predict(const Pose2D& pose, const PredictionContext& context) const = 0;
};

/// Returns the generator's true depth offsets and elevation angle.
class OraclePredictor final : public Predictor {
 public:
  LiftPrediction predict(const Pose2D& pose, const PredictionContext& context) const override;
};

/// Scope of the elevation-angle error drawn by the noisy oracle.
enum class ThetaNoiseScope {
  /// One draw per (seed, frame): every pose of the frame shares the camera-level error.
  Frame,
  /// An independent draw per (seed, frame, pose).
  Pose,
};

/// Oracle plus additive zero-mean Gaussian noise. Every draw is derived from
/// (seed, frame id, pose id), so results do not depend on call order.
class NoisyOraclePredictor final : public Predictor {
 public:
  NoisyOraclePredictor(double sigma_depth, double sigma_theta, std::uint64_t seed,
                       ThetaNoiseScope scope = ThetaNoiseScope::Frame);
  LiftPrediction predict(const Pose2D& pose, const PredictionContext& context) const override;

 private:
  double sigma_depth_;
  double sigma_theta_;
  std::uint64_t seed_;
  ThetaNoiseScope scope_;
};

/// In-memory prediction store keyed by (frame id, pose id).
class PredictionStore {
 public:
  using Key = std::pair<int, int>;

  /// Throws SchemaViolation on a duplicate key.
  void insert(int frame_id, int pose_id, LiftPrediction prediction);
  const LiftPrediction* find(int frame_id, int pose_id) const;
  std::size_t size() const noexcept { return entries_.size(); }
  const std::map<Key, LiftPrediction>& entries() const noexcept { return entries_; }

  nlohmann::json to_json() const;
  /// Validates against the version-1 schema; errors name the offending field path.
  static PredictionStore from_json(const nlohmann::json& j);
  /// Parse errors report the line and column of the failure.
  static PredictionStore parse(std::string_view text);

 private:
  std::map<Key, LiftPrediction> entries_;
};

PredictionStore load_predictions(const std::filesystem::path& path);
void save_predictions(const std::filesystem::path& path, const PredictionStore& store);

/// Reads predictions from a store; PredictionNotFound for unknown keys.
class FilePredictor final : public Predictor {
 public:
  explicit FilePredictor(PredictionStore store) : store_(std::move(store)) {}
  LiftPrediction predict(const Pose2D& pose, const PredictionContext& context) const override;

 private:
  PredictionStore store_;
};

struct PredictorSpec {
  enum class Kind { Oracle, NoisyOracle, File };
  Kind kind = Kind::Oracle;
  double sigma_depth = 0.0;
  double sigma_theta = 0.0;
  ThetaNoiseScope theta_scope = ThetaNoiseScope::Frame;
  std::uint64_t seed = 0;
  std::filesystem::path path;

  void validate() const;
  /// "oracle", "noisy:<sigma_d>,<sigma_theta>[,pose|frame]" or "file:<path>".
  static PredictorSpec parse(std::string_view text);
};

std::unique_ptr<Predictor> make_predictor(const PredictorSpec& spec);

}  // namespace mpscene
