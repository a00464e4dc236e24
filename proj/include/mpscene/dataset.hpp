#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "mpscene/composer.hpp"
#include "mpscene/lifter.hpp"
#include "mpscene/metrics.hpp"
#include "mpscene/synth.hpp"

namespace mpscene {

inline constexpr int kSchemaVersion = 1;

/// Elevations for a generated dataset: either a stratified list (frame i uses
/// elevations[i % size]) or a uniform draw per frame.
struct CameraSweep {
  CameraConfig base;
  std::vector<double> elevations_deg{0.0};
  std::optional<Range> uniform_deg;

  void validate() const;
  double elevation_for(std::uint64_t seed, int index) const;
  nlohmann::json to_json() const;
};

struct DatasetFrame {
  int frame_id = 0;
  double elevation_deg = 0.0;
  std::vector<Points2> pixel_coords;
};

struct FrameTruth {
  int frame_id = 0;
  double mm_per_unit = kMillimetresPerUnit;
  Scene3D world;
  std::vector<Points3> camera_frame;
  std::vector<GroundTruthLift> lifts;
};

struct Dataset {
  std::filesystem::path root;
  Skeleton skeleton = Skeleton::standard();
  nlohmann::json spec;
  std::vector<DatasetFrame> frames;
  /// Empty when the dataset ships without ground truth.
  std::vector<FrameTruth> truth;
};

/// Writes scene_spec.json, skeleton.json, frames/NNNN.json, gt/NNNN.json and
/// predictions/oracle.json. Output bytes depend only on the arguments.
void generate_dataset(const std::filesystem::path& dir, const SceneSpec& spec,
                      const CameraSweep& sweep, int count, int workers = 1);

Dataset load_dataset(const std::filesystem::path& dir);

std::string frame_file_name(int frame_id);

nlohmann::json frame_to_json(const GroundTruthFrame& frame, const Skeleton& skeleton);
nlohmann::json truth_to_json(const GroundTruthFrame& frame);
DatasetFrame frame_from_json(const nlohmann::json& j, const Skeleton& skeleton);
FrameTruth truth_from_json(const nlohmann::json& j);

nlohmann::json points_to_json(const Points3& points);
Points3 points3_from_json(const nlohmann::json& j, const std::string& where);

/// Reconstructed scene plus its transform diagnostics.
nlohmann::json scene_to_json(int frame_id, const ReconstructionResult& result, const AblationMode& mode);
Scene3D scene_from_json(const nlohmann::json& j);

nlohmann::json read_json(const std::filesystem::path& path);
/// Serialized with a trailing newline; throws IoFailure on error.
void write_json(const std::filesystem::path& path, const nlohmann::json& j);
void write_text(const std::filesystem::path& path, const std::string& text);

}  // namespace mpscene
