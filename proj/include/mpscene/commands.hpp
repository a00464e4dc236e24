#pragma once

#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "mpscene/composer.hpp"
#include "mpscene/dataset.hpp"
#include "mpscene/lifter.hpp"
#include "mpscene/metrics.hpp"
#include "mpscene/synth.hpp"

namespace mpscene {

/// Options shared by all subcommands. Each command reads the fields it needs.
struct RunConfig {
  std::filesystem::path dataset;
  std::filesystem::path out;
  /// Reconstruction directory read by `evaluate`; defaults to <out>/scenes.
  std::optional<std::filesystem::path> scenes;
  AblationMode mode = AblationMode::full();
  /// Default depends on the command: oracle for reconstruct, noisy oracle for ablate.
  std::optional<std::string> predictor;
  std::uint64_t seed = 0;
  Constants constants;
  int workers = 1;
  bool emit_plot_data = false;
  RdeVariant rde_variant = RdeVariant::Vector;

  // generate
  int frames = 500;
  std::vector<double> elevations_deg{0.0, 10.0, 20.0, 30.0};
  std::optional<Range> elevation_range_deg;
  SceneSpec scene;
  CameraConfig camera;

  void validate() const;
  /// Keys mirror the long flag names with '-' replaced by '_'. Unknown keys
  /// are rejected with InvalidArgument.
  static RunConfig from_json(const nlohmann::json& j);
};

inline constexpr const char* kDefaultAblationPredictor = "noisy:0.1,0.05";

void cmd_generate(const RunConfig& config, std::ostream& log);
void cmd_reconstruct(const RunConfig& config, std::ostream& log);
MetricReport cmd_evaluate(const RunConfig& config, std::ostream& log);

struct AblationRow {
  AblationMode mode;
  FrameMetrics mean;
};

struct AblationResult {
  std::vector<AblationRow> rows;
  std::size_t frames_used = 0;
  /// Frames skipped because some mode could not reconstruct them.
  std::vector<int> failed_frames;
};

AblationResult cmd_ablate(const RunConfig& config, std::ostream& log);

/// Column headers of ablation.csv, in order.
const std::vector<std::string>& ablation_csv_columns();
/// Column headers of metrics.csv, in order.
const std::vector<std::string>& metrics_csv_columns();

/// Process exit status for an error code: 2 validation, 3 data.
int exit_code_for(ErrorCode code);

}  // namespace mpscene
