#pragma once

#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "mpscene/core.hpp"

namespace mpscene {

/// Which stages of the scene composition run. The four named presets are the
/// ablation rows, from the image-displacement baseline up to the full method.
struct AblationMode {
  bool elevation_compensation = true;
  bool rotation_compensation = true;
  bool contact_heuristic = true;

  static constexpr AblationMode naive() { return {false, false, false}; }
  static constexpr AblationMode heuristic_only() { return {false, false, true}; }
  static constexpr AblationMode rotation_heuristic() { return {false, true, true}; }
  static constexpr AblationMode full() { return {true, true, true}; }

  /// "naive", "heuristic", "rotation" or "full" for the presets, otherwise a flag string.
  std::string name() const;
  static AblationMode parse(std::string_view text);

  bool operator==(const AblationMode&) const = default;
};

/// The reconstructed scene plus the exact transform that produced it. Pose
/// order follows the input; `anchor` is the reference pose (smallest pelvis
/// pixel u, ties broken by smaller v) against which offsets are measured.
struct ReconstructionResult {
  Scene3D scene;
  std::size_t anchor = 0;
  /// Angle of the x-axis rotation applied to each pose (0 when disabled).
  std::vector<double> rotation_angles;
  /// Elevation angles used for the vertical offset after the contact heuristic.
  std::vector<double> effective_thetas;
  std::vector<bool> contact_assumed;
  /// Root height relative to the anchor (Δh, or the image-based estimate).
  std::vector<double> vertical_offsets;
  /// Root x relative to the anchor, from the image.
  std::vector<double> horizontal_offsets;
  std::vector<double> root_heights;
  std::vector<double> scale_factors;
};

/// Independent lift, shared root, optional rotation compensation, contact
/// heuristic, vertical and horizontal displacement, then ground-plane scaling.
ReconstructionResult reconstruct(std::span<const Pose2D> poses,
                                 std::span<const LiftPrediction> predictions,
                                 const AblationMode& mode, const Constants& constants,
                                 const Skeleton& skeleton);

/// Pixel offset converted to scene units at root depth c, using the mean of
/// the two poses' normalization scales.
double pixel_displacement_to_scene(double delta_px, const Pose2D& a, const Pose2D& b, double c);

/// Scales `pose` about its root so that the root sits at `root_height` and the
/// lowest foot at y = 0. Returns the scaled pose and the scale factor.
std::pair<Pose3D, double> ground_plane_scale(const Pose3D& pose, double root_height,
                                             const Skeleton& skeleton);

/// Re-applies the recorded transforms of `result` to freshly lifted poses.
Scene3D replay(std::span<const Pose3D> lifted, const ReconstructionResult& result,
               const Skeleton& skeleton);

}  // namespace mpscene
