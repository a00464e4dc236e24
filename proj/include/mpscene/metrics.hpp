#pragma once

#include <span>
#include <vector>

#include "mpscene/core.hpp"
#include "mpscene/geometry.hpp"

namespace mpscene {

/// x -> scale * R x + translation.
struct SimilarityTransform {
  double scale = 1.0;
  RotationMatrix3 rotation;
  Eigen::Vector3d translation = Eigen::Vector3d::Zero();

  Points3 apply(const Points3& points) const;
  Scene3D apply(const Scene3D& scene) const;
};

struct AlignedScene {
  SimilarityTransform transform;
  Scene3D scene;
};

/// One similarity transform for all joints of all poses, minimizing the summed
/// squared joint distance to `gt`.
AlignedScene align_scene(const Scene3D& predicted, const Scene3D& gt);

/// Mean joint distance pooled over every pose, without any alignment.
double mpjpe(const Scene3D& predicted, const Scene3D& gt, double mm_per_unit = 1.0);

/// Rigid-scene aligned, pooled mean joint distance.
double pa_mpjpe(const Scene3D& predicted, const Scene3D& gt, double mm_per_unit = 1.0);

struct ScaleError {
  double mm = 0.0;
  double percent = 0.0;
  double abs_mm = 0.0;
  double abs_percent = 0.0;
};

/// Per pose, Frobenius norm of the root-centred joints; the signed and absolute
/// predicted-minus-gt differences are averaged over poses.
ScaleError scale_error(const Scene3D& predicted, const Scene3D& gt, std::size_t root,
                       double mm_per_unit = 1.0);

/// L2 norm of the per-axis mean absolute root error over poses.
double translation_error(const Scene3D& predicted, const Scene3D& gt, std::size_t root,
                         double mm_per_unit = 1.0);

enum class RdeVariant {
  /// || d_pred - d_gt || of the displacement vectors.
  Vector,
  /// | ||d_pred|| - ||d_gt|| |.
  Magnitude,
};

/// Error of the pelvis displacement of every pose relative to the first,
/// averaged over the non-first poses.
double root_displacement_error(const Scene3D& predicted, const Scene3D& gt, std::size_t root,
                               double mm_per_unit = 1.0, RdeVariant variant = RdeVariant::Vector);

struct FrameMetrics {
  int frame_id = 0;
  double pa_mpjpe = 0.0;
  double se_percent = 0.0;
  double se_mm = 0.0;
  double se_abs_percent = 0.0;
  double se_abs_mm = 0.0;
  double te = 0.0;
  double rde = 0.0;
};

/// Aligns once, then computes every metric on the aligned prediction.
FrameMetrics evaluate_frame(int frame_id, const Scene3D& predicted, const Scene3D& gt,
                            const Skeleton& skeleton, double mm_per_unit,
                            RdeVariant variant = RdeVariant::Vector);

struct MetricReport {
  std::vector<FrameMetrics> frames;
  FrameMetrics mean;
};

/// Arithmetic mean over frames, summed pairwise in frame order.
MetricReport aggregate(std::vector<FrameMetrics> frames);

/// Pairwise (cascade) summation; the result only depends on the input order.
double pairwise_sum(std::span<const double> values);

}  // namespace mpscene
