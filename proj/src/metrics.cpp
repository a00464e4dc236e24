#include "mpscene/metrics.hpp"

#include <Eigen/LU>
#include <Eigen/SVD>

#include <cmath>

namespace mpscene {
namespace {

void check_pair(const Scene3D& predicted, const Scene3D& gt) {
  if (predicted.poses.size() != gt.poses.size() || predicted.poses.empty())
    throw Error(ErrorCode::JointCountMismatch, "scenes hold different numbers of poses");
  for (std::size_t i = 0; i < gt.poses.size(); ++i)
    if (predicted.poses[i].coords.rows() != gt.poses[i].coords.rows())
      throw Error(ErrorCode::JointCountMismatch,
                  "pose " + std::to_string(i) + " has different joint counts");
}

Points3 stack(const Scene3D& scene) {
  Eigen::Index rows = 0;
  for (const auto& p : scene.poses) rows += p.coords.rows();
  Points3 out(rows, 3);
  Eigen::Index at = 0;
  for (const auto& p : scene.poses) {
    out.middleRows(at, p.coords.rows()) = p.coords;
    at += p.coords.rows();
  }
  return out;
}

Eigen::Vector3d root_of(const Pose3D& pose, std::size_t root) { return pose.joint(root); }

}  // namespace

Points3 SimilarityTransform::apply(const Points3& points) const {
  Points3 out = (points * rotation.matrix().transpose()) * scale;
  out.rowwise() += translation.transpose();
  return out;
}

Scene3D SimilarityTransform::apply(const Scene3D& scene) const {
  Scene3D out;
  for (const auto& p : scene.poses) out.poses.push_back({apply(p.coords)});
  for (const auto& r : scene.root_offsets) out.root_offsets.push_back(scale * (rotation * r) + translation);
  return out;
}

AlignedScene align_scene(const Scene3D& predicted, const Scene3D& gt) {
  check_pair(predicted, gt);
  const Points3 src = stack(predicted);
  const Points3 dst = stack(gt);
  const double count = static_cast<double>(src.rows());

  const Eigen::RowVector3d mu_src = src.colwise().mean();
  const Eigen::RowVector3d mu_dst = dst.colwise().mean();
  const Points3 src_c = src.rowwise() - mu_src;
  const Points3 dst_c = dst.rowwise() - mu_dst;

  const double var_src = src_c.squaredNorm() / count;
  if (!(var_src > 1e-24))
    throw Error(ErrorCode::DegenerateConfiguration, "all predicted joints coincide");

  const Eigen::Matrix3d cov = dst_c.transpose() * src_c / count;
  Eigen::JacobiSVD<Eigen::Matrix3d> svd(cov, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Eigen::Vector3d d = Eigen::Vector3d::Ones();
  if (svd.matrixU().determinant() * svd.matrixV().determinant() < 0.0) d(2) = -1.0;

  const Eigen::Matrix3d r = svd.matrixU() * d.asDiagonal() * svd.matrixV().transpose();

  AlignedScene out;
  out.transform.scale = svd.singularValues().dot(d) / var_src;
  out.transform.rotation = RotationMatrix3(r);
  out.transform.translation = mu_dst.transpose() - out.transform.scale * (r * mu_src.transpose());
  out.scene = out.transform.apply(predicted);
  return out;
}

double mpjpe(const Scene3D& predicted, const Scene3D& gt, double mm_per_unit) {
  check_pair(predicted, gt);
  std::vector<double> distances;
  for (std::size_t i = 0; i < gt.poses.size(); ++i)
    for (Eigen::Index j = 0; j < gt.poses[i].coords.rows(); ++j)
      distances.push_back((predicted.poses[i].coords.row(j) - gt.poses[i].coords.row(j)).norm());
  return pairwise_sum(distances) / static_cast<double>(distances.size()) * mm_per_unit;
}

double pa_mpjpe(const Scene3D& predicted, const Scene3D& gt, double mm_per_unit) {
  return mpjpe(align_scene(predicted, gt).scene, gt, mm_per_unit);
}

ScaleError scale_error(const Scene3D& predicted, const Scene3D& gt, std::size_t root,
                       double mm_per_unit) {
  check_pair(predicted, gt);
  ScaleError out;
  const double n = static_cast<double>(gt.poses.size());
  for (std::size_t i = 0; i < gt.poses.size(); ++i) {
    const auto norm_of = [root](const Pose3D& p) {
      return (p.coords.rowwise() - p.coords.row(static_cast<Eigen::Index>(root))).norm();
    };
    const double gt_norm = norm_of(gt.poses[i]);
    if (gt_norm < 1e-9)
      throw Error(ErrorCode::ZeroNormPose, "ground-truth pose " + std::to_string(i) + " has zero size");
    const double diff = norm_of(predicted.poses[i]) - gt_norm;
    out.mm += diff / n;
    out.abs_mm += std::abs(diff) / n;
    out.percent += diff / gt_norm * 100.0 / n;
    out.abs_percent += std::abs(diff) / gt_norm * 100.0 / n;
  }
  out.mm *= mm_per_unit;
  out.abs_mm *= mm_per_unit;
  return out;
}

double translation_error(const Scene3D& predicted, const Scene3D& gt, std::size_t root,
                         double mm_per_unit) {
  check_pair(predicted, gt);
  Eigen::Vector3d mean_abs = Eigen::Vector3d::Zero();
  for (std::size_t i = 0; i < gt.poses.size(); ++i)
    mean_abs += (root_of(predicted.poses[i], root) - root_of(gt.poses[i], root)).cwiseAbs();
  mean_abs /= static_cast<double>(gt.poses.size());
  return mean_abs.norm() * mm_per_unit;
}

double root_displacement_error(const Scene3D& predicted, const Scene3D& gt, std::size_t root,
                               double mm_per_unit, RdeVariant variant) {
  check_pair(predicted, gt);
  if (gt.poses.size() < 2) return 0.0;
  double total = 0.0;
  const Eigen::Vector3d p0 = root_of(predicted.poses[0], root);
  const Eigen::Vector3d g0 = root_of(gt.poses[0], root);
  for (std::size_t i = 1; i < gt.poses.size(); ++i) {
    const Eigen::Vector3d dp = root_of(predicted.poses[i], root) - p0;
    const Eigen::Vector3d dg = root_of(gt.poses[i], root) - g0;
    total += variant == RdeVariant::Vector ? (dp - dg).norm() : std::abs(dp.norm() - dg.norm());
  }
  return total / static_cast<double>(gt.poses.size() - 1) * mm_per_unit;
}

FrameMetrics evaluate_frame(int frame_id, const Scene3D& predicted, const Scene3D& gt,
                            const Skeleton& skeleton, double mm_per_unit, RdeVariant variant) {
  const Scene3D aligned = align_scene(predicted, gt).scene;
  const std::size_t root = skeleton.root();
  FrameMetrics m;
  m.frame_id = frame_id;
  m.pa_mpjpe = mpjpe(aligned, gt, mm_per_unit);
  const ScaleError se = scale_error(aligned, gt, root, mm_per_unit);
  m.se_mm = se.mm;
  m.se_percent = se.percent;
  m.se_abs_mm = se.abs_mm;
  m.se_abs_percent = se.abs_percent;
  m.te = translation_error(aligned, gt, root, mm_per_unit);
  m.rde = root_displacement_error(aligned, gt, root, mm_per_unit, variant);
  return m;
}

double pairwise_sum(std::span<const double> values) {
  if (values.size() <= 8) {
    double s = 0.0;
    for (double v : values) s += v;
    return s;
  }
  const std::size_t half = values.size() / 2;
  return pairwise_sum(values.first(half)) + pairwise_sum(values.subspan(half));
}

MetricReport aggregate(std::vector<FrameMetrics> frames) {
  MetricReport report;
  report.frames = std::move(frames);
  if (report.frames.empty()) return report;
  const double n = static_cast<double>(report.frames.size());
  auto mean_of = [&](double FrameMetrics::*field) {
    std::vector<double> v;
    v.reserve(report.frames.size());
    for (const auto& f : report.frames) v.push_back(f.*field);
    return pairwise_sum(v) / n;
  };
  report.mean.frame_id = -1;
  report.mean.pa_mpjpe = mean_of(&FrameMetrics::pa_mpjpe);
  report.mean.se_percent = mean_of(&FrameMetrics::se_percent);
  report.mean.se_mm = mean_of(&FrameMetrics::se_mm);
  report.mean.se_abs_percent = mean_of(&FrameMetrics::se_abs_percent);
  report.mean.se_abs_mm = mean_of(&FrameMetrics::se_abs_mm);
  report.mean.te = mean_of(&FrameMetrics::te);
  report.mean.rde = mean_of(&FrameMetrics::rde);
  return report;
}

}  // namespace mpscene
