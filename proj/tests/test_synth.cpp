#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "mpscene/geometry.hpp"
#include "mpscene/synth.hpp"
#include "support.hpp"

using namespace mpscene;

namespace {

constexpr double kDeg = std::numbers::pi / 180.0;

CameraConfig camera_at(double deg) {
  CameraConfig cam;
  cam.elevation_deg = deg;
  return cam;
}

Eigen::Vector3d pelvis(const GroundTruthFrame& f, std::size_t p) {
  return f.world.poses[p].joint(Skeleton::standard().root());
}

}  // namespace

TEST(GenerateFrame, Deterministic) {
  SceneSpec spec;
  spec.seed = 42;
  for (int i = 0; i < 20; ++i) {
    const GroundTruthFrame a = generate_frame(spec, camera_at(20), i);
    const GroundTruthFrame b = generate_frame(spec, camera_at(20), i);
    ASSERT_EQ(a.pixel_coords.size(), b.pixel_coords.size());
    for (std::size_t p = 0; p < a.pixel_coords.size(); ++p) {
      EXPECT_EQ(a.pixel_coords[p], b.pixel_coords[p]);
      EXPECT_EQ(a.world.poses[p].coords, b.world.poses[p].coords);
      EXPECT_EQ(a.theta[p], b.theta[p]);
    }
  }
  spec.seed = 43;
  EXPECT_NE(generate_frame(spec, camera_at(20), 0).pixel_coords[0],
            generate_frame(SceneSpec{.seed = 42}, camera_at(20), 0).pixel_coords[0]);
}

TEST(GenerateFrame, InternallyConsistent) {
  for (const char* library : {"mixed", "standing", "crouching", "reaching", "leaning"}) {
    SceneSpec spec;
    spec.seed = 7;
    spec.pose_library = library;
    spec.depth_separation = {0.0, 1.0};
    // One pose family alone cannot produce the default 0.8-1.2 height gap within the scale range.
    if (spec.pose_library != "mixed") spec.root_height_difference = {0.0, 0.3};
    for (int i = 0; i < 50; ++i) {
      const GroundTruthFrame f = generate_frame(spec, camera_at(-40.0 + 80.0 * i / 49.0), i);
      EXPECT_LT(validate_frame(f), 1e-9) << library << " frame " << i;
      EXPECT_EQ(f.poses.size(), 2u);
      EXPECT_LT(f.pixel_coords[0](Skeleton::standard().root(), 0),
                f.pixel_coords[1](Skeleton::standard().root(), 0));
    }
  }
}

TEST(GenerateFrame, FeetOnTheGround) {
  SceneSpec spec;
  spec.seed = 3;
  const Skeleton& sk = Skeleton::standard();
  for (int i = 0; i < 100; ++i) {
    const GroundTruthFrame f = generate_frame(spec, camera_at(15), i);
    for (const auto& pose : f.world.poses) {
      double lowest = INFINITY;
      for (auto j : sk.feet()) lowest = std::min(lowest, pose.coords(static_cast<Eigen::Index>(j), 1));
      EXPECT_NEAR(lowest, 0.0, 1e-12);
      EXPECT_GE(pose.coords.col(1).minCoeff(), -1e-12);
    }
  }
}

// Two pelvises at the same depth c: their height difference is what the
// elevation-offset formula predicts from the two angles alone.
TEST(GenerateFrame, HeightDifferenceMatchesElevationOffset) {
  SceneSpec spec;
  spec.seed = 11;
  spec.contact_fraction = 0.0;
  for (int i = 0; i < 500; ++i) {
    const CameraConfig cam = camera_at(-40.0 + 80.0 * (i % 81) / 80.0);
    const GroundTruthFrame f = generate_frame(spec, cam, i);
    const double dy = pelvis(f, 1).y() - pelvis(f, 0).y();
    const double predicted = elevation_offset(ElevationAngle(f.theta[0]), ElevationAngle(f.theta[1]), cam.c);
    ASSERT_NEAR(predicted, dy, 1e-9) << "frame " << i;
    ASSERT_GE(std::abs(dy), spec.root_height_difference.lo - 1e-12);
  }
}

TEST(GenerateFrame, TiltCompensationRecoversLevelPose) {
  SceneSpec spec;
  spec.seed = 12;
  bool flipped_failed = false;
  for (int i = 0; i < 200; ++i) {
    const GroundTruthFrame f = generate_frame(spec, camera_at(5.0 + 30.0 * (i % 31) / 30.0), i);
    for (std::size_t p = 0; p < 2; ++p) {
      const Points3& cam = f.camera_frame[p];
      const Eigen::Vector3d root = cam.row(Skeleton::standard().root()).transpose();
      const ElevationAngle theta(f.theta[p]);
      double err = 0.0, err_flipped = 0.0;
      for (Eigen::Index j = 0; j < cam.rows(); ++j) {
        const Eigen::Vector3d rel = cam.row(j).transpose() - root;
        const Eigen::Vector3d want = f.world.poses[p].coords.row(j).transpose() - pelvis(f, p);
        err = std::max(err, (rotation_about_x(theta) * rel - want).norm());
        err_flipped = std::max(err_flipped, (rotation_about_x(theta, RotationSign::Flipped) * rel - want).norm());
      }
      ASSERT_LT(err, 1e-9);
      if (std::abs(f.theta[p]) > 1e-3 && err_flipped > 1e-3) flipped_failed = true;
    }
  }
  EXPECT_TRUE(flipped_failed);
}

TEST(GenerateFrame, LevelCameraWithSharedFloorSeesZeroElevation) {
  SceneSpec spec;
  spec.seed = 13;
  spec.contact_fraction = 1.0;
  for (int i = 0; i < 50; ++i) {
    const GroundTruthFrame f = generate_frame(spec, camera_at(0), i);
    EXPECT_NEAR(f.theta[0], 0.0, 1e-12);
    EXPECT_NEAR(f.theta[1], 0.0, 1e-12);
    EXPECT_NEAR(pelvis(f, 0).y(), pelvis(f, 1).y(), 1e-12);
  }
}

TEST(GenerateFrame, ElevationMatchesCameraPitchForSharedFloor) {
  SceneSpec spec;
  spec.seed = 14;
  spec.contact_fraction = 1.0;
  const GroundTruthFrame f = generate_frame(spec, camera_at(20), 0);
  EXPECT_NEAR(f.theta[0], 20.0 * kDeg, 1e-12);
  EXPECT_NEAR(f.theta[1], 20.0 * kDeg, 1e-12);
}

TEST(GenerateFrame, ContactFractionControlsShare) {
  SceneSpec spec;
  spec.seed = 15;
  spec.contact_fraction = 0.3;
  int contact = 0;
  const int n = 1000;
  for (int i = 0; i < n; ++i) {
    const GroundTruthFrame f = generate_frame(spec, camera_at(10), i);
    if (std::abs(pelvis(f, 0).y() - pelvis(f, 1).y()) < 1e-12) ++contact;
  }
  EXPECT_NEAR(static_cast<double>(contact) / n, 0.3, 0.05);
}

TEST(SceneSpec, Validation) {
  SceneSpec spec;
  spec.person_scale = {1.2, 1.0};
  EXPECT_MPSCENE_ERROR(spec.validate(), ErrorCode::InvalidSpec);
  spec = SceneSpec{};
  spec.contact_fraction = 1.5;
  EXPECT_MPSCENE_ERROR(spec.validate(), ErrorCode::InvalidSpec);
  spec = SceneSpec{};
  spec.pose_library = "dancing";
  EXPECT_MPSCENE_ERROR(spec.validate(), ErrorCode::InvalidSpec);
  spec = SceneSpec{};
  spec.depth_separation = {30.0, 30.0};
  EXPECT_MPSCENE_ERROR(generate_frame(spec, camera_at(0), 0), ErrorCode::InvalidSpec);
  spec = SceneSpec{};
  spec.person_scale = {1.0, 1.0};
  spec.root_height_difference = {5.0, 5.0};
  EXPECT_MPSCENE_ERROR(generate_frame(spec, camera_at(0), 0), ErrorCode::InvalidSpec);
  EXPECT_MPSCENE_ERROR(generate_frame(SceneSpec{}, camera_at(90), 0), ErrorCode::InvalidSpec);
  CameraConfig cam;
  cam.c = 1.0;
  EXPECT_MPSCENE_ERROR(cam.validate(), ErrorCode::InvalidSpec);
}

TEST(SceneSpec, JsonRoundTrip) {
  SceneSpec spec;
  spec.seed = 99;
  spec.depth_separation = {0.1, 0.4};
  spec.contact_fraction = 0.25;
  spec.pose_library = "leaning";
  const SceneSpec back = SceneSpec::from_json(spec.to_json());
  EXPECT_EQ(back.seed, 99u);
  EXPECT_EQ(back.depth_separation, spec.depth_separation);
  EXPECT_EQ(back.contact_fraction, 0.25);
  EXPECT_EQ(back.pose_library, "leaning");
  EXPECT_EQ(back.to_json(), spec.to_json());

  auto j = spec.to_json();
  j.erase("person_scale");
  EXPECT_MPSCENE_ERROR(SceneSpec::from_json(j), ErrorCode::SchemaViolation);

  CameraConfig cam = camera_at(12.5);
  EXPECT_EQ(CameraConfig::from_json(cam.to_json()).to_json(), cam.to_json());
}
