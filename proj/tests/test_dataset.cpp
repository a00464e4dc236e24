#include <gtest/gtest.h>

#include "mpscene/composer.hpp"
#include "mpscene/dataset.hpp"
#include "mpscene/metrics.hpp"
#include "support.hpp"

using namespace mpscene;
using testing_support::temp_dir;
using testing_support::tree_bytes;

namespace {

CameraSweep stratified() {
  CameraSweep sweep;
  sweep.elevations_deg = {0.0, 10.0, 20.0, 30.0};
  return sweep;
}

}  // namespace

TEST(Dataset, RegenerationIsByteIdentical) {
  SceneSpec spec;
  spec.seed = 5;
  const auto a = temp_dir("ds_a"), b = temp_dir("ds_b");
  generate_dataset(a, spec, stratified(), 40, 1);
  generate_dataset(b, spec, stratified(), 40, 4);
  const auto ta = tree_bytes(a), tb = tree_bytes(b);
  EXPECT_EQ(ta.size(), 40u * 2 + 3);
  EXPECT_TRUE(ta == tb);

  spec.seed = 6;
  generate_dataset(b, spec, stratified(), 40, 1);
  EXPECT_NE(tree_bytes(b).at("frames/0000.json"), ta.at("frames/0000.json"));
}

TEST(Dataset, StratifiedElevations) {
  const auto dir = temp_dir("ds_strata");
  generate_dataset(dir, SceneSpec{}, stratified(), 500, 4);
  const Dataset ds = load_dataset(dir);
  ASSERT_EQ(ds.frames.size(), 500u);
  std::map<double, int> counts;
  for (const auto& f : ds.frames) ++counts[f.elevation_deg];
  EXPECT_EQ(counts, (std::map<double, int>{{0.0, 125}, {10.0, 125}, {20.0, 125}, {30.0, 125}}));
  for (const auto& s : ds.spec.at("stratification")) EXPECT_EQ(s.at("frames").get<int>(), 125);
  EXPECT_EQ(ds.spec.at("frame_count").get<int>(), 500);
}

TEST(Dataset, UniformElevationsStayInRange) {
  const auto dir = temp_dir("ds_uniform");
  CameraSweep sweep;
  sweep.uniform_deg = Range{5.0, 35.0};
  generate_dataset(dir, SceneSpec{}, sweep, 100);
  const Dataset ds = load_dataset(dir);
  double lo = 90, hi = -90;
  for (const auto& f : ds.frames) {
    lo = std::min(lo, f.elevation_deg);
    hi = std::max(hi, f.elevation_deg);
  }
  EXPECT_GE(lo, 5.0);
  EXPECT_LE(hi, 35.0);
  EXPECT_GT(hi - lo, 20.0);
}

TEST(Dataset, LoadedFramesMatchGenerator) {
  SceneSpec spec;
  spec.seed = 8;
  const auto dir = temp_dir("ds_load");
  generate_dataset(dir, spec, stratified(), 12);
  const Dataset ds = load_dataset(dir);
  ASSERT_EQ(ds.truth.size(), 12u);
  EXPECT_EQ(ds.skeleton, Skeleton::standard());
  const PredictionStore oracle = load_predictions(dir / "predictions" / "oracle.json");
  EXPECT_EQ(oracle.size(), 24u);

  for (std::size_t i = 0; i < ds.frames.size(); ++i) {
    CameraConfig cam;
    cam.elevation_deg = ds.frames[i].elevation_deg;
    const GroundTruthFrame f = generate_frame(spec, cam, static_cast<int>(i));
    ASSERT_EQ(ds.frames[i].pixel_coords.size(), 2u);
    for (std::size_t p = 0; p < 2; ++p) {
      EXPECT_EQ(ds.frames[i].pixel_coords[p], f.pixel_coords[p]);
      EXPECT_EQ(ds.truth[i].world.poses[p].coords, f.world.poses[p].coords);
      EXPECT_EQ(ds.truth[i].world.root_offsets[p], f.world.root_offsets[p]);
      EXPECT_EQ(ds.truth[i].camera_frame[p], f.camera_frame[p]);
      EXPECT_EQ(ds.truth[i].lifts[p].theta, f.theta[p]);
      EXPECT_EQ(ds.truth[i].lifts[p].depth_offsets, f.depth_offsets[p]);
      EXPECT_EQ(oracle.find(static_cast<int>(i), static_cast<int>(p))->theta, f.theta[p]);
    }
  }
}

TEST(Dataset, SceneJsonRoundTrip) {
  const GroundTruthFrame f = generate_frame(SceneSpec{}, CameraConfig{}, 0);
  std::vector<LiftPrediction> preds;
  for (std::size_t p = 0; p < 2; ++p) preds.push_back({f.depth_offsets[p], f.theta[p]});
  const auto result = reconstruct(f.poses, preds, AblationMode::full(), Constants{}, Skeleton::standard());
  const auto j = scene_to_json(0, result, AblationMode::full());
  const Scene3D back = scene_from_json(nlohmann::json::parse(j.dump()));
  ASSERT_EQ(back.poses.size(), 2u);
  for (std::size_t p = 0; p < 2; ++p) {
    EXPECT_EQ(back.poses[p].coords, result.scene.poses[p].coords);
    EXPECT_EQ(back.root_offsets[p], result.scene.root_offsets[p]);
  }
  EXPECT_EQ(j.at("mode").at("name"), "full");
}

TEST(Dataset, SchemaErrors) {
  const auto dir = temp_dir("ds_schema");
  generate_dataset(dir, SceneSpec{}, stratified(), 4);

  EXPECT_MPSCENE_ERROR(load_dataset(dir / "missing"), ErrorCode::IoFailure);

  auto frame = read_json(dir / "frames" / "0001.json");
  frame["version"] = 99;
  EXPECT_MPSCENE_ERROR(frame_from_json(frame, Skeleton::standard()), ErrorCode::SchemaViolation);
  frame = read_json(dir / "frames" / "0001.json");
  frame["poses"][0]["pixel_coords"].erase(0);
  EXPECT_MPSCENE_ERROR(frame_from_json(frame, Skeleton::standard()), ErrorCode::JointCountMismatch);

  std::filesystem::remove(dir / "gt" / "0003.json");
  EXPECT_MPSCENE_ERROR(load_dataset(dir), ErrorCode::SchemaViolation);

  write_text(dir / "frames" / "0000.json", "{ not json");
  EXPECT_MPSCENE_ERROR(load_dataset(dir), ErrorCode::SchemaViolation);

  EXPECT_MPSCENE_ERROR(generate_dataset(dir, SceneSpec{}, stratified(), 0), ErrorCode::InvalidSpec);
  CameraSweep bad;
  bad.elevations_deg = {};
  EXPECT_MPSCENE_ERROR(generate_dataset(dir, SceneSpec{}, bad, 2), ErrorCode::InvalidSpec);
}
