#include "mpscene/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <random>
#include <sstream>

#include "parallel.hpp"

namespace mpscene {
namespace fs = std::filesystem;

namespace {

void require_version(const nlohmann::json& j, const std::string& where) {
  if (!j.is_object() || !j.contains("version") || !j.at("version").is_number_integer() ||
      j.at("version").get<int>() != kSchemaVersion)
    throw Error(ErrorCode::SchemaViolation, where + ": missing or unsupported 'version'");
}

template <typename F>
auto with_schema(const std::string& where, F&& f) {
  try {
    return f();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::SchemaViolation, where + ": " + e.what());
  }
}

nlohmann::json points2_to_json(const Points2& points) {
  nlohmann::json out = nlohmann::json::array();
  for (Eigen::Index i = 0; i < points.rows(); ++i) out.push_back({points(i, 0), points(i, 1)});
  return out;
}

Points2 points2_from_json(const nlohmann::json& j, const std::string& where) {
  if (!j.is_array()) throw Error(ErrorCode::SchemaViolation, where + " must be an array");
  Points2 out(static_cast<Eigen::Index>(j.size()), 2);
  for (std::size_t i = 0; i < j.size(); ++i) {
    const auto& row = j[i];
    if (!row.is_array() || row.size() != 2)
      throw Error(ErrorCode::SchemaViolation, where + "[" + std::to_string(i) + "] must be [u, v]");
    for (int k = 0; k < 2; ++k)
      out(static_cast<Eigen::Index>(i), k) =
          row[static_cast<std::size_t>(k)].is_null() ? std::numeric_limits<double>::quiet_NaN()
                                                     : row[static_cast<std::size_t>(k)].get<double>();
  }
  return out;
}

std::vector<double> to_vector(const Eigen::VectorXd& v) { return {v.data(), v.data() + v.size()}; }

Eigen::Vector3d vec3_from_json(const nlohmann::json& j, const std::string& where) {
  if (!j.is_array() || j.size() != 3) throw Error(ErrorCode::SchemaViolation, where + " must be [x, y, z]");
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

}  // namespace

// -------------------------------------------------------------- camera sweep

void CameraSweep::validate() const {
  base.validate();
  if (uniform_deg) {
    if (!(uniform_deg->lo <= uniform_deg->hi) || std::abs(uniform_deg->lo) >= 90.0 ||
        std::abs(uniform_deg->hi) >= 90.0)
      throw Error(ErrorCode::InvalidSpec, "elevation range must be ordered and inside (-90, 90)");
  } else {
    if (elevations_deg.empty()) throw Error(ErrorCode::InvalidSpec, "no elevations given");
    for (double e : elevations_deg)
      if (!std::isfinite(e) || std::abs(e) >= 90.0)
        throw Error(ErrorCode::InvalidSpec, "elevations must lie inside (-90, 90) degrees");
  }
}

double CameraSweep::elevation_for(std::uint64_t seed, int index) const {
  if (!uniform_deg) return elevations_deg[static_cast<std::size_t>(index) % elevations_deg.size()];
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(index), 0xca3e7au};
  std::mt19937_64 engine(seq);
  if (uniform_deg->lo == uniform_deg->hi) return uniform_deg->lo;
  return std::uniform_real_distribution<double>(uniform_deg->lo, uniform_deg->hi)(engine);
}

nlohmann::json CameraSweep::to_json() const {
  nlohmann::json j = {{"base_camera", base.to_json()}};
  if (uniform_deg) j["uniform_deg"] = {uniform_deg->lo, uniform_deg->hi};
  else j["elevations_deg"] = elevations_deg;
  return j;
}

// ------------------------------------------------------------------- files

std::string frame_file_name(int frame_id) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%04d.json", frame_id);
  return buf;
}

nlohmann::json points_to_json(const Points3& points) {
  nlohmann::json out = nlohmann::json::array();
  for (Eigen::Index i = 0; i < points.rows(); ++i) out.push_back({points(i, 0), points(i, 1), points(i, 2)});
  return out;
}

Points3 points3_from_json(const nlohmann::json& j, const std::string& where) {
  if (!j.is_array() || j.empty()) throw Error(ErrorCode::SchemaViolation, where + " must be a non-empty array");
  Points3 out(static_cast<Eigen::Index>(j.size()), 3);
  for (std::size_t i = 0; i < j.size(); ++i)
    out.row(static_cast<Eigen::Index>(i)) =
        vec3_from_json(j[i], where + "[" + std::to_string(i) + "]").transpose();
  return out;
}

nlohmann::json frame_to_json(const GroundTruthFrame& frame, const Skeleton& skeleton) {
  nlohmann::json poses = nlohmann::json::array();
  for (std::size_t p = 0; p < frame.pixel_coords.size(); ++p)
    poses.push_back({{"pose_id", p}, {"pixel_coords", points2_to_json(frame.pixel_coords[p])}});
  return {{"version", kSchemaVersion},
          {"frame_id", frame.frame_id},
          {"elevation_deg", frame.camera.elevation_deg},
          {"camera", frame.camera.to_json()},
          {"joint_names", skeleton.joint_names()},
          {"poses", poses}};
}

nlohmann::json truth_to_json(const GroundTruthFrame& frame) {
  nlohmann::json poses = nlohmann::json::array();
  for (std::size_t p = 0; p < frame.world.poses.size(); ++p)
    poses.push_back({{"pose_id", p},
                     {"theta_radians", frame.theta[p]},
                     {"depth_offsets", to_vector(frame.depth_offsets[p])},
                     {"root_offset", {frame.world.root_offsets[p].x(), frame.world.root_offsets[p].y(),
                                      frame.world.root_offsets[p].z()}},
                     {"world", points_to_json(frame.world.poses[p].coords)},
                     {"camera_frame", points_to_json(frame.camera_frame[p])}});
  const auto& cam = frame.camera_position;
  return {{"version", kSchemaVersion},
          {"frame_id", frame.frame_id},
          {"mm_per_unit", frame.mm_per_unit},
          {"camera_position", {cam.x(), cam.y(), cam.z()}},
          {"poses", poses}};
}

DatasetFrame frame_from_json(const nlohmann::json& j, const Skeleton& skeleton) {
  require_version(j, "frame");
  return with_schema("frame", [&] {
    DatasetFrame f;
    f.frame_id = j.at("frame_id").get<int>();
    f.elevation_deg = j.value("elevation_deg", 0.0);
    const auto& poses = j.at("poses");
    for (std::size_t p = 0; p < poses.size(); ++p) {
      const std::string where = "frame " + std::to_string(f.frame_id) + " poses[" + std::to_string(p) + "]";
      if (poses[p].at("pose_id").get<std::size_t>() != p)
        throw Error(ErrorCode::SchemaViolation, where + ": pose ids must be 0..n-1 in order");
      Points2 pixels = points2_from_json(poses[p].at("pixel_coords"), where + ".pixel_coords");
      if (static_cast<std::size_t>(pixels.rows()) != skeleton.size())
        throw Error(ErrorCode::JointCountMismatch, where + ": joint count differs from the skeleton");
      f.pixel_coords.push_back(std::move(pixels));
    }
    return f;
  });
}

FrameTruth truth_from_json(const nlohmann::json& j) {
  require_version(j, "ground truth");
  return with_schema("ground truth", [&] {
    FrameTruth t;
    t.frame_id = j.at("frame_id").get<int>();
    t.mm_per_unit = j.at("mm_per_unit").get<double>();
    const auto& poses = j.at("poses");
    for (std::size_t p = 0; p < poses.size(); ++p) {
      const std::string where = "gt " + std::to_string(t.frame_id) + " poses[" + std::to_string(p) + "]";
      Points3 world = points3_from_json(poses[p].at("world"), where + ".world");
      t.world.root_offsets.push_back(vec3_from_json(poses[p].at("root_offset"), where + ".root_offset"));
      t.world.poses.push_back({std::move(world)});
      t.camera_frame.push_back(points3_from_json(poses[p].at("camera_frame"), where + ".camera_frame"));
      const auto offsets = poses[p].at("depth_offsets").get<std::vector<double>>();
      GroundTruthLift lift;
      lift.theta = poses[p].at("theta_radians").get<double>();
      lift.depth_offsets = Eigen::Map<const Eigen::VectorXd>(offsets.data(), static_cast<Eigen::Index>(offsets.size()));
      t.lifts.push_back(std::move(lift));
    }
    return t;
  });
}

nlohmann::json scene_to_json(int frame_id, const ReconstructionResult& result, const AblationMode& mode) {
  nlohmann::json poses = nlohmann::json::array();
  for (std::size_t i = 0; i < result.scene.poses.size(); ++i) {
    const auto& r = result.scene.root_offsets[i];
    poses.push_back({{"pose_id", i},
                     {"coords", points_to_json(result.scene.poses[i].coords)},
                     {"root_offset", {r.x(), r.y(), r.z()}},
                     {"rotation_angle", result.rotation_angles[i]},
                     {"effective_theta", result.effective_thetas[i]},
                     {"contact_assumed", static_cast<bool>(result.contact_assumed[i])},
                     {"vertical_offset", result.vertical_offsets[i]},
                     {"horizontal_offset", result.horizontal_offsets[i]},
                     {"root_height", result.root_heights[i]},
                     {"scale_factor", result.scale_factors[i]}});
  }
  return {{"version", kSchemaVersion},
          {"frame_id", frame_id},
          {"mode",
           {{"name", mode.name()},
            {"elevation_compensation", mode.elevation_compensation},
            {"rotation_compensation", mode.rotation_compensation},
            {"contact_heuristic", mode.contact_heuristic}}},
          {"anchor_index", result.anchor},
          {"poses", poses}};
}

Scene3D scene_from_json(const nlohmann::json& j) {
  require_version(j, "scene");
  return with_schema("scene", [&] {
    Scene3D scene;
    const auto& poses = j.at("poses");
    for (std::size_t p = 0; p < poses.size(); ++p) {
      const std::string where = "scene poses[" + std::to_string(p) + "]";
      // Ground-truth files store joints under "world"; accepting them lets a
      // dataset be evaluated against itself.
      const char* key = poses[p].contains("coords") ? "coords" : "world";
      scene.poses.push_back({points3_from_json(poses[p].at(key), where + "." + key)});
      scene.root_offsets.push_back(vec3_from_json(poses[p].at("root_offset"), where + ".root_offset"));
    }
    return scene;
  });
}

nlohmann::json read_json(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoFailure, "cannot open " + path.string());
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorCode::SchemaViolation, path.string() + ": " + e.what());
  }
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoFailure, "cannot write " + path.string());
  out << text;
  if (!out) throw Error(ErrorCode::IoFailure, "write failed for " + path.string());
}

void write_json(const fs::path& path, const nlohmann::json& j) { write_text(path, j.dump(1) + "\n"); }

// ----------------------------------------------------------------- datasets

void generate_dataset(const fs::path& dir, const SceneSpec& spec, const CameraSweep& sweep,
                      int count, int workers) {
  if (count < 1) throw Error(ErrorCode::InvalidSpec, "frame count must be >= 1");
  spec.validate();
  sweep.validate();

  std::vector<GroundTruthFrame> frames(static_cast<std::size_t>(count));
  detail::parallel_for(frames.size(), workers, [&](std::size_t i) {
    CameraConfig cam = sweep.base;
    cam.elevation_deg = sweep.elevation_for(spec.seed, static_cast<int>(i));
    frames[i] = generate_frame(spec, cam, static_cast<int>(i));
  });

  std::error_code ec;
  for (const char* sub : {"frames", "gt", "predictions"}) {
    fs::create_directories(dir / sub, ec);
    if (ec) throw Error(ErrorCode::IoFailure, "cannot create " + (dir / sub).string() + ": " + ec.message());
  }

  const Skeleton& skeleton = Skeleton::standard();
  PredictionStore oracle;
  for (const auto& frame : frames) {
    write_json(dir / "frames" / frame_file_name(frame.frame_id), frame_to_json(frame, skeleton));
    write_json(dir / "gt" / frame_file_name(frame.frame_id), truth_to_json(frame));
    for (std::size_t p = 0; p < frame.theta.size(); ++p)
      oracle.insert(frame.frame_id, static_cast<int>(p), LiftPrediction{frame.depth_offsets[p], frame.theta[p]});
  }
  save_predictions(dir / "predictions" / "oracle.json", oracle);
  write_json(dir / "skeleton.json", skeleton.to_json());

  nlohmann::json strata = nlohmann::json::array();
  if (!sweep.uniform_deg) {
    for (std::size_t k = 0; k < sweep.elevations_deg.size(); ++k) {
      int n = 0;
      for (int i = 0; i < count; ++i) n += static_cast<std::size_t>(i) % sweep.elevations_deg.size() == k;
      strata.push_back({{"elevation_deg", sweep.elevations_deg[k]}, {"frames", n}});
    }
  }
  write_json(dir / "scene_spec.json", {{"version", kSchemaVersion},
                                       {"scene_spec", spec.to_json()},
                                       {"camera_sweep", sweep.to_json()},
                                       {"frame_count", count},
                                       {"stratification", strata},
                                       {"mm_per_unit", kMillimetresPerUnit}});
}

Dataset load_dataset(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw Error(ErrorCode::IoFailure, "dataset directory " + dir.string() + " not found");
  Dataset ds;
  ds.root = dir;
  ds.spec = read_json(dir / "scene_spec.json");
  require_version(ds.spec, "scene_spec.json");
  if (fs::exists(dir / "skeleton.json")) ds.skeleton = Skeleton::from_json(read_json(dir / "skeleton.json"));

  auto list = [](const fs::path& sub) {
    std::vector<fs::path> files;
    if (!fs::is_directory(sub)) return files;
    for (const auto& e : fs::directory_iterator(sub))
      if (e.is_regular_file() && e.path().extension() == ".json") files.push_back(e.path());
    std::sort(files.begin(), files.end());
    return files;
  };

  for (const auto& path : list(dir / "frames")) ds.frames.push_back(frame_from_json(read_json(path), ds.skeleton));
  if (ds.frames.empty()) throw Error(ErrorCode::SchemaViolation, "dataset " + dir.string() + " has no frames");
  const auto gt_files = list(dir / "gt");
  if (!gt_files.empty()) {
    if (gt_files.size() != ds.frames.size())
      throw Error(ErrorCode::SchemaViolation, "frames/ and gt/ hold different numbers of files");
    for (std::size_t i = 0; i < gt_files.size(); ++i) {
      ds.truth.push_back(truth_from_json(read_json(gt_files[i])));
      if (ds.truth.back().frame_id != ds.frames[i].frame_id)
        throw Error(ErrorCode::SchemaViolation, "ground truth " + gt_files[i].string() + " does not match frame ids");
      if (ds.truth.back().world.poses.size() != ds.frames[i].pixel_coords.size())
        throw Error(ErrorCode::SchemaViolation, "ground truth pose count differs in " + gt_files[i].string());
    }
  }
  return ds;
}

}  // namespace mpscene
