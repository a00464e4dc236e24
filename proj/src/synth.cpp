#include "mpscene/synth.hpp"

#include <Eigen/Geometry>

#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <random>

#include "mpscene/geometry.hpp"

namespace mpscene {
namespace {

constexpr double kDeg = std::numbers::pi / 180.0;
constexpr int kMaxAttempts = 1000;
// Every camera-frame joint must stay this far in front of the depth clamp.
constexpr double kMinCameraDepth = 2.0;
constexpr double kMinHeadProjection = 0.25;

// Segment lengths of the unit-scale body (head one unit above the pelvis).
constexpr double kHipHalfWidth = 0.2;
constexpr double kThigh = 0.85;
constexpr double kShin = 0.85;
constexpr double kSpine = 0.28;
constexpr double kThorax = 0.58;
constexpr double kNeckToHead = 0.42;
constexpr double kShoulderHalfWidth = 0.33;
constexpr double kUpperArm = 0.55;
constexpr double kForearm = 0.5;
constexpr double kHand = 0.15;

struct Limb {
  double flex = 0.0;    // forward swing from hanging straight down
  double abduct = 0.0;  // outward swing
  double bend = 0.0;    // knee (backwards) or elbow (forwards)
};

struct BodyAngles {
  double lean_forward = 0.0;
  double lean_side = 0.0;
  double neck = 0.0;
  std::array<Limb, 2> legs;  // left, right
  std::array<Limb, 2> arms;
};

class Sampler {
 public:
  explicit Sampler(std::mt19937_64& engine) : engine_(engine) {}

  double uniform(double lo, double hi) {
    if (lo == hi) return lo;
    return std::uniform_real_distribution<double>(lo, hi)(engine_);
  }
  double uniform(const Range& r) { return uniform(r.lo, r.hi); }
  double degrees(double lo, double hi) { return uniform(lo, hi) * kDeg; }
  double sign() { return std::bernoulli_distribution(0.5)(engine_) ? 1.0 : -1.0; }
  int index(int n) { return std::uniform_int_distribution<int>(0, n - 1)(engine_); }

 private:
  std::mt19937_64& engine_;
};

BodyAngles sample_angles(const std::string& library, Sampler& s) {
  static const std::array<std::string, 4> kinds{"standing", "crouching", "reaching", "leaning"};
  const std::string kind = library == "mixed" ? kinds[static_cast<std::size_t>(s.index(4))] : library;

  BodyAngles a;
  auto relaxed_arm = [&] { return Limb{s.degrees(-20, 30), s.degrees(5, 25), s.degrees(0, 45)}; };
  auto standing_leg = [&] { return Limb{s.degrees(-10, 15), s.degrees(0, 8), s.degrees(0, 20)}; };

  if (kind == "standing") {
    a.lean_forward = s.degrees(-5, 10);
    a.lean_side = s.degrees(-5, 5);
    a.neck = s.degrees(-10, 15);
    a.legs = {standing_leg(), standing_leg()};
    a.arms = {relaxed_arm(), relaxed_arm()};
  } else if (kind == "crouching") {
    a.lean_forward = s.degrees(20, 45);
    a.lean_side = s.degrees(-5, 5);
    a.neck = s.degrees(-20, 5);
    for (auto& leg : a.legs) leg = {s.degrees(60, 100), s.degrees(5, 20), s.degrees(80, 130)};
    for (auto& arm : a.arms) arm = {s.degrees(0, 60), s.degrees(5, 25), s.degrees(10, 70)};
  } else if (kind == "reaching") {
    a.lean_forward = s.degrees(0, 20);
    a.lean_side = s.degrees(-8, 8);
    a.neck = s.degrees(-10, 10);
    a.legs = {standing_leg(), standing_leg()};
    a.arms = {relaxed_arm(), relaxed_arm()};
    const int reaching = s.index(3);  // left, right or both
    for (int side = 0; side < 2; ++side)
      if (reaching == side || reaching == 2)
        a.arms[static_cast<std::size_t>(side)] = {s.degrees(60, 120), s.degrees(0, 30), s.degrees(0, 30)};
  } else if (kind == "leaning") {
    a.lean_forward = s.degrees(15, 40);
    a.lean_side = s.sign() * s.degrees(0, 20);
    a.neck = s.degrees(-15, 10);
    a.legs = {Limb{s.degrees(-20, 30), s.degrees(0, 10), s.degrees(0, 30)},
              Limb{s.degrees(-20, 30), s.degrees(0, 10), s.degrees(0, 30)}};
    a.arms = {relaxed_arm(), relaxed_arm()};
  } else {
    throw Error(ErrorCode::InvalidSpec, "unknown pose library '" + library + "'");
  }
  return a;
}

Eigen::Vector3d swing(double side, double flex, double abduct) {
  return {side * std::sin(abduct), -std::cos(flex) * std::cos(abduct), std::sin(flex) * std::cos(abduct)};
}

/// Unit-scale body in its own frame: pelvis at the origin, x to the person's
/// left, y up, z facing forward.
Points3 build_body(const BodyAngles& a) {
  const Skeleton& sk = Skeleton::standard();
  Points3 body = Points3::Zero(static_cast<Eigen::Index>(sk.size()), 3);
  auto set = [&](const char* name, const Eigen::Vector3d& p) {
    body.row(static_cast<Eigen::Index>(sk.index_of(name))) = p.transpose();
  };
  auto get = [&](const char* name) -> Eigen::Vector3d {
    return body.row(static_cast<Eigen::Index>(sk.index_of(name))).transpose();
  };

  const auto direction = [&](double forward) {
    return Eigen::Vector3d(std::sin(a.lean_side), std::cos(forward) * std::cos(a.lean_side),
                           std::sin(forward) * std::cos(a.lean_side))
        .normalized();
  };
  const Eigen::Vector3d torso = direction(a.lean_forward);
  const Eigen::Vector3d neck = direction(a.lean_forward + a.neck);
  set("spine", kSpine * torso);
  set("thorax", kThorax * torso);
  set("head", get("thorax") + kNeckToHead * neck);

  const Eigen::Vector3d ex = Eigen::Vector3d::UnitX();
  const Eigen::Vector3d lateral = (ex - ex.dot(torso) * torso).normalized();

  const std::array<const char*, 2> hip{"l_hip", "r_hip"}, knee{"l_knee", "r_knee"},
      foot{"l_foot", "r_foot"}, shoulder{"l_shoulder", "r_shoulder"}, elbow{"l_elbow", "r_elbow"},
      wrist{"l_wrist", "r_wrist"}, hand{"l_hand", "r_hand"};
  for (std::size_t i = 0; i < 2; ++i) {
    const double side = i == 0 ? 1.0 : -1.0;
    const Limb& leg = a.legs[i];
    set(hip[i], {side * kHipHalfWidth, 0.0, 0.0});
    set(knee[i], get(hip[i]) + kThigh * swing(side, leg.flex, leg.abduct));
    set(foot[i], get(knee[i]) + kShin * swing(side, leg.flex - leg.bend, leg.abduct));

    const Limb& arm = a.arms[i];
    set(shoulder[i], get("thorax") + side * kShoulderHalfWidth * lateral - 0.05 * torso);
    set(elbow[i], get(shoulder[i]) + kUpperArm * swing(side, arm.flex, arm.abduct));
    const Eigen::Vector3d fore = swing(side, arm.flex + arm.bend, arm.abduct);
    set(wrist[i], get(elbow[i]) + kForearm * fore);
    set(hand[i], get(wrist[i]) + kHand * fore);
  }
  set("pelvis", 0.5 * (get("l_hip") + get("r_hip")));
  return body;
}

double lowest_foot(const Points3& body) {
  const Skeleton& sk = Skeleton::standard();
  double y = std::numeric_limits<double>::infinity();
  for (auto f : sk.feet()) y = std::min(y, body(static_cast<Eigen::Index>(f), 1));
  return y;
}

struct Person {
  Points3 body;          // unit scale, pelvis at origin, feet below
  double yaw = 0.0;
  double pelvis_height_unit = 0.0;
};

Person sample_person(const SceneSpec& spec, Sampler& s) {
  Person p;
  p.body = build_body(sample_angles(spec.pose_library, s));
  p.yaw = s.uniform(-std::numbers::pi, std::numbers::pi);
  p.pelvis_height_unit = -lowest_foot(p.body);
  return p;
}

Points3 place(const Person& person, double scale, const Eigen::Vector3d& pelvis) {
  const Eigen::Matrix3d yaw = Eigen::AngleAxisd(person.yaw, Eigen::Vector3d::UnitY()).toRotationMatrix();
  Points3 out = (person.body * yaw.transpose()) * scale;
  out.rowwise() += pelvis.transpose();
  return out;
}

struct CameraView {
  Points3 coords;
  double distance = 0.0;
};

/// Pose seen by a camera pitched by theta with the pelvis on its optical axis,
/// at the distance that puts the projected head exactly 1/c from the root.
std::optional<CameraView> view_from(const Points3& world, const Eigen::Vector3d& pelvis,
                                    double theta, double c) {
  const Skeleton& sk = Skeleton::standard();
  const Eigen::Matrix3d to_camera = rotation_about_x(ElevationAngle(theta)).matrix().transpose();
  Points3 rel = (world.rowwise() - pelvis.transpose()) * to_camera.transpose();
  const Eigen::Vector3d head = rel.row(static_cast<Eigen::Index>(sk.head())).transpose();
  const double head_xy = head.head<2>().norm();
  if (head_xy < kMinHeadProjection) return std::nullopt;
  const double distance = c * head_xy - head.z();
  rel.col(2).array() += distance;
  if (rel.col(2).minCoeff() < kMinCameraDepth) return std::nullopt;
  return CameraView{std::move(rel), distance};
}

std::mt19937_64 frame_engine(std::uint64_t seed, int index) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(index), 0x5eedu};
  return std::mt19937_64(seq);
}

void check_range(const Range& r, const char* name, double min_lo) {
  if (!std::isfinite(r.lo) || !std::isfinite(r.hi) || r.lo > r.hi || r.lo < min_lo)
    throw Error(ErrorCode::InvalidSpec, std::string("range '") + name + "' is empty or out of bounds");
}

Range range_from_json(const nlohmann::json& j, const char* key) {
  if (!j.contains(key)) throw Error(ErrorCode::SchemaViolation, std::string("scene spec: missing '") + key + "'");
  const auto& v = j.at(key);
  if (!v.is_array() || v.size() != 2)
    throw Error(ErrorCode::SchemaViolation, std::string("scene spec: '") + key + "' must be [lo, hi]");
  return {v[0].get<double>(), v[1].get<double>()};
}

}  // namespace

// ------------------------------------------------------------------ configs

void CameraConfig::validate() const {
  if (!std::isfinite(elevation_deg) || std::abs(elevation_deg) >= 90.0)
    throw Error(ErrorCode::InvalidSpec, "camera elevation must satisfy |elevation| < 90 deg");
  if (!std::isfinite(c) || c <= 1.0) throw Error(ErrorCode::InvalidSpec, "camera c must be > 1");
  if (!std::isfinite(pixels_per_unit) || pixels_per_unit <= 0.0)
    throw Error(ErrorCode::InvalidSpec, "pixels_per_unit must be > 0");
  if (!principal_point_px.allFinite()) throw Error(ErrorCode::InvalidSpec, "principal point must be finite");
}

nlohmann::json CameraConfig::to_json() const {
  return {{"elevation_deg", elevation_deg},
          {"c", c},
          {"pixels_per_unit", pixels_per_unit},
          {"principal_point_px", {principal_point_px.x(), principal_point_px.y()}}};
}

CameraConfig CameraConfig::from_json(const nlohmann::json& j) {
  try {
    CameraConfig cam;
    cam.elevation_deg = j.at("elevation_deg").get<double>();
    cam.c = j.at("c").get<double>();
    cam.pixels_per_unit = j.at("pixels_per_unit").get<double>();
    const auto& pp = j.at("principal_point_px");
    cam.principal_point_px = {pp.at(0).get<double>(), pp.at(1).get<double>()};
    cam.validate();
    return cam;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::SchemaViolation, std::string("camera: ") + e.what());
  }
}

void SceneSpec::validate() const {
  check_range(person_scale, "person_scale", 1e-3);
  check_range(horizontal_separation, "horizontal_separation", 0.0);
  check_range(depth_separation, "depth_separation", 0.0);
  check_range(root_height_difference, "root_height_difference", 0.0);
  if (!(contact_fraction >= 0.0 && contact_fraction <= 1.0))
    throw Error(ErrorCode::InvalidSpec, "contact_fraction must lie in [0, 1]");
  if (pose_library != "mixed" && pose_library != "standing" && pose_library != "crouching" &&
      pose_library != "reaching" && pose_library != "leaning")
    throw Error(ErrorCode::InvalidSpec, "unknown pose library '" + pose_library + "'");
}

nlohmann::json SceneSpec::to_json() const {
  auto r = [](const Range& x) { return nlohmann::json::array({x.lo, x.hi}); };
  return {{"seed", seed},
          {"person_scale", r(person_scale)},
          {"horizontal_separation", r(horizontal_separation)},
          {"depth_separation", r(depth_separation)},
          {"root_height_difference", r(root_height_difference)},
          {"contact_fraction", contact_fraction},
          {"pose_library", pose_library}};
}

SceneSpec SceneSpec::from_json(const nlohmann::json& j) {
  try {
    SceneSpec spec;
    spec.seed = j.at("seed").get<std::uint64_t>();
    spec.person_scale = range_from_json(j, "person_scale");
    spec.horizontal_separation = range_from_json(j, "horizontal_separation");
    spec.depth_separation = range_from_json(j, "depth_separation");
    spec.root_height_difference = range_from_json(j, "root_height_difference");
    spec.contact_fraction = j.value("contact_fraction", SceneSpec{}.contact_fraction);
    spec.pose_library = j.at("pose_library").get<std::string>();
    spec.validate();
    return spec;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::SchemaViolation, std::string("scene spec: ") + e.what());
  }
}

// ---------------------------------------------------------------- generator

GroundTruthFrame generate_frame(const SceneSpec& spec, const CameraConfig& camera, int index) {
  spec.validate();
  camera.validate();
  const Skeleton& sk = Skeleton::standard();
  const double c = camera.c;
  const double f = camera.pixels_per_unit;
  const double pitch = camera.elevation_deg * kDeg;

  auto engine = frame_engine(spec.seed, index);
  Sampler s(engine);

  // Drawn once so that rejected samples do not skew the contact share.
  const bool contact = s.uniform(0.0, 1.0) < spec.contact_fraction;
  for (int attempt = 0; attempt < kMaxAttempts; ++attempt) {
    const Person first = sample_person(spec, s);
    const Person second = sample_person(spec, s);
    const double scale1 = s.uniform(spec.person_scale);
    const double height1 = scale1 * first.pelvis_height_unit;
    const double height2 = contact ? height1 : height1 + s.sign() * s.uniform(spec.root_height_difference);
    const double scale2 = height2 / second.pelvis_height_unit;
    if (!(scale2 >= spec.person_scale.lo && scale2 <= spec.person_scale.hi)) continue;

    const double separation = s.uniform(spec.horizontal_separation);
    const double depth_gap = s.sign() * s.uniform(spec.depth_separation);
    const std::array<Eigen::Vector3d, 2> pelvis{
        Eigen::Vector3d(-0.5 * separation, height1, c - 0.5 * depth_gap),
        Eigen::Vector3d(0.5 * separation, height2, c + 0.5 * depth_gap)};
    if (pelvis[0].z() <= 1.0 || pelvis[1].z() <= 1.0)
      throw Error(ErrorCode::InvalidSpec, "depth separation puts a person behind the camera");

    // The camera sits at the configured elevation above the pelvis midpoint.
    const Eigen::Vector3d mid = 0.5 * (pelvis[0] + pelvis[1]);
    const Eigen::Vector3d cam(0.0, mid.y() + mid.z() * std::tan(pitch), 0.0);

    GroundTruthFrame frame;
    frame.frame_id = index;
    frame.camera = camera;
    frame.camera_position = cam;
    bool ok = true;
    for (std::size_t p = 0; p < 2 && ok; ++p) {
      const Person& person = p == 0 ? first : second;
      const double scale = p == 0 ? scale1 : scale2;
      const Points3 world = place(person, scale, pelvis[p]);
      const double theta = std::atan((cam.y() - pelvis[p].y()) / (pelvis[p].z() - cam.z()));
      auto view = view_from(world, pelvis[p], theta, c);
      if (!view) {
        ok = false;
        break;
      }

      // Image: each person appears at its own pelvis location, magnified by
      // c / depth; vertical placement follows the pitched pinhole exactly.
      const double magnification = f * c / pelvis[p].z();
      const Eigen::Vector2d root_px(camera.principal_point_px.x() + f * (pelvis[p].x() - cam.x()) / pelvis[p].z(),
                                    camera.principal_point_px.y() + f * std::tan(theta - pitch));
      Points2 pixels(view->coords.rows(), 2);
      Eigen::VectorXd offsets(view->coords.rows());
      for (Eigen::Index j = 0; j < view->coords.rows(); ++j) {
        const Eigen::Vector2d xy = project_keypoint(view->coords.row(j).transpose());
        pixels(j, 0) = root_px.x() + magnification * xy.x();
        pixels(j, 1) = root_px.y() - magnification * xy.y();
        offsets(j) = view->coords(j, 2) - c;
      }
      pixels.row(static_cast<Eigen::Index>(sk.root())) = root_px.transpose();

      frame.world.poses.push_back({world});
      frame.world.root_offsets.push_back(pelvis[p]);
      frame.camera_frame.push_back(std::move(view->coords));
      frame.poses.push_back(normalize_pose(pixels, sk, c));
      frame.pixel_coords.push_back(std::move(pixels));
      frame.theta.push_back(theta);
      frame.depth_offsets.push_back(std::move(offsets));
    }
    if (ok) return frame;
  }
  throw Error(ErrorCode::InvalidSpec, "could not sample a valid scene in " +
                                          std::to_string(kMaxAttempts) + " attempts; ranges too tight");
}

double validate_frame(const GroundTruthFrame& frame) {
  const Skeleton& sk = Skeleton::standard();
  const std::size_t root = sk.root();
  double worst = 0.0;
  auto track = [&](double v) { worst = std::max(worst, std::abs(v)); };

  for (std::size_t p = 0; p < frame.poses.size(); ++p) {
    const auto& cam = frame.camera_frame[p];
    const auto& norm = frame.poses[p].norm_coords();
    for (Eigen::Index j = 0; j < cam.rows(); ++j) {
      const Eigen::Vector2d xy = project_keypoint(cam.row(j).transpose());
      track((xy - norm.row(j).transpose()).norm());
      track(cam(j, 2) - frame.camera.c - frame.depth_offsets[p](j));
    }
    const Eigen::Vector3d pelvis = frame.world.poses[p].joint(root);
    const Eigen::Vector3d ray = pelvis - frame.camera_position;
    track(frame.theta[p] - std::atan2(-ray.y(), ray.z()));
    // Undoing the camera tilt about the pelvis recovers the level pose.
    const Eigen::Matrix3d level = rotation_about_x(ElevationAngle(frame.theta[p])).matrix();
    const Eigen::Vector3d axis_point = cam.row(static_cast<Eigen::Index>(root)).transpose();
    for (Eigen::Index j = 0; j < cam.rows(); ++j) {
      const Eigen::Vector3d w = level * (cam.row(j).transpose() - axis_point) + pelvis;
      track((w - frame.world.poses[p].coords.row(j).transpose()).norm());
    }
    double lowest = std::numeric_limits<double>::infinity();
    for (auto f : sk.feet()) lowest = std::min(lowest, frame.world.poses[p].coords(static_cast<Eigen::Index>(f), 1));
    track(lowest);
  }
  return worst;
}

}  // namespace mpscene
