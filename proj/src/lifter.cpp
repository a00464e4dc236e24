#include "mpscene/lifter.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numbers>
#include <random>
#include <sstream>

namespace mpscene {
namespace {

constexpr int kPredictionSchemaVersion = 1;
// Keeps perturbed angles inside the open interval required by ElevationAngle.
constexpr double kMaxTheta = std::numbers::pi / 2 - 1e-6;

const GroundTruthLift& require_truth(const PredictionContext& context) {
  if (context.truth == nullptr)
    throw Error(ErrorCode::MissingGroundTruth,
                "oracle prediction for frame " + std::to_string(context.frame_id) + " pose " +
                    std::to_string(context.pose_id) + " has no ground truth");
  return *context.truth;
}

std::mt19937_64 make_engine(std::uint64_t seed, int frame_id, int pose_id, std::uint32_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(frame_id), static_cast<std::uint32_t>(pose_id),
                    stream};
  return std::mt19937_64(seq);
}

std::string key_name(int frame_id, int pose_id) {
  return "frame " + std::to_string(frame_id) + " pose " + std::to_string(pose_id);
}

}  // namespace

LiftPrediction OraclePredictor::predict(const Pose2D& pose, const PredictionContext& context) const {
  const auto& truth = require_truth(context);
  if (static_cast<std::size_t>(truth.depth_offsets.size()) != pose.size())
    throw Error(ErrorCode::JointCountMismatch, "ground truth joint count differs from pose");
  return {truth.depth_offsets, truth.theta};
}

NoisyOraclePredictor::NoisyOraclePredictor(double sigma_depth, double sigma_theta,
                                           std::uint64_t seed, ThetaNoiseScope scope)
    : sigma_depth_(sigma_depth), sigma_theta_(sigma_theta), seed_(seed), scope_(scope) {
  if (!(sigma_depth >= 0.0) || !(sigma_theta >= 0.0) || !std::isfinite(sigma_depth) ||
      !std::isfinite(sigma_theta))
    throw Error(ErrorCode::InvalidArgument, "noise levels must be finite and >= 0");
}

LiftPrediction NoisyOraclePredictor::predict(const Pose2D& pose, const PredictionContext& context) const {
  LiftPrediction out = OraclePredictor{}.predict(pose, context);
  if (sigma_depth_ > 0.0) {
    auto engine = make_engine(seed_, context.frame_id, context.pose_id, 1);
    std::normal_distribution<double> noise(0.0, sigma_depth_);
    for (Eigen::Index i = 0; i < out.depth_offsets.size(); ++i) out.depth_offsets(i) += noise(engine);
  }
  if (sigma_theta_ > 0.0) {
    const int pose_key = scope_ == ThetaNoiseScope::Pose ? context.pose_id : -1;
    auto engine = make_engine(seed_, context.frame_id, pose_key, 2);
    std::normal_distribution<double> noise(0.0, sigma_theta_);
    out.theta = std::clamp(out.theta + noise(engine), -kMaxTheta, kMaxTheta);
  }
  return out;
}

// ------------------------------------------------------------- store + I/O

void PredictionStore::insert(int frame_id, int pose_id, LiftPrediction prediction) {
  if (!entries_.emplace(Key{frame_id, pose_id}, std::move(prediction)).second)
    throw Error(ErrorCode::SchemaViolation, "duplicate prediction for " + key_name(frame_id, pose_id));
}

const LiftPrediction* PredictionStore::find(int frame_id, int pose_id) const {
  auto it = entries_.find(Key{frame_id, pose_id});
  return it == entries_.end() ? nullptr : &it->second;
}

nlohmann::json PredictionStore::to_json() const {
  nlohmann::json frames = nlohmann::json::array();
  int current = 0;
  for (const auto& [key, prediction] : entries_) {
    if (frames.empty() || current != key.first) {
      frames.push_back({{"frame_id", key.first}, {"poses", nlohmann::json::array()}});
      current = key.first;
    }
    std::vector<double> offsets(prediction.depth_offsets.data(),
                                prediction.depth_offsets.data() + prediction.depth_offsets.size());
    frames.back()["poses"].push_back(
        {{"pose_id", key.second}, {"theta_radians", prediction.theta}, {"depth_offsets", offsets}});
  }
  return {{"version", kPredictionSchemaVersion}, {"frames", frames}};
}

PredictionStore PredictionStore::from_json(const nlohmann::json& j) {
  auto require = [](const nlohmann::json& obj, const char* key, const std::string& path)
      -> const nlohmann::json& {
    if (!obj.is_object() || !obj.contains(key))
      throw Error(ErrorCode::SchemaViolation, "missing field '" + path + "." + key + "'");
    return obj.at(key);
  };
  auto require_int = [&](const nlohmann::json& obj, const char* key, const std::string& path) {
    const auto& v = require(obj, key, path);
    if (!v.is_number_integer())
      throw Error(ErrorCode::SchemaViolation, "field '" + path + "." + key + "' must be an integer");
    return v.get<int>();
  };

  if (require_int(j, "version", "$") != kPredictionSchemaVersion)
    throw Error(ErrorCode::SchemaViolation, "field '$.version' must be 1");
  const auto& frames = require(j, "frames", "$");
  if (!frames.is_array()) throw Error(ErrorCode::SchemaViolation, "field '$.frames' must be an array");

  PredictionStore store;
  for (std::size_t f = 0; f < frames.size(); ++f) {
    const std::string fpath = "$.frames[" + std::to_string(f) + "]";
    const int frame_id = require_int(frames[f], "frame_id", fpath);
    const auto& poses = require(frames[f], "poses", fpath);
    if (!poses.is_array())
      throw Error(ErrorCode::SchemaViolation, "field '" + fpath + ".poses' must be an array");
    for (std::size_t p = 0; p < poses.size(); ++p) {
      const std::string ppath = fpath + ".poses[" + std::to_string(p) + "]";
      const int pose_id = require_int(poses[p], "pose_id", ppath);
      const auto& theta = require(poses[p], "theta_radians", ppath);
      if (!theta.is_number() || std::abs(theta.get<double>()) >= std::numbers::pi / 2)
        throw Error(ErrorCode::SchemaViolation,
                    "field '" + ppath + ".theta_radians' must be a number in (-pi/2, pi/2)");
      const auto& offsets = require(poses[p], "depth_offsets", ppath);
      if (!offsets.is_array() || offsets.empty())
        throw Error(ErrorCode::SchemaViolation,
                    "field '" + ppath + ".depth_offsets' must be a non-empty array");
      LiftPrediction prediction;
      prediction.theta = theta.get<double>();
      prediction.depth_offsets.resize(static_cast<Eigen::Index>(offsets.size()));
      for (std::size_t k = 0; k < offsets.size(); ++k) {
        if (!offsets[k].is_number())
          throw Error(ErrorCode::SchemaViolation, "field '" + ppath + ".depth_offsets[" +
                                                      std::to_string(k) + "]' must be a number");
        prediction.depth_offsets(static_cast<Eigen::Index>(k)) = offsets[k].get<double>();
      }
      if (store.find(frame_id, pose_id) != nullptr)
        throw Error(ErrorCode::SchemaViolation,
                    "duplicate prediction for " + key_name(frame_id, pose_id) + " at '" + ppath + "'");
      store.insert(frame_id, pose_id, std::move(prediction));
    }
  }
  return store;
}

PredictionStore PredictionStore::parse(std::string_view text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    const auto offset = std::min<std::size_t>(e.byte, text.size());
    const auto prefix = text.substr(0, offset);
    const auto line = 1 + std::count(prefix.begin(), prefix.end(), '\n');
    const auto last_nl = prefix.rfind('\n');
    const auto column = last_nl == std::string_view::npos ? offset : offset - last_nl - 1;
    throw Error(ErrorCode::SchemaViolation, "malformed JSON at line " + std::to_string(line) +
                                                ", column " + std::to_string(column));
  }
  return from_json(j);
}

PredictionStore load_predictions(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoFailure, "cannot open prediction file " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  try {
    return PredictionStore::parse(buffer.str());
  } catch (const Error& e) {
    if (e.code() != ErrorCode::SchemaViolation) throw;
    throw Error(ErrorCode::SchemaViolation, path.string() + ": " + e.what());
  }
}

void save_predictions(const std::filesystem::path& path, const PredictionStore& store) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::IoFailure, "cannot write prediction file " + path.string());
  out << store.to_json().dump(1) << '\n';
  if (!out) throw Error(ErrorCode::IoFailure, "write failed for " + path.string());
}

LiftPrediction FilePredictor::predict(const Pose2D& pose, const PredictionContext& context) const {
  const LiftPrediction* found = store_.find(context.frame_id, context.pose_id);
  if (found == nullptr)
    throw Error(ErrorCode::PredictionNotFound,
                "no prediction for " + key_name(context.frame_id, context.pose_id));
  if (static_cast<std::size_t>(found->depth_offsets.size()) != pose.size())
    throw Error(ErrorCode::JointCountMismatch,
                "prediction for " + key_name(context.frame_id, context.pose_id) +
                    " has the wrong number of depth offsets");
  return *found;
}

// ------------------------------------------------------------------- specs

void PredictorSpec::validate() const {
  if (!std::isfinite(sigma_depth) || !std::isfinite(sigma_theta) || sigma_depth < 0.0 ||
      sigma_theta < 0.0)
    throw Error(ErrorCode::InvalidArgument, "noise levels must be finite and >= 0");
  if (kind == Kind::File && path.empty())
    throw Error(ErrorCode::InvalidArgument, "file predictor needs a path");
}

PredictorSpec PredictorSpec::parse(std::string_view text) {
  PredictorSpec spec;
  auto parse_double = [&](std::string_view s) {
    double v = 0.0;
    const auto* end = s.data() + s.size();
    auto [ptr, ec] = std::from_chars(s.data(), end, v);
    if (ec != std::errc{} || ptr != end)
      throw Error(ErrorCode::InvalidArgument, "bad number '" + std::string(s) + "' in predictor spec");
    return v;
  };

  if (text == "oracle") {
    spec.kind = Kind::Oracle;
  } else if (text.starts_with("noisy:")) {
    spec.kind = Kind::NoisyOracle;
    std::string_view rest = text.substr(6);
    std::vector<std::string_view> parts;
    while (true) {
      auto comma = rest.find(',');
      parts.push_back(rest.substr(0, comma));
      if (comma == std::string_view::npos) break;
      rest = rest.substr(comma + 1);
    }
    if (parts.size() < 2 || parts.size() > 3)
      throw Error(ErrorCode::InvalidArgument,
                  "expected noisy:<sigma_d>,<sigma_theta>[,frame|pose], got '" + std::string(text) + "'");
    spec.sigma_depth = parse_double(parts[0]);
    spec.sigma_theta = parse_double(parts[1]);
    if (parts.size() == 3) {
      if (parts[2] == "frame") spec.theta_scope = ThetaNoiseScope::Frame;
      else if (parts[2] == "pose") spec.theta_scope = ThetaNoiseScope::Pose;
      else throw Error(ErrorCode::InvalidArgument, "theta noise scope must be 'frame' or 'pose'");
    }
  } else if (text.starts_with("file:")) {
    spec.kind = Kind::File;
    spec.path = std::string(text.substr(5));
  } else {
    throw Error(ErrorCode::InvalidArgument, "unknown predictor '" + std::string(text) + "'");
  }
  spec.validate();
  return spec;
}

std::unique_ptr<Predictor> make_predictor(const PredictorSpec& spec) {
  spec.validate();
  switch (spec.kind) {
    case PredictorSpec::Kind::Oracle: return std::make_unique<OraclePredictor>();
    case PredictorSpec::Kind::NoisyOracle:
      return std::make_unique<NoisyOraclePredictor>(spec.sigma_depth, spec.sigma_theta, spec.seed,
                                                    spec.theta_scope);
    case PredictorSpec::Kind::File: return std::make_unique<FilePredictor>(load_predictions(spec.path));
  }
  throw Error(ErrorCode::InvalidArgument, "unknown predictor kind");
}

}  // namespace mpscene
