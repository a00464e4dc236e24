#include "mpscene/commands.hpp"

#include <algorithm>
#include <cstdio>
#include <optional>
#include <regex>
#include <set>
#include <sstream>

#include "parallel.hpp"

namespace mpscene {
namespace fs = std::filesystem;

namespace {

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

std::string fixed(double v, int digits) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error(ErrorCode::IoFailure, "cannot create " + dir.string() + ": " + ec.message());
}

std::vector<fs::path> frame_files(const fs::path& dir) {
  static const std::regex pattern(R"(\d{4,}\.json)");
  std::vector<fs::path> files;
  if (!fs::is_directory(dir)) return files;
  for (const auto& e : fs::directory_iterator(dir))
    if (e.is_regular_file() && std::regex_match(e.path().filename().string(), pattern)) files.push_back(e.path());
  std::sort(files.begin(), files.end());
  return files;
}

std::unique_ptr<Predictor> predictor_for(const RunConfig& config, const char* fallback) {
  PredictorSpec spec = PredictorSpec::parse(config.predictor.value_or(fallback));
  spec.seed = config.seed;
  spec.validate();
  return make_predictor(spec);
}

/// Normalizes the frame's poses and queries the predictor for each of them.
void prepare_frame(const Dataset& ds, std::size_t i, const Predictor& predictor, const Constants& constants,
                   std::vector<Pose2D>& poses, std::vector<LiftPrediction>& predictions) {
  const DatasetFrame& frame = ds.frames[i];
  poses.clear();
  predictions.clear();
  for (std::size_t p = 0; p < frame.pixel_coords.size(); ++p) {
    poses.push_back(normalize_pose(frame.pixel_coords[p], ds.skeleton, constants.c));
    PredictionContext ctx{frame.frame_id, static_cast<int>(p), nullptr};
    if (!ds.truth.empty() && p < ds.truth[i].lifts.size()) ctx.truth = &ds.truth[i].lifts[p];
    predictions.push_back(predictor.predict(poses.back(), ctx));
  }
}

nlohmann::json metrics_to_json(const FrameMetrics& m) {
  return {{"pa_mpjpe_mm", m.pa_mpjpe}, {"se_percent", m.se_percent}, {"se_abs_percent", m.se_abs_percent},
          {"se_mm", m.se_mm},          {"se_abs_mm", m.se_abs_mm},   {"te_mm", m.te},
          {"rde_mm", m.rde}};
}

std::string metric_cells(const FrameMetrics& m) {
  return num(m.pa_mpjpe) + "," + num(m.se_percent) + "," + num(m.se_abs_percent) + "," + num(m.se_mm) + "," +
         num(m.se_abs_mm) + "," + num(m.te) + "," + num(m.rde);
}

std::string mode_cells(const AblationMode& mode) {
  return mode.name() + "," + std::to_string(int(mode.elevation_compensation)) + "," +
         std::to_string(int(mode.rotation_compensation)) + "," + std::to_string(int(mode.contact_heuristic));
}

std::string join(const std::vector<std::string>& cols) {
  std::string out;
  for (std::size_t i = 0; i < cols.size(); ++i) out += (i ? "," : "") + cols[i];
  return out;
}

const char* rde_name(RdeVariant v) { return v == RdeVariant::Vector ? "vector" : "magnitude"; }

RdeVariant parse_rde(const std::string& s) {
  if (s == "vector") return RdeVariant::Vector;
  if (s == "magnitude") return RdeVariant::Magnitude;
  throw Error(ErrorCode::InvalidArgument, "rde variant must be 'vector' or 'magnitude', got '" + s + "'");
}

nlohmann::json constants_json(const Constants& k) {
  return {{"c", k.c}, {"contact_threshold_px", k.contact_threshold_px}};
}

/// Keys of `j` must all appear in `allowed`.
void reject_unknown(const nlohmann::json& j, const nlohmann::json& allowed, const std::string& where) {
  for (const auto& [key, _] : j.items())
    if (!allowed.contains(key)) throw Error(ErrorCode::InvalidArgument, "unknown config field '" + where + key + "'");
}

}  // namespace

// ------------------------------------------------------------------- config

void RunConfig::validate() const {
  constants.validate();
  if (workers < 1 || workers > 256) throw Error(ErrorCode::InvalidArgument, "--workers must be in [1, 256]");
  if (frames < 1) throw Error(ErrorCode::InvalidSpec, "--frames must be >= 1");
  scene.validate();
  camera.validate();
  if (elevation_range_deg) {
    CameraSweep sweep;
    sweep.uniform_deg = elevation_range_deg;
    sweep.validate();
  } else {
    CameraSweep sweep;
    sweep.elevations_deg = elevations_deg;
    sweep.validate();
  }
  if (predictor) PredictorSpec::parse(*predictor).validate();
}

RunConfig RunConfig::from_json(const nlohmann::json& j) {
  static const nlohmann::json keys = {
      {"dataset", 0}, {"out", 0},        {"scenes", 0}, {"mode", 0},         {"predictor", 0},
      {"seed", 0},    {"c", 0},          {"workers", 0}, {"contact_threshold_px", 0},
      {"emit_plot_data", 0}, {"rde_variant", 0}, {"frames", 0}, {"elevations", 0},
      {"elevation_range", 0}, {"scene", 0}, {"camera", 0}};
  if (!j.is_object()) throw Error(ErrorCode::InvalidArgument, "config file must hold a JSON object");
  reject_unknown(j, keys, "");
  RunConfig cfg;
  try {
    if (j.contains("dataset")) cfg.dataset = j.at("dataset").get<std::string>();
    if (j.contains("out")) cfg.out = j.at("out").get<std::string>();
    if (j.contains("scenes")) cfg.scenes = fs::path(j.at("scenes").get<std::string>());
    if (j.contains("mode")) cfg.mode = AblationMode::parse(j.at("mode").get<std::string>());
    if (j.contains("predictor")) cfg.predictor = j.at("predictor").get<std::string>();
    if (j.contains("seed")) cfg.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("c")) cfg.constants.c = j.at("c").get<double>();
    if (j.contains("contact_threshold_px")) cfg.constants.contact_threshold_px = j.at("contact_threshold_px").get<double>();
    if (j.contains("workers")) cfg.workers = j.at("workers").get<int>();
    if (j.contains("emit_plot_data")) cfg.emit_plot_data = j.at("emit_plot_data").get<bool>();
    if (j.contains("rde_variant")) cfg.rde_variant = parse_rde(j.at("rde_variant").get<std::string>());
    if (j.contains("frames")) cfg.frames = j.at("frames").get<int>();
    if (j.contains("elevations")) cfg.elevations_deg = j.at("elevations").get<std::vector<double>>();
    if (j.contains("elevation_range")) {
      const auto r = j.at("elevation_range").get<std::vector<double>>();
      if (r.size() != 2) throw Error(ErrorCode::InvalidArgument, "elevation_range must be [lo, hi]");
      cfg.elevation_range_deg = Range{r[0], r[1]};
    }
    if (j.contains("scene")) {
      nlohmann::json merged = SceneSpec{}.to_json();
      merged.erase("seed");
      reject_unknown(j.at("scene"), merged, "scene.");
      merged.merge_patch(j.at("scene"));
      merged["seed"] = 0;
      cfg.scene = SceneSpec::from_json(merged);
    }
    if (j.contains("camera")) {
      nlohmann::json merged = CameraConfig{}.to_json();
      merged.erase("elevation_deg");
      reject_unknown(j.at("camera"), merged, "camera.");
      merged.merge_patch(j.at("camera"));
      merged["elevation_deg"] = 0.0;
      cfg.camera = CameraConfig::from_json(merged);
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::InvalidArgument, std::string("config file: ") + e.what());
  } catch (const Error& e) {
    if (e.code() == ErrorCode::SchemaViolation) throw Error(ErrorCode::InvalidArgument, e.what());
    throw;
  }
  return cfg;
}

int exit_code_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidSpec:
    case ErrorCode::InvalidArgument:
      return 2;
    default:
      return 3;
  }
}

const std::vector<std::string>& metrics_csv_columns() {
  static const std::vector<std::string> cols{
      "frame_id",  "pa_mpjpe_mm", "se_percent", "se_abs_percent",         "se_mm",
      "se_abs_mm", "te_mm",       "rde_mm",     "mode",                   "elevation_compensation",
      "rotation_compensation",    "contact_heuristic"};
  return cols;
}

const std::vector<std::string>& ablation_csv_columns() {
  static const std::vector<std::string> cols{
      "mode",        "elevation_compensation", "rotation_compensation", "contact_heuristic", "frames",
      "pa_mpjpe_mm", "se_percent",             "se_abs_percent",        "se_mm",             "se_abs_mm",
      "mte_mm",      "rde_mm"};
  return cols;
}

// ----------------------------------------------------------------- commands

void cmd_generate(const RunConfig& config, std::ostream& log) {
  config.validate();
  if (config.out.empty()) throw Error(ErrorCode::InvalidArgument, "generate needs --out");
  SceneSpec spec = config.scene;
  spec.seed = config.seed;
  CameraSweep sweep;
  sweep.base = config.camera;
  sweep.base.c = config.constants.c;
  if (config.elevation_range_deg) sweep.uniform_deg = config.elevation_range_deg;
  else sweep.elevations_deg = config.elevations_deg;
  generate_dataset(config.out, spec, sweep, config.frames, config.workers);
  log << "generated " << config.frames << " frames (seed " << config.seed << ") in " << config.out.string() << "\n";
}

void cmd_reconstruct(const RunConfig& config, std::ostream& log) {
  config.validate();
  if (config.dataset.empty() || config.out.empty())
    throw Error(ErrorCode::InvalidArgument, "reconstruct needs --dataset and --out");
  const Dataset ds = load_dataset(config.dataset);
  const auto predictor = predictor_for(config, "oracle");

  const std::size_t n = ds.frames.size();
  std::vector<std::optional<nlohmann::json>> scenes(n);
  std::vector<std::string> failures(n);
  detail::parallel_for(n, config.workers, [&](std::size_t i) {
    std::vector<Pose2D> poses;
    std::vector<LiftPrediction> predictions;
    prepare_frame(ds, i, *predictor, config.constants, poses, predictions);
    try {
      const auto result = reconstruct(poses, predictions, config.mode, config.constants, ds.skeleton);
      scenes[i] = scene_to_json(ds.frames[i].frame_id, result, config.mode);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::DegenerateScaling) throw;
      failures[i] = e.what();
    }
  });

  const fs::path dir = config.out / "scenes";
  ensure_dir(dir);
  for (const auto& stale : frame_files(dir)) fs::remove(stale);
  nlohmann::json failed = nlohmann::json::array();
  std::size_t written = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (scenes[i]) {
      write_json(dir / frame_file_name(ds.frames[i].frame_id), *scenes[i]);
      ++written;
    } else {
      failed.push_back({{"frame_id", ds.frames[i].frame_id}, {"error", failures[i]}});
    }
  }
  write_json(config.out / "run.json", {{"version", kSchemaVersion},
                                       {"command", "reconstruct"},
                                       {"dataset", config.dataset.generic_string()},
                                       {"mode", config.mode.name()},
                                       {"predictor", config.predictor.value_or("oracle")},
                                       {"seed", config.seed},
                                       {"constants", constants_json(config.constants)},
                                       {"frames", written},
                                       {"failed_frames", failed}});
  log << "reconstructed " << written << " of " << n << " frames (" << config.mode.name() << ") into "
      << dir.string() << "\n";
}

MetricReport cmd_evaluate(const RunConfig& config, std::ostream& log) {
  config.validate();
  if (config.dataset.empty() || config.out.empty())
    throw Error(ErrorCode::InvalidArgument, "evaluate needs --dataset and --out");
  const Dataset ds = load_dataset(config.dataset);
  if (ds.truth.empty()) throw Error(ErrorCode::MissingGroundTruth, "dataset has no gt/ directory");
  const fs::path dir = config.scenes.value_or(config.out / "scenes");

  // Frames the reconstruction reported as failed are excluded, not mismatched.
  std::set<int> excluded;
  const fs::path run = dir.parent_path() / "run.json";
  if (fs::exists(run)) {
    const auto j = read_json(run);
    if (j.contains("failed_frames"))
      for (const auto& f : j.at("failed_frames")) excluded.insert(f.at("frame_id").get<int>());
  }

  const auto files = frame_files(dir);
  std::vector<nlohmann::json> docs;
  for (const auto& f : files) docs.push_back(read_json(f));
  std::vector<std::size_t> truth_index;
  for (std::size_t i = 0; i < ds.truth.size(); ++i)
    if (!excluded.count(ds.truth[i].frame_id)) truth_index.push_back(i);
  if (docs.size() != truth_index.size())
    throw Error(ErrorCode::ScenePairMismatch, std::to_string(docs.size()) + " reconstructed scenes but " +
                                                  std::to_string(truth_index.size()) + " ground-truth frames");
  for (std::size_t k = 0; k < docs.size(); ++k) {
    const int id = docs[k].value("frame_id", -1);
    if (id != ds.truth[truth_index[k]].frame_id)
      throw Error(ErrorCode::ScenePairMismatch, "scene " + files[k].filename().string() + " has frame id " +
                                                    std::to_string(id) + ", expected " +
                                                    std::to_string(ds.truth[truth_index[k]].frame_id));
  }

  std::optional<AblationMode> mode;
  if (!docs.empty() && docs.front().contains("mode"))
    mode = AblationMode::parse(docs.front().at("mode").at("name").get<std::string>());

  std::vector<FrameMetrics> frames(docs.size());
  detail::parallel_for(docs.size(), config.workers, [&](std::size_t k) {
    const FrameTruth& gt = ds.truth[truth_index[k]];
    const Scene3D predicted = scene_from_json(docs[k]);
    if (predicted.poses.size() != gt.world.poses.size())
      throw Error(ErrorCode::ScenePairMismatch, "frame " + std::to_string(gt.frame_id) + ": pose counts differ");
    frames[k] = evaluate_frame(gt.frame_id, predicted, gt.world, ds.skeleton, gt.mm_per_unit, config.rde_variant);
  });
  MetricReport report = aggregate(std::move(frames));

  ensure_dir(config.out);
  const std::string mode_name = mode ? mode->name() : "";
  nlohmann::json per_frame = nlohmann::json::array();
  std::string csv = join(metrics_csv_columns()) + "\n";
  const std::string mode_suffix = mode ? "," + mode_cells(*mode) : ",,,,";
  for (const auto& m : report.frames) {
    auto row = metrics_to_json(m);
    row["frame_id"] = m.frame_id;
    per_frame.push_back(row);
    csv += std::to_string(m.frame_id) + "," + metric_cells(m) + mode_suffix + "\n";
  }
  csv += "mean," + metric_cells(report.mean) + mode_suffix + "\n";

  nlohmann::json mode_json = nullptr;
  if (mode)
    mode_json = {{"name", mode->name()},
                 {"elevation_compensation", mode->elevation_compensation},
                 {"rotation_compensation", mode->rotation_compensation},
                 {"contact_heuristic", mode->contact_heuristic}};
  nlohmann::json excluded_json = nlohmann::json::array();
  for (int id : excluded) excluded_json.push_back(id);
  write_json(config.out / "metrics.json", {{"version", kSchemaVersion},
                                           {"mode", mode_json},
                                           {"rde_variant", rde_name(config.rde_variant)},
                                           {"frames", per_frame},
                                           {"mean", metrics_to_json(report.mean)},
                                           {"excluded_frames", excluded_json}});
  write_text(config.out / "metrics.csv", csv);
  log << "evaluated " << report.frames.size() << " frames: PA-MPJPE " << fixed(report.mean.pa_mpjpe, 3)
      << " mm, SE " << fixed(report.mean.se_percent, 3) << " %, TE " << fixed(report.mean.te, 3) << " mm, RDE "
      << fixed(report.mean.rde, 3) << " mm\n";
  return report;
}

AblationResult cmd_ablate(const RunConfig& config, std::ostream& log) {
  config.validate();
  if (config.dataset.empty() || config.out.empty())
    throw Error(ErrorCode::InvalidArgument, "ablate needs --dataset and --out");
  const Dataset ds = load_dataset(config.dataset);
  if (ds.truth.empty()) throw Error(ErrorCode::MissingGroundTruth, "dataset has no gt/ directory");
  const auto predictor = predictor_for(config, kDefaultAblationPredictor);
  const std::array<AblationMode, 4> modes{AblationMode::naive(), AblationMode::heuristic_only(),
                                          AblationMode::rotation_heuristic(), AblationMode::full()};

  const std::size_t n = ds.frames.size();
  std::vector<std::array<FrameMetrics, 4>> metrics(n);
  std::vector<char> failed(n, 0);
  detail::parallel_for(n, config.workers, [&](std::size_t i) {
    std::vector<Pose2D> poses;
    std::vector<LiftPrediction> predictions;
    prepare_frame(ds, i, *predictor, config.constants, poses, predictions);
    const FrameTruth& gt = ds.truth[i];
    for (std::size_t m = 0; m < modes.size(); ++m) {
      try {
        const auto result = reconstruct(poses, predictions, modes[m], config.constants, ds.skeleton);
        metrics[i][m] = evaluate_frame(gt.frame_id, result.scene, gt.world, ds.skeleton, gt.mm_per_unit,
                                       config.rde_variant);
      } catch (const Error& e) {
        if (e.code() != ErrorCode::DegenerateScaling) throw;
        failed[i] = 1;
        return;
      }
    }
  });

  AblationResult out;
  std::array<std::vector<FrameMetrics>, 4> per_mode;
  for (std::size_t i = 0; i < n; ++i) {
    if (failed[i]) {
      out.failed_frames.push_back(ds.frames[i].frame_id);
      continue;
    }
    for (std::size_t m = 0; m < modes.size(); ++m) per_mode[m].push_back(metrics[i][m]);
  }
  out.frames_used = per_mode[0].size();
  if (out.frames_used == 0) throw Error(ErrorCode::DegenerateScaling, "no frame could be reconstructed in every mode");

  std::string csv = join(ablation_csv_columns()) + "\n";
  std::ostringstream txt;
  txt << "mode        E R H   PA-MPJPE(mm)   SE(%)   MTE(mm)   RDE(mm)\n";
  for (std::size_t m = 0; m < modes.size(); ++m) {
    const FrameMetrics mean = aggregate(per_mode[m]).mean;
    out.rows.push_back({modes[m], mean});
    csv += mode_cells(modes[m]) + "," + std::to_string(out.frames_used) + "," + metric_cells(mean) + "\n";
    char line[160];
    std::snprintf(line, sizeof line, "%-11s %c %c %c %14.2f %7.2f %9.2f %9.2f\n", modes[m].name().c_str(),
                  modes[m].elevation_compensation ? 'x' : '-', modes[m].rotation_compensation ? 'x' : '-',
                  modes[m].contact_heuristic ? 'x' : '-', mean.pa_mpjpe, mean.se_abs_percent, mean.te, mean.rde);
    txt << line;
  }
  txt << "\nframes: " << out.frames_used << " used, " << out.failed_frames.size() << " skipped"
      << "\npredictor: " << config.predictor.value_or(kDefaultAblationPredictor) << " (seed " << config.seed << ")"
      << "\nSE column: mean absolute percent; MTE is the mean translation error.\n";

  ensure_dir(config.out);
  write_text(config.out / "ablation.csv", csv);
  write_text(config.out / "ablation.txt", txt.str());
  if (config.emit_plot_data) {
    std::string plot = "mode,frame_id,metric,value\n";
    static const std::array<const char*, 7> names{"pa_mpjpe_mm", "se_percent", "se_abs_percent", "se_mm",
                                                  "se_abs_mm",   "te_mm",      "rde_mm"};
    for (std::size_t m = 0; m < modes.size(); ++m)
      for (const auto& f : per_mode[m]) {
        const std::array<double, 7> values{f.pa_mpjpe, f.se_percent, f.se_abs_percent, f.se_mm,
                                           f.se_abs_mm, f.te,        f.rde};
        for (std::size_t k = 0; k < names.size(); ++k)
          plot += modes[m].name() + "," + std::to_string(f.frame_id) + "," + names[k] + "," + num(values[k]) + "\n";
      }
    write_text(config.out / "plot_data.csv", plot);
  }
  log << txt.str();
  return out;
}

}  // namespace mpscene
