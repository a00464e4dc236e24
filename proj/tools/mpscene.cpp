// mpscene command-line entry point: generate, reconstruct, evaluate, ablate.

#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "mpscene/commands.hpp"

namespace {

using mpscene::RunConfig;

/// Flag values as parsed; only options that were actually given override the
/// config file.
struct Flags {
  std::string config;
  std::string dataset, out, scenes, mode, predictor, rde_variant;
  std::uint64_t seed = 0;
  double c = 0.0, threshold = 0.0;
  int workers = 1, frames = 0;
  std::vector<double> elevations, elevation_range;
  bool emit_plot_data = false;
};

struct Command {
  CLI::App* app = nullptr;
  std::vector<std::pair<std::string, CLI::Option*>> options;

  void add(const std::string& key, CLI::Option* opt) { options.emplace_back(key, opt); }
  bool given(const std::string& key) const {
    for (const auto& [k, opt] : options)
      if (k == key) return opt->count() > 0;
    return false;
  }
};

void add_common(Command& cmd, Flags& f) {
  cmd.add("config", cmd.app->add_option("--config", f.config, "JSON config file; flags override its values"));
  cmd.add("seed", cmd.app->add_option("--seed", f.seed, "Scene seed (generate) or predictor noise seed"));
  cmd.add("c", cmd.app->add_option("--c", f.c, "Camera-to-root distance of lifted poses"));
  cmd.add("threshold", cmd.app->add_option("--contact-threshold-px", f.threshold,
                                           "Vertical pelvis pixel distance below which elevations are equalized"));
  cmd.add("workers", cmd.app->add_option("--workers", f.workers, "Worker threads for frame-level parallelism"));
}

RunConfig build_config(const Command& cmd, const Flags& f) {
  RunConfig cfg;
  if (cmd.given("config")) cfg = RunConfig::from_json(mpscene::read_json(f.config));
  if (cmd.given("dataset")) cfg.dataset = f.dataset;
  if (cmd.given("out")) cfg.out = f.out;
  if (cmd.given("scenes")) cfg.scenes = std::filesystem::path(f.scenes);
  if (cmd.given("mode")) cfg.mode = mpscene::AblationMode::parse(f.mode);
  if (cmd.given("predictor")) cfg.predictor = f.predictor;
  if (cmd.given("seed")) cfg.seed = f.seed;
  if (cmd.given("c")) cfg.constants.c = f.c;
  if (cmd.given("threshold")) cfg.constants.contact_threshold_px = f.threshold;
  if (cmd.given("workers")) cfg.workers = f.workers;
  if (cmd.given("frames")) cfg.frames = f.frames;
  if (cmd.given("elevations")) {
    cfg.elevations_deg = f.elevations;
    cfg.elevation_range_deg.reset();
  }
  if (cmd.given("elevation_range")) {
    if (f.elevation_range.size() != 2)
      throw mpscene::Error(mpscene::ErrorCode::InvalidArgument, "--elevation-range takes lo,hi");
    cfg.elevation_range_deg = mpscene::Range{f.elevation_range[0], f.elevation_range[1]};
  }
  if (cmd.given("emit_plot_data")) cfg.emit_plot_data = f.emit_plot_data;
  if (cmd.given("rde_variant")) {
    if (f.rde_variant == "vector") cfg.rde_variant = mpscene::RdeVariant::Vector;
    else if (f.rde_variant == "magnitude") cfg.rde_variant = mpscene::RdeVariant::Magnitude;
    else throw mpscene::Error(mpscene::ErrorCode::InvalidArgument, "--rde-variant must be vector or magnitude");
  }
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multi-person 3D scene reconstruction from independently lifted 2D poses"};
  app.require_subcommand(1);
  Flags f;

  Command generate{app.add_subcommand("generate", "Write a synthetic two-person dataset")};
  add_common(generate, f);
  generate.add("out", generate.app->add_option("--out", f.out, "Output dataset directory"));
  generate.add("frames", generate.app->add_option("--frames", f.frames, "Number of frames (>= 1)"));
  generate.add("elevations", generate.app->add_option("--elevations", f.elevations,
                                                      "Stratified camera elevations in degrees, e.g. 0,10,20,30")
                                 ->delimiter(','));
  generate.add("elevation_range", generate.app->add_option("--elevation-range", f.elevation_range,
                                                           "Uniform elevation range lo,hi in degrees")
                                      ->delimiter(',')
                                      ->expected(2));

  Command reconstruct{app.add_subcommand("reconstruct", "Reconstruct every frame of a dataset")};
  add_common(reconstruct, f);
  reconstruct.add("dataset", reconstruct.app->add_option("--dataset", f.dataset, "Dataset directory"));
  reconstruct.add("out", reconstruct.app->add_option("--out", f.out, "Output directory"));
  reconstruct.add("mode", reconstruct.app->add_option("--mode", f.mode, "naive, heuristic, rotation or full"));
  reconstruct.add("predictor", reconstruct.app->add_option(
                                   "--predictor", f.predictor, "oracle, noisy:<sd>,<st>[,frame|pose] or file:<path>"));

  Command evaluate{app.add_subcommand("evaluate", "Score reconstructed scenes against ground truth")};
  add_common(evaluate, f);
  evaluate.add("dataset", evaluate.app->add_option("--dataset", f.dataset, "Dataset directory with gt/"));
  evaluate.add("out", evaluate.app->add_option("--out", f.out, "Run directory; metrics are written here"));
  evaluate.add("scenes", evaluate.app->add_option("--scenes", f.scenes, "Scene directory (default <out>/scenes)"));
  evaluate.add("rde_variant", evaluate.app->add_option("--rde-variant", f.rde_variant, "vector or magnitude"));

  Command ablate{app.add_subcommand("ablate", "Run the four ablation modes over one dataset")};
  add_common(ablate, f);
  ablate.add("dataset", ablate.app->add_option("--dataset", f.dataset, "Dataset directory with gt/"));
  ablate.add("out", ablate.app->add_option("--out", f.out, "Output directory"));
  ablate.add("predictor", ablate.app->add_option("--predictor", f.predictor,
                                                 std::string("Predictor spec (default ") +
                                                     mpscene::kDefaultAblationPredictor + ")"));
  ablate.add("emit_plot_data", ablate.app->add_flag("--emit-plot-data", f.emit_plot_data,
                                                    "Also write long-format plot_data.csv"));
  ablate.add("rde_variant", ablate.app->add_option("--rde-variant", f.rde_variant, "vector or magnitude"));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  const Command* active = nullptr;
  for (const Command* cmd : {&generate, &reconstruct, &evaluate, &ablate})
    if (cmd->app->parsed()) active = cmd;

  try {
    const RunConfig cfg = build_config(*active, f);
    if (active == &generate) mpscene::cmd_generate(cfg, std::cout);
    else if (active == &reconstruct) mpscene::cmd_reconstruct(cfg, std::cout);
    else if (active == &evaluate) mpscene::cmd_evaluate(cfg, std::cout);
    else mpscene::cmd_ablate(cfg, std::cout);
    return 0;
  } catch (const mpscene::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    const int code = mpscene::exit_code_for(e.code());
    if (code == 2) std::cerr << active->app->help();
    return code;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return 4;
  }
}
