// facepipe: Gabor + canonical-covariate face verification pipeline CLI.
//
// Subcommands: preprocess | extract | train | evaluate | run, all driven by a
// flat key=value config file. Exit code 0 on success; on failure a single
// machine-readable JSON error line goes to stderr.

#include <CLI11.hpp>

#include <cstdio>
#include <exception>
#include <iostream>
#include <string>

#include <nlohmann/json.hpp>

#include "facepipe/config.hpp"
#include "facepipe/error.hpp"
#include "facepipe/pipeline.hpp"

namespace {

using facepipe::pipeline::ExperimentConfig;

struct CommonArgs {
  std::string config_path;
  std::string output_dir;   // overrides config output_dir when set
  bool no_register = false;
  std::string method;       // overrides config method when set
  long seed = -1;           // overrides config seed when >= 0
};

void add_common(CLI::App* cmd, CommonArgs& args) {
  cmd->add_option("--config", args.config_path, "experiment config file (key=value)")
      ->required();
  cmd->add_option("--output-dir", args.output_dir, "override the output directory");
  cmd->add_flag("--no-register", args.no_register,
                "skip geometric normalization (pre-cropped images)");
  cmd->add_option("--method", args.method,
                  "override the method (svm-rbf|svm-linear|nn-euclidean|nn-cosine)");
  cmd->add_option("--seed", args.seed, "override the split seed");
}

ExperimentConfig resolve(const CommonArgs& args) {
  ExperimentConfig config = facepipe::pipeline::load_config(args.config_path);
  if (!args.output_dir.empty()) config.output_dir = args.output_dir;
  if (args.no_register) config.register_faces = false;
  if (!args.method.empty()) config.method = facepipe::pipeline::parse_method(args.method);
  if (args.seed >= 0) config.seed = static_cast<std::uint64_t>(args.seed);
  return config;
}

void print_summary(const facepipe::eval::EvalReport& report) {
  std::printf("%s (%s): EER %.4f%%  FRR %.4f%%  FAR %.4f%%  recognition %.4f%%\n",
              report.method.c_str(), report.protocol.c_str(), report.eer,
              report.frr_at_eer, report.far_at_eer, report.recognition_rate);
  if (!report.eer_crossed)
    std::printf("note: FAR/FRR curves did not cross; EER is the closest approach\n");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"multiview face verification pipeline"};
  app.require_subcommand(1);

  CommonArgs args;
  std::string model_path;

  CLI::App* cmd_preprocess =
      app.add_subcommand("preprocess", "normalize dataset images to P5 PGM");
  add_common(cmd_preprocess, args);

  CLI::App* cmd_extract =
      app.add_subcommand("extract", "dump Gabor feature vectors (float32 + JSON sidecar)");
  add_common(cmd_extract, args);

  CLI::App* cmd_train =
      app.add_subcommand("train", "fit the projection and per-subject SVMs, save the model");
  add_common(cmd_train, args);
  cmd_train->add_option("--model", model_path, "model output path (default <outdir>/model.fpm)");

  CLI::App* cmd_evaluate =
      app.add_subcommand("evaluate", "score the test split against a saved model");
  add_common(cmd_evaluate, args);
  cmd_evaluate->add_option("--model", model_path, "model input path (default <outdir>/model.fpm)");

  CLI::App* cmd_run =
      app.add_subcommand("run", "full experiment: train, score and emit report CSVs");
  add_common(cmd_run, args);

  CLI11_PARSE(app, argc, argv);

  try {
    const ExperimentConfig config = resolve(args);
    const std::filesystem::path outdir = facepipe::pipeline::resolve_output_dir(config);

    if (cmd_preprocess->parsed()) {
      facepipe::pipeline::preprocess_dataset(config, outdir);
      std::printf("preprocessed images written under %s\n",
                  (outdir / "preprocessed").c_str());
    } else if (cmd_extract->parsed()) {
      facepipe::pipeline::dump_features(config, outdir);
      std::printf("features written to %s\n", (outdir / "features.bin").c_str());
    } else if (cmd_train->parsed()) {
      const auto data = facepipe::pipeline::features_for_config(config);
      const auto models = facepipe::pipeline::fit_models(data, config);
      std::filesystem::path path =
          model_path.empty() ? outdir / "model.fpm" : std::filesystem::path(model_path);
      std::filesystem::create_directories(path.parent_path().empty()
                                              ? std::filesystem::path(".")
                                              : path.parent_path());
      facepipe::pipeline::save_models(path, models);
      std::printf("model written to %s (C=%g, sigma=%g)\n", path.c_str(),
                  models.svm_c, models.svm_sigma);
    } else if (cmd_evaluate->parsed()) {
      const std::filesystem::path path =
          model_path.empty() ? outdir / "model.fpm" : std::filesystem::path(model_path);
      const auto models = facepipe::pipeline::load_models(path);
      const auto data = facepipe::pipeline::features_for_config(config);
      const auto scores = facepipe::pipeline::score_probes(
          models, data.test_features, data.test_labels);
      const auto report = facepipe::eval::make_report(
          facepipe::pipeline::method_name(models.method),
          facepipe::pipeline::protocol_tag(config.protocol), scores);
      facepipe::eval::emit_report(report, outdir);
      print_summary(report);
      std::printf("report CSVs written under %s\n", outdir.c_str());
    } else if (cmd_run->parsed()) {
      const auto result = facepipe::pipeline::run_experiment(config);
      print_summary(result.report);
      std::printf("report CSVs written under %s\n", result.output_dir.c_str());
    }
    return 0;
  } catch (const facepipe::Error& e) {
    nlohmann::json line = {{"error", facepipe::errc_name(e.code())},
                           {"message", e.message()}};
    std::cerr << line.dump() << "\n";
    return 1;
  } catch (const std::exception& e) {
    nlohmann::json line = {{"error", "Unhandled"}, {"message", e.what()}};
    std::cerr << line.dump() << "\n";
    return 2;
  }
}
