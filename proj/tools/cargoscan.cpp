// cargoscan: car detection in X-ray cargo images.
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "cargoscan/cli/commands.hpp"
#include "cargoscan/pipeline/features.hpp"

using namespace cargoscan;

int main(int argc, char** argv) {
  CLI::App app{"Detects cars in X-ray cargo transmission images with window features and a random forest."};
  app.require_subcommand(1);
  app.option_defaults()->always_capture_default();

  std::string config_path;
  int jobs = 1;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> family;
  app.add_option("--config", config_path, "JSON run configuration; every field is optional")->default_str("none");
  app.add_option("--jobs", jobs, "worker threads; outputs do not depend on it")->check(CLI::Range(1, 1024));
  app.add_option("--seed", seed, "overrides sampler.seed, forest.seed and synth.seed")->default_str("from config");
  app.add_option("--feature", family, "feature family: intensity, obifs or phow")->default_str("from config");

  auto* pre = app.add_subcommand("preprocess", "preprocess every .pgm in a directory");
  std::string pre_in, pre_out;
  pre->add_option("input", pre_in, "input directory")->required();
  pre->add_option("output", pre_out, "output directory")->required();

  auto* train = app.add_subcommand("train", "train a model bundle from a manifest");
  std::string train_manifest, train_out;
  train->add_option("manifest", train_manifest, "dataset manifest (TSV)")->required();
  train->add_option("bundle", train_out, "output bundle directory")->required();

  auto* classify = app.add_subcommand("classify", "score images with a bundle");
  std::string cls_bundle;
  std::vector<std::string> cls_images;
  std::optional<std::string> cls_heatmap;
  std::optional<double> cls_threshold;
  classify->add_option("bundle", cls_bundle, "bundle directory")->required();
  classify->add_option("images", cls_images, "raw transmission PGM images")->required();
  classify->add_option("--heatmap", cls_heatmap, "write <stem>.heatmap.pgm and .txt into this directory")
      ->default_str("none");
  classify->add_option("--threshold", cls_threshold, "car iff p_I >= threshold")->default_str("bundle t_car");

  auto* synth_cmd = app.add_subcommand("synth", "write a synthetic corpus and manifest.tsv");
  std::string syn_out;
  std::optional<int> syn_cars, syn_noncars, syn_empties;
  synth_cmd->add_option("output", syn_out, "output directory")->required();
  synth_cmd->add_option("--cars", syn_cars, "car scenes")->default_str("synth.cars");
  synth_cmd->add_option("--noncars", syn_noncars, "noncar scenes")->default_str("synth.noncars");
  synth_cmd->add_option("--empties", syn_empties, "empty-container scenes")->default_str("synth.empties");

  auto* eval_cmd = app.add_subcommand("eval", "leave-one-out evaluation");
  cli::EvalInputs ev;
  std::optional<std::string> ev_manifest, ev_cars, ev_train, ev_val, ev_test;
  std::string ev_out;
  eval_cmd->add_option("--manifest", ev_manifest, "one manifest; noncars dealt round-robin to train/validation/test")
      ->default_str("none");
  eval_cmd->add_option("--cars", ev_cars, "car manifest")->default_str("none");
  eval_cmd->add_option("--noncar-train", ev_train, "noncar training manifest")->default_str("none");
  eval_cmd->add_option("--noncar-validation", ev_val, "noncar validation manifest")->default_str("none");
  eval_cmd->add_option("--noncar-test", ev_test, "noncar test manifest")->default_str("none");
  eval_cmd->add_option("--out", ev_out, "output directory for report.txt, scores.txt and bundle/")->required();

  auto* obscure = app.add_subcommand("obscure", "staged obscuration experiment on one car image");
  std::string obs_bundle, obs_image;
  cli::ObscureOptions obs;
  std::optional<std::string> obs_region, obs_out;
  std::optional<int> obs_realisations;
  obscure->add_option("bundle", obs_bundle, "bundle directory")->required();
  obscure->add_option("image", obs_image, "raw car image")->required();
  obscure->add_option("--roi", obs.roi, "car ROI x,y,w,h")->required();
  obscure->add_option("--region", obs_region, "placement region x,y,w,h")->default_str("whole image");
  obscure->add_option("--out", obs_out, "trace file")->default_str("stdout");
  obscure->add_option("--realisations", obs_realisations, "realisations")->default_str("synth.obscuration.realisations");

  auto* config_cmd = app.add_subcommand("config", "print the effective configuration");

  app.fallthrough();
  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return cli::kExitUsage;
  }

  cli::RunConfig config;
  try {
    if (!config_path.empty()) config = cli::load_run_config(config_path);
    if (seed) {
      config.sampler.seed = *seed;
      config.forest.seed = *seed;
      config.synth.seed = *seed;
    }
    if (family) config.features.family = pipeline::parse_feature_family(*family);
    if (syn_cars) config.synth.cars = *syn_cars;
    if (syn_noncars) config.synth.noncars = *syn_noncars;
    if (syn_empties) config.synth.empties = *syn_empties;
    if (obs_realisations) config.synth.obscuration.realisations = *obs_realisations;
    cli::validate(config);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return e.kind() == ErrorKind::kIo ? cli::kExitIo : cli::kExitUsage;
  }

  const cli::Context ctx{config, jobs, std::cout, std::cerr};
  if (*pre) return cli::cmd_preprocess(ctx, pre_in, pre_out);
  if (*train) return cli::cmd_train(ctx, train_manifest, train_out);
  if (*classify) {
    cli::ClassifyOptions opts;
    if (cls_heatmap) opts.heatmap_dir = *cls_heatmap;
    opts.threshold = cls_threshold;
    return cli::cmd_classify(ctx, cls_bundle, {cls_images.begin(), cls_images.end()}, opts);
  }
  if (*synth_cmd) return cli::cmd_synth(ctx, syn_out);
  if (*eval_cmd) {
    if (ev_manifest) ev.manifest = *ev_manifest;
    if (ev_cars) ev.cars = *ev_cars;
    if (ev_train) ev.noncar_train = *ev_train;
    if (ev_val) ev.noncar_validation = *ev_val;
    if (ev_test) ev.noncar_test = *ev_test;
    ev.out_dir = ev_out;
    return cli::cmd_eval(ctx, ev);
  }
  if (*obscure) {
    obs.region = obs_region;
    if (obs_out) obs.out = *obs_out;
    return cli::cmd_obscure(ctx, obs_bundle, obs_image, obs);
  }
  if (*config_cmd) {
    std::cout << cli::format_run_config(config);
    return cli::kExitOk;
  }
  return cli::kExitUsage;
}
