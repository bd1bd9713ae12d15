#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "cargoscan/forest/forest.hpp"
#include "cargoscan/imagecore/preprocess.hpp"
#include "cargoscan/pipeline/config_io.hpp"
#include "cargoscan/pipeline/features.hpp"
#include "cargoscan/pipeline/training.hpp"
#include "cargoscan/pipeline/windows.hpp"
#include "cargoscan/synth/synth.hpp"

namespace cargoscan::cli {

struct EvalSection {
  double t_car = 0.5;  // threshold stored in bundles written by train
  bool operator==(const EvalSection&) const = default;
};

struct ObscureSection {
  int realisations = 5;
  double target_mra = 0.99;
  int max_insertions = 10000;
  double size_fraction = 0.5;
  double density_fraction = 1.0 / 3;
  bool operator==(const ObscureSection&) const = default;
};

struct SynthSection {
  synth::SynthConfig scene;
  int cars = 5;
  int noncars = 5;
  int empties = 5;
  std::uint64_t seed = 1;
  ObscureSection obscuration;
  bool operator==(const SynthSection&) const = default;
};

// Every field has a default, so "{}" is a complete configuration.
struct RunConfig {
  imagecore::PreprocessConfig preprocess;
  pipeline::WindowSpec windows;
  pipeline::FeatureParams features;
  forest::ForestConfig forest;
  pipeline::SamplerConfig sampler;
  EvalSection eval;
  SynthSection synth;
  bool operator==(const RunConfig&) const = default;
};

pipeline::Json to_json(const RunConfig& c);
RunConfig run_config_from_json(const pipeline::Json& j);
RunConfig parse_run_config(const std::string& text);
RunConfig load_run_config(const std::filesystem::path& path);
std::string format_run_config(const RunConfig& c);

void validate(const RunConfig& c);

pipeline::TrainingConfig training_config(const RunConfig& c, int jobs);
synth::ObscurationConfig obscuration_config(const RunConfig& c);

}  // namespace cargoscan::cli
