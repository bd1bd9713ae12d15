#pragma once

#include <filesystem>
#include <optional>

#include "cargoscan/forest/forest.hpp"
#include "cargoscan/imagecore/preprocess.hpp"
#include "cargoscan/phow/phow.hpp"
#include "cargoscan/pipeline/features.hpp"
#include "cargoscan/pipeline/windows.hpp"

namespace cargoscan::pipeline {

inline constexpr int kBundleFormatVersion = 1;

// Everything needed to classify a raw image. On disk: a directory holding
// manifest.json, forest.json and, for PHOW, vocabulary.json.
struct ModelBundle {
  int format_version = kBundleFormatVersion;
  FeatureParams features;
  std::optional<phow::Vocabulary> vocabulary;
  forest::ForestModel forest;
  imagecore::PreprocessConfig preprocess;
  WindowSpec windows;
  double t_car = 0.5;

  bool operator==(const ModelBundle&) const = default;
};

// Forest dimension matches the feature family; PHOW carries a vocabulary of
// the configured size; t_car is finite.
void validate(const ModelBundle& bundle);

void save_bundle(const std::filesystem::path& dir, const ModelBundle& bundle);
ModelBundle load_bundle(const std::filesystem::path& dir);

}  // namespace cargoscan::pipeline
