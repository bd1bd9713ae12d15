#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "cargoscan/forest/forest.hpp"
#include "cargoscan/pipeline/bundle.hpp"

namespace cargoscan::pipeline {

struct TrainingConfig {
  FeatureParams features;
  WindowSpec windows;
  SamplerConfig sampler;
  forest::ForestConfig forest;
  imagecore::PreprocessConfig preprocess;
  double t_car = 0.5;
  int jobs = 1;
};

// An image already in the feature domain, with its annotation.
struct LabeledImage {
  std::string id;
  RealGrid image;
  bool car = false;
  std::vector<Roi> rois;
};

struct ImageInfo {
  int width = 0;
  int height = 0;
  bool car = false;
  std::vector<Roi> rois;
};

ImageInfo info_of(const LabeledImage& img);

// Which windows become training rows. Positives: oversampled windows of every
// car image. Negatives: a uniform draw of round(ratio x positives) windows
// from the training-stride windows of all noncar images, as indices into
// sample_windows(..., kTrain) of each image.
struct TrainingPlan {
  std::vector<std::vector<Roi>> positives;  // per image; empty for noncar
  std::vector<PoolPick> negatives;
  std::vector<std::string> warnings;

  std::size_t positive_count() const noexcept;
};

TrainingPlan plan_training(std::span<const ImageInfo> images, const WindowSpec& spec, const SamplerConfig& sampler);

// Row lookup: (image, is_positive, index) -> feature row.
using RowSource = std::function<std::span<const float>(std::size_t, bool, std::size_t)>;

// Positives first in image order, then negatives in pool order.
forest::TrainingSet assemble_training_set(const TrainingPlan& plan, int dimension, const RowSource& rows,
                                          const std::string& family);

// Vocabulary from a uniform sample of the dense SIFT descriptors of all
// images, computed one image at a time.
phow::Vocabulary learn_phow_vocabulary(std::span<const LabeledImage> images, const PhowParams& params,
                                       std::uint64_t seed);
std::uint64_t vocabulary_seed(const SamplerConfig& sampler);

struct TrainingSummary {
  std::size_t positives = 0;
  std::size_t negatives = 0;
  int dimension = 0;
  std::uint64_t seed = 0;
  std::vector<std::string> warnings;
};

ModelBundle train_bundle(std::span<const LabeledImage> images, const TrainingConfig& config,
                         TrainingSummary* summary = nullptr);

// Everything a cross-validation run needs from one image, computed once:
// positive-window rows for car images, every training-stride row for noncar
// images, and every inference-window row. Histogram families only, since
// PHOW rows depend on the fold's vocabulary.
struct ImageFeatures {
  std::vector<Roi> positive_windows;
  std::vector<float> positive_rows;
  std::vector<float> train_rows;
  std::vector<Roi> infer_windows;
  std::vector<float> infer_rows;
};

ImageFeatures compute_image_features(const LabeledImage& img, const TrainingConfig& config, bool want_infer);

}  // namespace cargoscan::pipeline
