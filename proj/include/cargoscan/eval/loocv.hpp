#pragma once

#include <functional>
#include <string>
#include <vector>

#include "cargoscan/eval/metrics.hpp"
#include "cargoscan/pipeline/bundle.hpp"
#include "cargoscan/pipeline/dataset.hpp"
#include "cargoscan/pipeline/training.hpp"

namespace cargoscan::eval {

// An image the protocol can load on demand; only one image per worker is
// held in memory at a time for histogram families.
struct EvalImage {
  std::string id;  // identity for the partition-overlap check
  bool car = false;
  std::vector<imagecore::Roi> rois;
  std::function<RealGrid()> load;  // feature-domain pixels
};

struct LoocvData {
  std::vector<EvalImage> cars;
  std::vector<EvalImage> noncar_train;
  std::vector<EvalImage> noncar_validation;
  std::vector<EvalImage> noncar_test;
};

// Reads the raw image and preprocesses it for config.
EvalImage eval_image(const pipeline::DatasetEntry& entry, const imagecore::PreprocessConfig& config);
std::vector<EvalImage> eval_images(const pipeline::Dataset& data, const imagecore::PreprocessConfig& config);

struct ScoredImage {
  std::string id;
  bool car = false;
  std::string set;  // "loocv", "validation" or "test"
  double p_image = 0.0;
  bool operator==(const ScoredImage&) const = default;
};

struct LoocvResult {
  MetricReport report;
  std::vector<ScoredImage> scores;  // cars, then validation, then test
  pipeline::ModelBundle bundle;     // all cars + noncar training set, t_car from the report
};

// Same bundle as pipeline::train_bundle on the loaded images. Histogram
// families load one image per worker at a time; PHOW loads them all.
pipeline::ModelBundle train_streamed(const std::vector<EvalImage>& images, const pipeline::TrainingConfig& config,
                                    pipeline::TrainingSummary* summary = nullptr);

// Car i is scored by a model trained on the other cars and the noncar
// training set; validation and test noncars by a model trained on every car.
// Histogram families featurize each image once and reuse the rows across
// folds; PHOW relearns the vocabulary per fold.
LoocvResult run_loocv(const LoocvData& data, const pipeline::TrainingConfig& config);

// "id class set p_I" rows with a header comment.
std::string format_scores(const std::vector<ScoredImage>& scores);

}  // namespace cargoscan::eval
