#include "cargoscan/eval/loocv.hpp"

#include <algorithm>
#include <set>
#include <sstream>

#include "cargoscan/common/error.hpp"
#include "cargoscan/common/parallel.hpp"
#include "cargoscan/imagecore/pgm.hpp"
#include "cargoscan/imagecore/preprocess.hpp"
#include "cargoscan/pipeline/scoring.hpp"

namespace cargoscan::eval {

using pipeline::ImageFeatures;
using pipeline::ImageInfo;
using pipeline::TrainingConfig;

EvalImage eval_image(const pipeline::DatasetEntry& entry, const imagecore::PreprocessConfig& config) {
  EvalImage e;
  e.id = entry.path.lexically_normal().string();
  e.car = entry.car;
  e.rois = entry.rois;
  e.load = [path = entry.path, config] { return imagecore::preprocess(imagecore::load_image(path), config).image.pixels; };
  return e;
}

std::vector<EvalImage> eval_images(const pipeline::Dataset& data, const imagecore::PreprocessConfig& config) {
  std::vector<EvalImage> out;
  for (const auto& e : data.entries) out.push_back(eval_image(e, config));
  return out;
}

namespace {

void check_partitions(const LoocvData& data) {
  if (data.cars.size() < 2) fail(ErrorKind::kProtocol, "leave-one-out needs at least two car images");
  if (data.noncar_train.empty() || data.noncar_test.empty()) {
    fail(ErrorKind::kProtocol, "noncar training and test sets must be non-empty");
  }
  std::set<std::string> seen;
  auto add = [&](const std::vector<EvalImage>& part, bool car, const char* name) {
    for (const auto& e : part) {
      if (e.car != car) fail(ErrorKind::kProtocol, e.id + " has the wrong class for the " + std::string(name) + " set");
      if (!seen.insert(e.id).second) fail(ErrorKind::kProtocol, e.id + " appears in more than one partition");
    }
  };
  add(data.cars, true, "car");
  add(data.noncar_train, false, "noncar training");
  add(data.noncar_validation, false, "noncar validation");
  add(data.noncar_test, false, "noncar test");
}

double max_row_score(const forest::ForestModel& model, const std::vector<float>& rows, std::size_t d) {
  if (rows.empty()) fail(ErrorKind::kValidation, "image has no inference windows");
  double best = 0.0;
  for (std::size_t r = 0; r * d < rows.size(); ++r) {
    best = std::max(best, forest::score(model, std::span<const float>(rows.data() + r * d, d)));
  }
  return best;
}

struct Bank {
  std::vector<ImageInfo> infos;        // cars, then noncar training images
  std::vector<ImageFeatures> features;
  std::vector<std::vector<float>> holdout_rows;  // validation then test, inference rows only
};

// Cars get inference rows only when `car_infer`.
Bank build_bank(const std::vector<const EvalImage*>& train, const std::vector<const EvalImage*>& hold,
                const TrainingConfig& config, bool car_infer) {
  TrainingConfig inner = config;
  inner.jobs = 1;  // parallel over images instead
  Bank bank;
  bank.infos.resize(train.size());
  bank.features.resize(train.size());
  bank.holdout_rows.resize(hold.size());
  const std::size_t n = train.size() + hold.size();
  parallel_for(n, config.jobs, [&](std::size_t k) {
    const bool is_train = k < train.size();
    const EvalImage& e = is_train ? *train[k] : *hold[k - train.size()];
    pipeline::LabeledImage img{e.id, e.load(), e.car, e.rois};
    // Held-out noncars only need inference rows; cars need both.
    const bool want_infer = !is_train || (e.car && car_infer);
    ImageFeatures f = pipeline::compute_image_features(img, inner, want_infer);
    if (is_train) {
      bank.infos[k] = pipeline::info_of(img);
      bank.features[k] = std::move(f);
    } else {
      bank.holdout_rows[k - train.size()] = std::move(f.infer_rows);
    }
  });
  return bank;
}

// Trains on the bank images whose index is not `skip`.
// Trains on the bank images whose index is not `skip`.
forest::ForestModel train_from_bank(const Bank& bank, const TrainingConfig& config, std::size_t skip,
                                    pipeline::TrainingSummary* summary = nullptr) {
  std::vector<ImageInfo> infos;
  std::vector<std::size_t> source;
  for (std::size_t i = 0; i < bank.infos.size(); ++i) {
    if (i == skip) continue;
    infos.push_back(bank.infos[i]);
    source.push_back(i);
  }
  const auto plan = pipeline::plan_training(infos, config.windows, config.sampler);
  const int d = pipeline::feature_dimension(config.features);
  const auto du = static_cast<std::size_t>(d);
  const pipeline::RowSource rows = [&](std::size_t image, bool positive, std::size_t index) -> std::span<const float> {
    const ImageFeatures& f = bank.features[source[image]];
    const auto& v = positive ? f.positive_rows : f.train_rows;
    return {v.data() + index * du, du};
  };
  const auto set = pipeline::assemble_training_set(plan, d, rows, pipeline::to_string(config.features.family));
  forest::ForestConfig fc = config.forest;
  fc.jobs = config.jobs;
  if (summary) {
    summary->positives = plan.positive_count();
    summary->negatives = plan.negatives.size();
    summary->dimension = d;
    summary->seed = config.forest.seed;
    summary->warnings = plan.warnings;
  }
  return forest::train(set, fc);
}

pipeline::ModelBundle bundle_with(const TrainingConfig& config, forest::ForestModel model) {
  pipeline::ModelBundle b;
  b.features = config.features;
  b.preprocess = config.preprocess;
  b.windows = config.windows;
  b.t_car = config.t_car;
  b.forest = std::move(model);
  return b;
}

std::vector<pipeline::LabeledImage> load_all(const std::vector<EvalImage>& part, int jobs) {
  std::vector<pipeline::LabeledImage> out(part.size());
  parallel_for(part.size(), jobs, [&](std::size_t i) { out[i] = {part[i].id, part[i].load(), part[i].car, part[i].rois}; });
  return out;
}

}  // namespace

pipeline::ModelBundle train_streamed(const std::vector<EvalImage>& images, const TrainingConfig& config,
                                    pipeline::TrainingSummary* summary) {
  pipeline::validate(config.features);
  if (!pipeline::is_histogram_family(config.features.family)) {
    return pipeline::train_bundle(load_all(images, config.jobs), config, summary);
  }
  std::vector<const EvalImage*> train;
  for (const auto& e : images) train.push_back(&e);
  const Bank bank = build_bank(train, {}, config, false);
  auto b = bundle_with(config, train_from_bank(bank, config, bank.infos.size(), summary));
  pipeline::validate(b);
  return b;
}

LoocvResult run_loocv(const LoocvData& data, const TrainingConfig& config) {
  check_partitions(data);
  pipeline::validate(config.features);
  const std::size_t nc = data.cars.size();
  std::vector<double> pos(nc), val(data.noncar_validation.size()), test(data.noncar_test.size());
  LoocvResult result;

  if (pipeline::is_histogram_family(config.features.family)) {
    std::vector<const EvalImage*> train, hold;
    for (const auto& e : data.cars) train.push_back(&e);
    for (const auto& e : data.noncar_train) train.push_back(&e);
    for (const auto& e : data.noncar_validation) hold.push_back(&e);
    for (const auto& e : data.noncar_test) hold.push_back(&e);
    const Bank bank = build_bank(train, hold, config, true);
    const auto d = static_cast<std::size_t>(pipeline::feature_dimension(config.features));
    for (std::size_t i = 0; i < nc; ++i) {
      pos[i] = max_row_score(train_from_bank(bank, config, i), bank.features[i].infer_rows, d);
    }
    result.bundle = bundle_with(config, train_from_bank(bank, config, bank.infos.size()));
    for (std::size_t k = 0; k < val.size() + test.size(); ++k) {
      const double p = max_row_score(result.bundle.forest, bank.holdout_rows[k], d);
      (k < val.size() ? val[k] : test[k - val.size()]) = p;
    }
  } else {
    // PHOW: the vocabulary depends on the training images, so every fold
    // trains from pixels. Holds the training images in memory.
    std::vector<pipeline::LabeledImage> train = load_all(data.cars, config.jobs);
    const auto noncars = load_all(data.noncar_train, config.jobs);
    train.insert(train.end(), noncars.begin(), noncars.end());
    for (std::size_t i = 0; i < nc; ++i) {
      std::vector<pipeline::LabeledImage> fold;
      for (std::size_t k = 0; k < train.size(); ++k) {
        if (k != i) fold.push_back(train[k]);
      }
      const auto b = pipeline::train_bundle(fold, config);
      pos[i] = pipeline::score_image(train[i].image, b, config.jobs).p_image;
    }
    result.bundle = pipeline::train_bundle(train, config);
    auto score_part = [&](const std::vector<EvalImage>& part, std::vector<double>& out) {
      for (std::size_t k = 0; k < part.size(); ++k) {
        out[k] = pipeline::score_image(part[k].load(), result.bundle, config.jobs).p_image;
      }
    };
    score_part(data.noncar_validation, val);
    score_part(data.noncar_test, test);
  }

  result.report = summarize(pos, val, test);
  result.report.feature_family = pipeline::to_string(config.features.family);
  result.bundle.t_car = result.report.t_car;
  for (std::size_t i = 0; i < nc; ++i) result.scores.push_back({data.cars[i].id, true, "loocv", pos[i]});
  for (std::size_t k = 0; k < val.size(); ++k) {
    result.scores.push_back({data.noncar_validation[k].id, false, "validation", val[k]});
  }
  for (std::size_t k = 0; k < test.size(); ++k) result.scores.push_back({data.noncar_test[k].id, false, "test", test[k]});
  return result;
}

std::string format_scores(const std::vector<ScoredImage>& scores) {
  std::ostringstream os;
  os.precision(17);
  os << "# id class set p_I\n";
  for (const auto& s : scores) os << s.id << ' ' << (s.car ? "car" : "noncar") << ' ' << s.set << ' ' << s.p_image << '\n';
  return os.str();
}

}  // namespace cargoscan::eval
