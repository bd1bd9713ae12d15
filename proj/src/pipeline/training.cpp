#include "cargoscan/pipeline/training.hpp"

#include <cmath>
#include <map>

#include "cargoscan/common/error.hpp"
#include "cargoscan/common/parallel.hpp"
#include "cargoscan/common/rng.hpp"

namespace cargoscan::pipeline {

ImageInfo info_of(const LabeledImage& img) { return {img.image.width(), img.image.height(), img.car, img.rois}; }

std::size_t TrainingPlan::positive_count() const noexcept {
  std::size_t n = 0;
  for (const auto& p : positives) n += p.size();
  return n;
}

TrainingPlan plan_training(std::span<const ImageInfo> images, const WindowSpec& spec, const SamplerConfig& sampler) {
  validate(spec);
  validate(sampler);
  TrainingPlan plan;
  plan.positives.resize(images.size());
  std::vector<std::size_t> pool(images.size(), 0);
  bool any_car = false, any_noncar = false;
  for (std::size_t i = 0; i < images.size(); ++i) {
    const ImageInfo& im = images[i];
    if (im.car) {
      any_car = true;
      if (im.rois.empty()) fail(ErrorKind::kValidation, "car image " + std::to_string(i) + " has no ROI");
      auto pos = oversample_positives(im.width, im.height, im.rois, spec, sampler.t_roi);
      for (int r : pos.unmatched_rois) {
        plan.warnings.push_back("image " + std::to_string(i) + " ROI " + std::to_string(r) +
                                ": no grid window passes t_roi; only the centred window is used");
      }
      plan.positives[i] = std::move(pos.windows);
    } else {
      any_noncar = true;
      pool[i] = window_positions(im.width, spec.width, spec.stride_train).size() *
                window_positions(im.height, spec.height, spec.stride_train).size();
    }
  }
  if (!any_car) fail(ErrorKind::kTraining, "training data has no car images");
  if (!any_noncar) fail(ErrorKind::kTraining, "training data has no noncar images");
  const auto wanted = static_cast<std::size_t>(
      std::llround(sampler.negative_per_positive * static_cast<double>(plan.positive_count())));
  plan.negatives = sample_pool(pool, std::max<std::size_t>(wanted, 1), sampler.seed);
  return plan;
}

forest::TrainingSet assemble_training_set(const TrainingPlan& plan, int dimension, const RowSource& rows,
                                          const std::string& family) {
  forest::TrainingSet set(dimension, family);
  set.features.reserve((plan.positive_count() + plan.negatives.size()) * static_cast<std::size_t>(dimension));
  for (std::size_t i = 0; i < plan.positives.size(); ++i) {
    for (std::size_t k = 0; k < plan.positives[i].size(); ++k) set.add(rows(i, true, k), forest::kCar);
  }
  for (const auto& p : plan.negatives) set.add(rows(p.image, false, p.index), forest::kNoncar);
  return set;
}

std::uint64_t vocabulary_seed(const SamplerConfig& sampler) {
  return splitmix64_finalize(sampler.seed ^ hash_string("vocabulary"));
}

phow::Vocabulary learn_phow_vocabulary(std::span<const LabeledImage> images, const PhowParams& params,
                                       std::uint64_t seed) {
  std::size_t total = 0;
  for (const auto& im : images) total += phow::dense_sift_count(im.image.width(), im.image.height(), params.sift);
  phow::DescriptorSampler sampler(total, params.sample_cap, seed);
  for (const auto& im : images) sampler.consume(phow::dense_sift(im.image, params.sift));
  const auto samples = sampler.take();
  phow::KMeansOptions opts;
  opts.max_iterations = params.kmeans_iterations;
  opts.tolerance = params.kmeans_tolerance;
  return phow::learn_vocabulary(samples, phow::kDescriptorSize, params.vocabulary_size,
                                splitmix64_finalize(seed + 1), opts);
}

ModelBundle train_bundle(std::span<const LabeledImage> images, const TrainingConfig& config,
                         TrainingSummary* summary) {
  validate(config.features);
  std::vector<ImageInfo> infos;
  for (const auto& im : images) infos.push_back(info_of(im));
  const TrainingPlan plan = plan_training(infos, config.windows, config.sampler);

  ModelBundle bundle;
  bundle.features = config.features;
  bundle.preprocess = config.preprocess;
  bundle.windows = config.windows;
  bundle.t_car = config.t_car;
  if (config.features.family == FeatureFamily::kPhow) {
    bundle.vocabulary = learn_phow_vocabulary(images, config.features.phow, vocabulary_seed(config.sampler));
  }
  const phow::Vocabulary* vocab = bundle.vocabulary ? &*bundle.vocabulary : nullptr;
  const int d = feature_dimension(config.features);
  const auto du = static_cast<std::size_t>(d);

  // Negative picks per image, as (train window index -> local row).
  std::vector<std::map<std::size_t, std::size_t>> neg_rows(images.size());
  for (const auto& p : plan.negatives) neg_rows[p.image].emplace(p.index, 0);
  std::vector<std::vector<float>> pos_feats(images.size()), neg_feats(images.size());
  parallel_for(images.size(), config.jobs, [&](std::size_t i) {
    const auto& im = images[i];
    if (im.car) {
      pos_feats[i] = featurize(im.image, config.features, vocab, plan.positives[i]);
      return;
    }
    if (neg_rows[i].empty()) return;
    const auto all = sample_windows(im.image.width(), im.image.height(), config.windows, SamplingMode::kTrain);
    std::vector<Roi> wanted;
    for (auto& [index, row] : neg_rows[i]) {
      row = wanted.size();
      wanted.push_back(all[index]);
    }
    neg_feats[i] = featurize(im.image, config.features, vocab, wanted);
  });

  const RowSource rows = [&](std::size_t image, bool positive, std::size_t index) -> std::span<const float> {
    if (positive) return {pos_feats[image].data() + index * du, du};
    return {neg_feats[image].data() + neg_rows[image].at(index) * du, du};
  };
  const auto set = assemble_training_set(plan, d, rows, to_string(config.features.family));
  forest::ForestConfig fc = config.forest;
  fc.jobs = config.jobs;
  bundle.forest = forest::train(set, fc);
  validate(bundle);
  if (summary) {
    summary->positives = plan.positive_count();
    summary->negatives = plan.negatives.size();
    summary->dimension = d;
    summary->seed = config.forest.seed;
    summary->warnings = plan.warnings;
  }
  return bundle;
}

ImageFeatures compute_image_features(const LabeledImage& img, const TrainingConfig& config, bool want_infer) {
  if (!is_histogram_family(config.features.family)) {
    fail(ErrorKind::kValidation, "per-image feature caching needs a histogram feature family");
  }
  const int w = img.image.width(), h = img.image.height();
  ImageFeatures out;
  std::vector<Roi> all;
  std::size_t n_pos = 0, n_train = 0;
  if (img.car) {
    out.positive_windows = oversample_positives(w, h, img.rois, config.windows, config.sampler.t_roi).windows;
    all = out.positive_windows;
    n_pos = all.size();
  } else {
    const auto train = sample_windows(w, h, config.windows, SamplingMode::kTrain);
    all.insert(all.end(), train.begin(), train.end());
    n_train = train.size();
  }
  if (want_infer) {
    out.infer_windows = sample_windows(w, h, config.windows, SamplingMode::kInfer);
    all.insert(all.end(), out.infer_windows.begin(), out.infer_windows.end());
  }
  // One featurizer over the union shares the label maps.
  const WindowFeaturizer f(img.image, config.features, nullptr, all, config.jobs);
  const auto rows = f.extract_all(all, config.jobs);
  const auto d = static_cast<std::size_t>(f.dimension());
  auto begin = rows.begin();
  out.positive_rows.assign(begin, begin + static_cast<std::ptrdiff_t>(n_pos * d));
  begin += static_cast<std::ptrdiff_t>(n_pos * d);
  out.train_rows.assign(begin, begin + static_cast<std::ptrdiff_t>(n_train * d));
  begin += static_cast<std::ptrdiff_t>(n_train * d);
  out.infer_rows.assign(begin, rows.end());
  return out;
}

}  // namespace cargoscan::pipeline
