#include "cargoscan/pipeline/features.hpp"

#include <algorithm>
#include <climits>

#include "cargoscan/common/error.hpp"
#include "cargoscan/common/parallel.hpp"
#include "cargoscan/imagecore/filter.hpp"

namespace cargoscan::pipeline {

namespace {

std::vector<int> lattice(std::span<const Roi> windows, bool horizontal, int origin) {
  std::vector<int> v;
  v.reserve(2 * windows.size());
  for (const Roi& w : windows) {
    v.push_back((horizontal ? w.x : w.y) - origin);
    v.push_back((horizontal ? w.right() : w.bottom()) - origin);
  }
  std::sort(v.begin(), v.end());
  v.erase(std::unique(v.begin(), v.end()), v.end());
  return v;
}

}  // namespace

std::string to_string(FeatureFamily f) {
  switch (f) {
    case FeatureFamily::kIntensity: return "intensity";
    case FeatureFamily::kObifs: return "obifs";
    case FeatureFamily::kPhow: return "phow";
  }
  return "unknown";
}

FeatureFamily parse_feature_family(const std::string& s) {
  if (s == "intensity") return FeatureFamily::kIntensity;
  if (s == "obifs") return FeatureFamily::kObifs;
  if (s == "phow") return FeatureFamily::kPhow;
  fail(ErrorKind::kConfig, "unknown feature family '" + s + "'");
}

bool is_histogram_family(FeatureFamily f) noexcept { return f != FeatureFamily::kPhow; }

void validate(const FeatureParams& params) {
  switch (params.family) {
    case FeatureFamily::kIntensity:
      if (params.intensity.sigmas.empty()) fail(ErrorKind::kConfig, "intensity features need at least one scale");
      for (double s : params.intensity.sigmas) {
        if (!(s > 0.0)) fail(ErrorKind::kConfig, "intensity blur scales must be positive");
      }
      break;
    case FeatureFamily::kObifs:
      obifs::validate(params.obifs);
      break;
    case FeatureFamily::kPhow:
      phow::validate(params.phow.sift);
      if (params.phow.vocabulary_size < 1 || params.phow.vocabulary_size > 65535) {
        fail(ErrorKind::kConfig, "vocabulary size must be in [1, 65535]");
      }
      if (params.phow.sample_cap < static_cast<std::size_t>(params.phow.vocabulary_size)) {
        fail(ErrorKind::kConfig, "descriptor sample cap below vocabulary size");
      }
      if (params.phow.kmeans_iterations < 1) fail(ErrorKind::kConfig, "k-means needs at least one iteration");
      break;
  }
}

int feature_dimension(const FeatureParams& params) {
  switch (params.family) {
    case FeatureFamily::kIntensity: return static_cast<int>(params.intensity.dimension());
    case FeatureFamily::kObifs: return static_cast<int>(params.obifs.dimension());
    case FeatureFamily::kPhow: return static_cast<int>(params.phow.dimension());
  }
  return 0;
}

int label_margin(const FeatureParams& params) {
  switch (params.family) {
    case FeatureFamily::kIntensity: {
      int m = 0;
      for (double s : params.intensity.sigmas) m = std::max(m, imagecore::blur_radius(s));
      return m;
    }
    case FeatureFamily::kObifs: return obifs::obif_margin(params.obifs);
    case FeatureFamily::kPhow: return phow::sift_margin(params.phow.sift);
  }
  return 0;
}

LabelMap intensity_labels(const RealGrid& image, double sigma, const Roi& region) {
  if (!region.within(image.width(), image.height())) fail(ErrorKind::kBounds, "label region outside image");
  const Roi support = imagecore::dilate_clip(region, imagecore::blur_radius(sigma), image.width(), image.height());
  const RealGrid blurred = imagecore::gaussian_blur(imagecore::crop(image, support), sigma);
  const int ox = region.x - support.x;
  const int oy = region.y - support.y;
  LabelMap map(region.w, region.h, 256);
  for (int y = 0; y < region.h; ++y) {
    for (int x = 0; x < region.w; ++x) map(x, y) = integralhist::quantize256(blurred(x + ox, y + oy));
  }
  return map;
}

std::vector<LabelMap> label_maps(const RealGrid& image, const FeatureParams& params, const Roi& region, int jobs) {
  validate(params);
  if (params.family == FeatureFamily::kIntensity) {
    const auto& sigmas = params.intensity.sigmas;
    std::vector<LabelMap> maps(sigmas.size());
    parallel_for(sigmas.size(), jobs, [&](std::size_t i) { maps[i] = intensity_labels(image, sigmas[i], region); });
    return maps;
  }
  if (params.family == FeatureFamily::kObifs) {
    const auto& scales = params.obifs.scales;
    // One scale per task; each keeps its epsilon maps in order.
    std::vector<std::vector<LabelMap>> per_scale(scales.size());
    parallel_for(scales.size(), jobs, [&](std::size_t i) {
      obifs::ObifParams one = params.obifs;
      one.scales = {scales[i]};
      per_scale[i] = obifs::obif_label_maps(image, one, region);
    });
    std::vector<LabelMap> maps;
    for (auto& v : per_scale) {
      for (auto& m : v) maps.push_back(std::move(m));
    }
    return maps;
  }
  fail(ErrorKind::kValidation, "PHOW features have no label maps");
}

phow::WordField dense_words(const RealGrid& image, const phow::SiftParams& params, const phow::Vocabulary& vocab,
                            const Roi& region) {
  phow::WordField out;
  out.width = image.width();
  out.height = image.height();
  out.step = params.step;
  out.num_words = vocab.size();
  for (int b : params.bin_sizes) {
    phow::SiftParams one = params;
    one.bin_sizes = {b};
    const phow::WordField layer = phow::quantize(phow::dense_sift(image, one, region), vocab);
    out.layers.push_back(layer.layers.front());
  }
  return out;
}

Roi bounding_box(std::span<const Roi> windows) {
  if (windows.empty()) fail(ErrorKind::kValidation, "no windows");
  int x0 = INT_MAX, y0 = INT_MAX, x1 = INT_MIN, y1 = INT_MIN;
  for (const Roi& w : windows) {
    x0 = std::min(x0, w.x);
    y0 = std::min(y0, w.y);
    x1 = std::max(x1, w.right());
    y1 = std::max(y1, w.bottom());
  }
  return {x0, y0, x1 - x0, y1 - y0};
}

WindowFeaturizer::WindowFeaturizer(const RealGrid& image, const FeatureParams& params,
                                   const phow::Vocabulary* vocabulary, std::span<const Roi> windows, int jobs)
    : params_(params), dimension_(feature_dimension(params)), region_(bounding_box(windows)) {
  validate(params);
  for (const Roi& w : windows) {
    if (!w.within(image.width(), image.height())) fail(ErrorKind::kBounds, "window " + imagecore::to_string(w) + " outside image");
  }
  if (params.family == FeatureFamily::kPhow) {
    if (vocabulary == nullptr) fail(ErrorKind::kValidation, "PHOW features need a vocabulary");
    if (vocabulary->size() != params.phow.vocabulary_size) fail(ErrorKind::kValidation, "vocabulary size mismatch");
    words_ = dense_words(image, params.phow.sift, *vocabulary, region_);
    return;
  }
  const auto maps = label_maps(image, params, region_, jobs);
  const auto xs = lattice(windows, true, region_.x);
  const auto ys = lattice(windows, false, region_.y);
  histograms_.resize(maps.size());
  parallel_for(maps.size(), jobs, [&](std::size_t i) {
    histograms_[i] = integralhist::IntegralHistogram::build(maps[i], xs, ys);
  });
}

void WindowFeaturizer::extract(const Roi& window, std::span<float> out) const {
  if (out.size() != static_cast<std::size_t>(dimension_)) fail(ErrorKind::kValidation, "feature buffer size mismatch");
  if (params_.family == FeatureFamily::kPhow) {
    const auto enc = phow::encode_window(words_, window);
    std::copy(enc.values.begin(), enc.values.end(), out.begin());
    return;
  }
  const Roi local{window.x - region_.x, window.y - region_.y, window.w, window.h};
  const double area = static_cast<double>(window.area());
  std::size_t offset = 0;
  std::vector<std::uint32_t> counts;
  for (const auto& ih : histograms_) {
    counts.resize(static_cast<std::size_t>(ih.num_labels()));
    ih.query_into(local, counts);
    for (std::uint32_t c : counts) out[offset++] = static_cast<float>(c / area);
  }
}

std::vector<float> WindowFeaturizer::extract_all(std::span<const Roi> windows, int jobs) const {
  const auto d = static_cast<std::size_t>(dimension_);
  std::vector<float> out(windows.size() * d);
  parallel_for(windows.size(), jobs, [&](std::size_t i) {
    extract(windows[i], std::span<float>(out.data() + i * d, d));
  });
  return out;
}

std::vector<float> featurize(const RealGrid& image, const FeatureParams& params, const phow::Vocabulary* vocabulary,
                             std::span<const Roi> windows, int jobs) {
  if (windows.empty()) return {};
  const WindowFeaturizer f(image, params, vocabulary, windows, jobs);
  return f.extract_all(windows, jobs);
}

}  // namespace cargoscan::pipeline
