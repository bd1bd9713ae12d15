#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "cargoscan/common/grid.hpp"
#include "cargoscan/imagecore/image.hpp"
#include "cargoscan/integralhist/integral_histogram.hpp"
#include "cargoscan/obifs/obifs.hpp"
#include "cargoscan/phow/phow.hpp"

namespace cargoscan::pipeline {

using imagecore::Roi;
using integralhist::LabelMap;

enum class FeatureFamily { kIntensity, kObifs, kPhow };

std::string to_string(FeatureFamily f);
FeatureFamily parse_feature_family(const std::string& s);

struct IntensityParams {
  std::vector<double> sigmas{1.0, 2.0, 4.0, 8.0};
  std::size_t dimension() const noexcept { return sigmas.size() * 256; }
  bool operator==(const IntensityParams&) const = default;
};

struct PhowParams {
  phow::SiftParams sift;
  int vocabulary_size = 300;
  std::size_t sample_cap = 100000;  // descriptors fed to k-means
  int kmeans_iterations = 50;
  double kmeans_tolerance = 1e-4;
  std::size_t dimension() const noexcept {
    return static_cast<std::size_t>(phow::kPyramidCells) * static_cast<std::size_t>(vocabulary_size);
  }
  bool operator==(const PhowParams&) const = default;
};

struct FeatureParams {
  FeatureFamily family = FeatureFamily::kObifs;
  IntensityParams intensity;
  obifs::ObifParams obifs;
  PhowParams phow;
  bool operator==(const FeatureParams&) const = default;
};

void validate(const FeatureParams& params);
int feature_dimension(const FeatureParams& params);

// Histogram families (intensity, oBIF) reduce to label maps; PHOW does not.
bool is_histogram_family(FeatureFamily f) noexcept;

// Label maps restricted to `region` (region-sized), computed so that they
// equal the corresponding crop of the whole-image maps. Intensity gives one
// 256-label map per blur scale; the oBIF family one map per (scale, epsilon).
std::vector<LabelMap> label_maps(const RealGrid& image, const FeatureParams& params, const Roi& region, int jobs = 1);
// Pixels of context on each side of a region that label_maps reads.
int label_margin(const FeatureParams& params);

// Intensity label map for one blur scale over `region`.
LabelMap intensity_labels(const RealGrid& image, double sigma, const Roi& region);

// PHOW visual words of every grid point inside `region`, layer by layer so
// no more than one layer of descriptors is alive at a time.
phow::WordField dense_words(const RealGrid& image, const phow::SiftParams& params, const phow::Vocabulary& vocab,
                            const Roi& region);

// Features of a fixed set of windows over one image. Construction does the
// per-image work (label maps and integral histograms, or visual words); the
// per-window extraction is then cheap and thread-safe.
class WindowFeaturizer {
 public:
  WindowFeaturizer(const RealGrid& image, const FeatureParams& params, const phow::Vocabulary* vocabulary,
                   std::span<const Roi> windows, int jobs = 1);

  int dimension() const noexcept { return dimension_; }
  // `window` must be one of the construction windows.
  void extract(const Roi& window, std::span<float> out) const;
  std::vector<float> extract_all(std::span<const Roi> windows, int jobs = 1) const;

 private:
  FeatureParams params_;
  int dimension_ = 0;
  Roi region_;
  std::vector<integralhist::IntegralHistogram> histograms_;
  phow::WordField words_;
};

// Row-major windows x dimension matrix.
std::vector<float> featurize(const RealGrid& image, const FeatureParams& params, const phow::Vocabulary* vocabulary,
                             std::span<const Roi> windows, int jobs = 1);

// Bounding box of a non-empty window list.
Roi bounding_box(std::span<const Roi> windows);

}  // namespace cargoscan::pipeline
