#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "cargoscan/common/grid.hpp"
#include "cargoscan/imagecore/image.hpp"
#include "cargoscan/pipeline/bundle.hpp"

namespace cargoscan::pipeline {

struct WindowScore {
  Roi window;
  double score = 0.0;
  bool operator==(const WindowScore&) const = default;
};

struct ImageVerdict {
  double p_image = 0.0;  // max window score
  bool car = false;      // p_image >= t_car
  double t_car = 0.5;
  std::vector<WindowScore> windows;
};

ImageVerdict make_verdict(std::vector<WindowScore> windows, double t_car);

// Raw scan -> feature-domain image, following the bundle's preprocessing
// (including the log transform when enabled).
RealGrid prepare_image(const imagecore::TransmissionImage& raw, const ModelBundle& bundle);

// `image` is already in the feature domain (see prepare_image).
ImageVerdict score_image(const RealGrid& image, const ModelBundle& bundle, int jobs = 1);
ImageVerdict classify_raw(const imagecore::TransmissionImage& raw, const ModelBundle& bundle, int jobs = 1);

// Rectangles of constant coverage: [x0, x1) x [y0, y1) with the mean score
// of the windows covering it, each sum taken in window order. Cells covered
// by no window are omitted.
struct HeatmapCell {
  int x0 = 0, x1 = 0, y0 = 0, y1 = 0;
  double value = 0.0;
};
std::vector<HeatmapCell> heatmap_cells(const ImageVerdict& verdict);

// Per-pixel mean score of covering windows; 0 where nothing covers.
RealGrid heatmap(const ImageVerdict& verdict, int width, int height);
// round(v * 255).
Grid<std::uint8_t> heatmap_to_gray(const RealGrid& map);
// "x0 x1 y0 y1 value" lines at full precision, with a header comment.
std::string format_heatmap_cells(const std::vector<HeatmapCell>& cells, int width, int height);

// Scores one image while objects are multiplied into it. For histogram
// families only the labels near each new footprint are recomputed and the
// affected window histograms updated in place; p_image always equals what
// score_image would return on the current image. PHOW rescored in full.
class ObscurationScorer {
 public:
  // `transmission` is the preprocessed image before any log transform.
  ObscurationScorer(imagecore::TransmissionImage transmission, const ModelBundle& bundle, int jobs = 1);

  // transmission(x + i, y + j) *= patch(i, j); the patch must fit inside
  // the image (kPlacement otherwise).
  void multiply(const RealGrid& patch, int x, int y);

  const imagecore::TransmissionImage& transmission() const noexcept { return transmission_; }
  double p_image() const;
  ImageVerdict verdict() const;

 private:
  void rescore(std::size_t w);
  void full_rescore();

  const ModelBundle& bundle_;
  int jobs_;
  imagecore::TransmissionImage transmission_;
  RealGrid feature_image_;
  std::vector<Roi> windows_;
  std::vector<double> scores_;
  // Histogram families only.
  std::vector<LabelMap> maps_;
  std::vector<int> offsets_;            // first feature slot of each map
  std::vector<std::uint32_t> counts_;   // windows x dimension
};

}  // namespace cargoscan::pipeline
