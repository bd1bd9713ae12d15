#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "cargoscan/common/grid.hpp"
#include "cargoscan/imagecore/filter.hpp"
#include "cargoscan/imagecore/image.hpp"
#include "cargoscan/integralhist/integral_histogram.hpp"

namespace cargoscan::obifs {

using imagecore::Roi;
using integralhist::IntegralHistogram;
using integralhist::LabelMap;

// Scale-normalized derivative-of-Gaussian responses s_ij = sigma^(i+j) G_ij * I,
// with x along columns and y along rows (downwards).
struct DtgResponse {
  RealGrid s00, s10, s01, s20, s11, s02;
  double sigma = 0.0;

  int width() const noexcept { return s00.width(); }
  int height() const noexcept { return s00.height(); }
};

// DtG kernels truncated at ceil(4 sigma). The derivative kernels are moment-
// corrected so that sum_t t k1(t) = -1, sum_t k2(t) = 0 and
// sum_t t^2 k2(t) = 2; ramps and parabolas then give their analytic
// responses up to border effects.
struct DtgKernels {
  imagecore::Kernel1D g0, g1, g2;  // g1 and g2 already carry sigma and sigma^2
};
DtgKernels dtg_kernels(double sigma);
int dtg_radius(double sigma);

DtgResponse dtg_responses(const RealGrid& image, double sigma);
DtgResponse dtg_responses(const imagecore::TransmissionImage& img, double sigma);

struct LambdaGamma {
  RealGrid lambda, gamma;
};
LambdaGamma lambda_gamma(const DtgResponse& resp);

// Basic Image Feature classes in argmax order.
enum class BifClass : std::uint8_t {
  kFlat = 1,
  kSlope = 2,
  kDarkBlob = 3,
  kBrightBlob = 4,
  kDarkLine = 5,
  kBrightLine = 6,
  kSaddle = 7,
};

// Pointwise classification from the six responses at one pixel.
BifClass bif_class_at(double s00, double s10, double s01, double s20, double s11, double s02,
                      double epsilon) noexcept;
int slope_orientation_bin(double s10, double s01) noexcept;         // 0..7, bin 0 centred on +x
int line_orientation_bin(double s20, double s11, double s02) noexcept;  // 0..3, bin 0 centred on 0
// oBIF label layout: 0 flat, 1-8 slope, 9 dark blob, 10 bright blob,
// 11-14 dark line, 15-18 light line, 19-22 saddle.
int obif_label_at(double s00, double s10, double s01, double s20, double s11, double s02,
                  double epsilon) noexcept;

inline constexpr int kBifLabels = 7;
inline constexpr int kObifLabels = 23;

// L = 7 map; label = class index - 1.
LabelMap bif_classify(const DtgResponse& resp, double epsilon);
// L = 23 map in the layout above.
LabelMap obif_classify(const DtgResponse& resp, double epsilon);

struct ObifParams {
  std::vector<double> scales{0.7, 1.4, 2.8, 5.6};
  std::vector<double> epsilons{0.011, 0.1};
  bool oriented = true;

  int labels() const noexcept { return oriented ? kObifLabels : kBifLabels; }
  std::size_t dimension() const noexcept {
    return scales.size() * epsilons.size() * static_cast<std::size_t>(labels());
  }
  bool operator==(const ObifParams&) const = default;
};
void validate(const ObifParams& params);

// Label maps for every (scale, epsilon) pair, scale-major, restricted to
// `region` of the image (output maps are region-sized). Responses are
// computed on the region grown by the largest filter radius, so the labels
// match a full-image computation exactly.
std::vector<LabelMap> obif_label_maps(const RealGrid& image, const ObifParams& params,
                                      const Roi& region);
std::vector<LabelMap> obif_label_maps(const RealGrid& image, const ObifParams& params);
int obif_margin(const ObifParams& params);

// Concatenated per-(scale, epsilon) histograms over `window`, each divided
// by the window pixel count. `histograms` holds one integral histogram per
// pair in scale-major order.
std::vector<double> obif_feature(std::span<const IntegralHistogram> histograms, const Roi& window,
                                 const ObifParams& params);

// 8-bit debug rendering: gray = round(label * 255 / (L - 1)).
Grid<std::uint8_t> render_labels(const LabelMap& map);

}  // namespace cargoscan::obifs
