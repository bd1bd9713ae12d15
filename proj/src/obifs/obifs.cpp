#include "cargoscan/obifs/obifs.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>

#include "cargoscan/common/error.hpp"

namespace cargoscan::obifs {

using imagecore::Kernel1D;
using imagecore::convolve_cols;
using imagecore::convolve_rows;

namespace {
constexpr double kInvSqrt2 = 0.70710678118654752440;
}

int dtg_radius(double sigma) { return static_cast<int>(std::ceil(4.0 * sigma)); }

DtgKernels dtg_kernels(double sigma) {
  if (!(sigma > 0.0)) fail(ErrorKind::kValidation, "DtG scale must be positive");
  const int r = dtg_radius(sigma);
  const std::size_t n = static_cast<std::size_t>(r) + 1;
  std::vector<double> g(n);
  for (int t = 0; t <= r; ++t) g[static_cast<std::size_t>(t)] = std::exp(-0.5 * t * t / (sigma * sigma));

  DtgKernels k;
  // G0: unit mass.
  double mass = g[0];
  for (std::size_t t = 1; t < n; ++t) mass += 2.0 * g[t];
  k.g0.parity = Kernel1D::Parity::kSymmetric;
  k.g0.taps.resize(n);
  for (std::size_t t = 0; t < n; ++t) k.g0.taps[t] = g[t] / mass;

  // G1: k1(t) = -c t g(t) with sum_t t k1(t) = -1, then scaled by sigma.
  k.g1.parity = Kernel1D::Parity::kAntisymmetric;
  k.g1.taps.assign(n, 0.0);
  double m1 = 0.0;
  for (std::size_t t = 1; t < n; ++t) m1 += 2.0 * static_cast<double>(t * t) * g[t];
  for (std::size_t t = 1; t < n; ++t) k.g1.taps[t] = -sigma * static_cast<double>(t) * g[t] / m1;

  // G2: (t^2/s^4 - 1/s^2) g(t), zero-sum by removing a multiple of G0, second
  // moment 2, then scaled by sigma^2.
  k.g2.parity = Kernel1D::Parity::kSymmetric;
  std::vector<double> k2(n);
  for (std::size_t t = 0; t < n; ++t) {
    const double td = static_cast<double>(t);
    k2[t] = (td * td / (sigma * sigma * sigma * sigma) - 1.0 / (sigma * sigma)) * g[t];
  }
  double sum2 = k2[0];
  for (std::size_t t = 1; t < n; ++t) sum2 += 2.0 * k2[t];
  for (std::size_t t = 0; t < n; ++t) k2[t] -= sum2 * k.g0.taps[t];
  double m2 = 0.0;
  for (std::size_t t = 1; t < n; ++t) m2 += 2.0 * static_cast<double>(t * t) * k2[t];
  k.g2.taps.resize(n);
  for (std::size_t t = 0; t < n; ++t) k.g2.taps[t] = sigma * sigma * 2.0 * k2[t] / m2;
  return k;
}

DtgResponse dtg_responses(const RealGrid& image, double sigma) {
  const DtgKernels k = dtg_kernels(sigma);
  DtgResponse r;
  r.sigma = sigma;
  {
    const RealGrid h0 = convolve_rows(image, k.g0);
    r.s00 = convolve_cols(h0, k.g0);
    r.s01 = convolve_cols(h0, k.g1);
    r.s02 = convolve_cols(h0, k.g2);
  }
  {
    const RealGrid h1 = convolve_rows(image, k.g1);
    r.s10 = convolve_cols(h1, k.g0);
    r.s11 = convolve_cols(h1, k.g1);
  }
  r.s20 = convolve_cols(convolve_rows(image, k.g2), k.g0);
  return r;
}

DtgResponse dtg_responses(const imagecore::TransmissionImage& img, double sigma) {
  return dtg_responses(img.pixels, sigma);
}

LambdaGamma lambda_gamma(const DtgResponse& resp) {
  LambdaGamma out{RealGrid(resp.width(), resp.height()), RealGrid(resp.width(), resp.height())};
  const std::size_t n = resp.s00.size();
  for (std::size_t i = 0; i < n; ++i) {
    const double s20 = resp.s20.data()[i];
    const double s02 = resp.s02.data()[i];
    const double s11 = resp.s11.data()[i];
    out.lambda.data()[i] = s20 + s02;
    out.gamma.data()[i] = std::sqrt((s20 - s02) * (s20 - s02) + 4.0 * s11 * s11);
  }
  return out;
}

namespace {

// Argmax over the six structure quantities (classes 2..7), first wins.
struct Structure {
  int cls;
  double value;
};

Structure strongest_structure(double s10, double s01, double s20, double s11, double s02) noexcept {
  const double lambda = s20 + s02;
  const double gamma = std::sqrt((s20 - s02) * (s20 - s02) + 4.0 * s11 * s11);
  const std::array<double, 6> q{std::sqrt(s10 * s10 + s01 * s01),
                                lambda,
                                -lambda,
                                (gamma + lambda) * kInvSqrt2,
                                (gamma - lambda) * kInvSqrt2,
                                gamma};
  int best = 0;
  for (int i = 1; i < 6; ++i) {
    if (q[static_cast<std::size_t>(i)] > q[static_cast<std::size_t>(best)]) best = i;
  }
  return {best + 2, q[static_cast<std::size_t>(best)]};
}

int positive_mod(int a, int m) noexcept {
  const int r = a % m;
  return r < 0 ? r + m : r;
}

int obif_label_from(BifClass cls, double s10, double s01, double s20, double s11, double s02) noexcept {
  switch (cls) {
    case BifClass::kFlat: return 0;
    case BifClass::kSlope: return 1 + slope_orientation_bin(s10, s01);
    case BifClass::kDarkBlob: return 9;
    case BifClass::kBrightBlob: return 10;
    case BifClass::kDarkLine: return 11 + line_orientation_bin(s20, s11, s02);
    case BifClass::kBrightLine: return 15 + line_orientation_bin(s20, s11, s02);
    case BifClass::kSaddle: return 19 + line_orientation_bin(s20, s11, s02);
  }
  return 0;
}

}  // namespace

BifClass bif_class_at(double s00, double s10, double s01, double s20, double s11, double s02,
                      double epsilon) noexcept {
  const Structure s = strongest_structure(s10, s01, s20, s11, s02);
  // Ties go to the lowest index, so flat wins when equal.
  if (epsilon * s00 >= s.value) return BifClass::kFlat;
  return static_cast<BifClass>(s.cls);
}

int slope_orientation_bin(double s10, double s01) noexcept {
  const double angle = std::atan2(s01, s10);
  const int bin = static_cast<int>(std::floor((angle + std::numbers::pi / 8.0) / (std::numbers::pi / 4.0)));
  return positive_mod(bin, 8);
}

int line_orientation_bin(double s20, double s11, double s02) noexcept {
  double theta = 0.5 * std::atan2(2.0 * s11, s20 - s02);
  if (theta < 0.0) theta += std::numbers::pi;
  const int bin = static_cast<int>(std::floor((theta + std::numbers::pi / 8.0) / (std::numbers::pi / 4.0)));
  return positive_mod(bin, 4);
}

int obif_label_at(double s00, double s10, double s01, double s20, double s11, double s02,
                  double epsilon) noexcept {
  return obif_label_from(bif_class_at(s00, s10, s01, s20, s11, s02, epsilon), s10, s01, s20, s11, s02);
}

LabelMap bif_classify(const DtgResponse& resp, double epsilon) {
  LabelMap map(resp.width(), resp.height(), kBifLabels);
  const std::size_t n = resp.s00.size();
  for (std::size_t i = 0; i < n; ++i) {
    const BifClass c = bif_class_at(resp.s00.data()[i], resp.s10.data()[i], resp.s01.data()[i],
                                    resp.s20.data()[i], resp.s11.data()[i], resp.s02.data()[i], epsilon);
    map.labels[i] = static_cast<std::uint16_t>(static_cast<int>(c) - 1);
  }
  return map;
}

LabelMap obif_classify(const DtgResponse& resp, double epsilon) {
  LabelMap map(resp.width(), resp.height(), kObifLabels);
  const std::size_t n = resp.s00.size();
  for (std::size_t i = 0; i < n; ++i) {
    map.labels[i] = static_cast<std::uint16_t>(
        obif_label_at(resp.s00.data()[i], resp.s10.data()[i], resp.s01.data()[i], resp.s20.data()[i],
                      resp.s11.data()[i], resp.s02.data()[i], epsilon));
  }
  return map;
}

void validate(const ObifParams& params) {
  if (params.scales.empty() || params.epsilons.empty()) {
    fail(ErrorKind::kConfig, "oBIF parameters need at least one scale and one epsilon");
  }
  for (double s : params.scales) {
    if (!(s > 0.0)) fail(ErrorKind::kConfig, "oBIF scales must be positive");
  }
  for (double e : params.epsilons) {
    if (!(e > 0.0)) fail(ErrorKind::kConfig, "oBIF epsilons must be positive");
  }
}

int obif_margin(const ObifParams& params) {
  int m = 0;
  for (double s : params.scales) m = std::max(m, dtg_radius(s));
  return m;
}

std::vector<LabelMap> obif_label_maps(const RealGrid& image, const ObifParams& params,
                                      const Roi& region) {
  validate(params);
  if (!region.within(image.width(), image.height())) fail(ErrorKind::kBounds, "label region outside image");
  const Roi support = imagecore::dilate_clip(region, obif_margin(params), image.width(), image.height());
  const bool whole = support == Roi{0, 0, image.width(), image.height()};
  const RealGrid patch = whole ? RealGrid{} : imagecore::crop(image, support);
  const RealGrid& src = whole ? image : patch;
  const int ox = region.x - support.x;
  const int oy = region.y - support.y;

  std::vector<LabelMap> maps;
  maps.reserve(params.scales.size() * params.epsilons.size());
  for (double sigma : params.scales) {
    const DtgResponse r = dtg_responses(src, sigma);
    const std::size_t first = maps.size();
    for (std::size_t e = 0; e < params.epsilons.size(); ++e) maps.emplace_back(region.w, region.h, params.labels());
    for (int y = 0; y < region.h; ++y) {
      for (int x = 0; x < region.w; ++x) {
        const int sx = x + ox;
        const int sy = y + oy;
        const double s00 = r.s00(sx, sy), s10 = r.s10(sx, sy), s01 = r.s01(sx, sy);
        const double s20 = r.s20(sx, sy), s11 = r.s11(sx, sy), s02 = r.s02(sx, sy);
        const Structure st = strongest_structure(s10, s01, s20, s11, s02);
        // The structured label does not depend on epsilon; compute it once.
        const int structured = params.oriented
                                   ? obif_label_from(static_cast<BifClass>(st.cls), s10, s01, s20, s11, s02)
                                   : st.cls - 1;
        for (std::size_t e = 0; e < params.epsilons.size(); ++e) {
          const bool flat = params.epsilons[e] * s00 >= st.value;
          maps[first + e](x, y) = static_cast<std::uint16_t>(flat ? 0 : structured);
        }
      }
    }
  }
  return maps;
}

std::vector<LabelMap> obif_label_maps(const RealGrid& image, const ObifParams& params) {
  return obif_label_maps(image, params, Roi{0, 0, image.width(), image.height()});
}

std::vector<double> obif_feature(std::span<const IntegralHistogram> histograms, const Roi& window,
                                 const ObifParams& params) {
  const std::size_t blocks = params.scales.size() * params.epsilons.size();
  if (histograms.size() != blocks) fail(ErrorKind::kValidation, "need one integral histogram per (scale, epsilon)");
  const auto labels = static_cast<std::size_t>(params.labels());
  std::vector<double> feature(blocks * labels);
  std::vector<std::uint32_t> counts(labels);
  const double area = static_cast<double>(window.area());
  for (std::size_t b = 0; b < blocks; ++b) {
    if (histograms[b].num_labels() != params.labels()) fail(ErrorKind::kValidation, "label count mismatch");
    histograms[b].query_into(window, counts);
    for (std::size_t l = 0; l < labels; ++l) feature[b * labels + l] = counts[l] / area;
  }
  return feature;
}

Grid<std::uint8_t> render_labels(const LabelMap& map) {
  Grid<std::uint8_t> out(map.width, map.height);
  const double scale = map.num_labels > 1 ? 255.0 / (map.num_labels - 1) : 0.0;
  for (std::size_t i = 0; i < map.labels.size(); ++i) {
    out.data()[i] = static_cast<std::uint8_t>(std::lround(map.labels[i] * scale));
  }
  return out;
}

}  // namespace cargoscan::obifs
