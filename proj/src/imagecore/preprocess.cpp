#include "cargoscan/imagecore/preprocess.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#include "cargoscan/common/error.hpp"

namespace cargoscan::imagecore {

namespace {

constexpr double kDespeckleFloor = 0.1;

// Median of a small buffer using the mean-of-middles convention.
double small_median(double* v, int n) {
  std::sort(v, v + n);
  return (n % 2 == 1) ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace

void validate(const PreprocessConfig& cfg) {
  if (!(cfg.stripe_zero_fraction >= 0.0 && cfg.stripe_zero_fraction <= 1.0)) {
    fail(ErrorKind::kConfig, "stripe_zero_fraction must lie in [0,1]");
  }
  if (!(cfg.log_floor > 0.0 && cfg.log_floor < 1.0)) {
    fail(ErrorKind::kConfig, "log_floor must lie in (0,1)");
  }
  if (cfg.air_band_rows < 1) fail(ErrorKind::kConfig, "air_band_rows must be >= 1");
  if (!(cfg.despeckle_threshold >= 0.0)) fail(ErrorKind::kConfig, "despeckle_threshold must be >= 0");
}

double median_inplace(std::vector<double>& values) {
  if (values.empty()) fail(ErrorKind::kInput, "median of empty set");
  return small_median(values.data(), static_cast<int>(values.size()));
}

StripeRemoval remove_black_stripes_detailed(const TransmissionImage& img,
                                            const PreprocessConfig& cfg) {
  const int w = img.width();
  const int h = img.height();
  std::vector<int> zeros(static_cast<std::size_t>(w), 0);
  for (int y = 0; y < h; ++y) {
    const auto row = img.pixels.row(y);
    for (int x = 0; x < w; ++x) zeros[static_cast<std::size_t>(x)] += row[x] == 0.0 ? 1 : 0;
  }
  StripeRemoval result;
  std::vector<int> keep;
  for (int x = 0; x < w; ++x) {
    const double fraction = static_cast<double>(zeros[static_cast<std::size_t>(x)]) / h;
    if (fraction > cfg.stripe_zero_fraction) {
      result.removed_columns.push_back(x);
    } else {
      keep.push_back(x);
    }
  }
  if (keep.empty()) fail(ErrorKind::kEmptyImage, "every column is a black stripe");
  RealGrid out(static_cast<int>(keep.size()), h);
  for (int y = 0; y < h; ++y) {
    const auto src = img.pixels.row(y);
    auto dst = out.row(y);
    for (std::size_t i = 0; i < keep.size(); ++i) dst[i] = src[keep[i]];
  }
  result.image = TransmissionImage(std::move(out), img.pixel_pitch_mm);
  return result;
}

TransmissionImage remove_black_stripes(const TransmissionImage& img, const PreprocessConfig& cfg) {
  return remove_black_stripes_detailed(img, cfg).image;
}

ColumnNormalization normalize_columns_detailed(const TransmissionImage& img,
                                               const PreprocessConfig& cfg) {
  const int w = img.width();
  const int h = img.height();
  if (h <= cfg.air_band_rows) {
    fail(ErrorKind::kValidation, "image height must exceed air_band_rows");
  }
  ColumnNormalization result;
  result.image = img;
  std::vector<double> band(static_cast<std::size_t>(cfg.air_band_rows));
  for (int x = 0; x < w; ++x) {
    for (int y = 0; y < cfg.air_band_rows; ++y) band[static_cast<std::size_t>(y)] = img(x, y);
    const auto mid = band.begin() + static_cast<std::ptrdiff_t>(band.size() / 2);
    std::nth_element(band.begin(), mid, band.end());
    const double air = *mid;
    if (air <= 0.0) {
      result.flagged_columns.push_back(x);
      continue;
    }
    for (int y = 0; y < h; ++y) {
      double& v = result.image(x, y);
      v = std::clamp(v / air, 0.0, 1.0);
    }
  }
  return result;
}

TransmissionImage normalize_columns(const TransmissionImage& img, const PreprocessConfig& cfg) {
  return normalize_columns_detailed(img, cfg).image;
}

TransmissionImage despeckle(const TransmissionImage& img, const PreprocessConfig& cfg) {
  const int w = img.width();
  const int h = img.height();
  TransmissionImage out = img;
  std::array<double, 9> nb{};
  std::array<double, 9> dev{};
  for (int y = 0; y < h; ++y) {
    const int y0 = std::max(0, y - 1);
    const int y1 = std::min(h - 1, y + 1);
    for (int x = 0; x < w; ++x) {
      const int x0 = std::max(0, x - 1);
      const int x1 = std::min(w - 1, x + 1);
      int n = 0;
      for (int yy = y0; yy <= y1; ++yy) {
        const auto row = img.pixels.row(yy);
        for (int xx = x0; xx <= x1; ++xx) nb[static_cast<std::size_t>(n++)] = row[xx];
      }
      const double v = img(x, y);
      const double med = small_median(nb.data(), n);
      const double d = std::abs(v - med);
      if (!(d > kDespeckleFloor)) continue;
      for (int i = 0; i < n; ++i) dev[static_cast<std::size_t>(i)] = std::abs(nb[static_cast<std::size_t>(i)] - med);
      const double mad = small_median(dev.data(), n);
      if (d > std::max(cfg.despeckle_threshold * mad, kDespeckleFloor)) out(x, y) = med;
    }
  }
  return out;
}

double log_attenuation(double v, double log_floor) noexcept {
  const double c = std::clamp(v, log_floor, 1.0);
  const double r = std::log(c) / std::log(log_floor);
  return r == 0.0 ? 0.0 : r;  // no negative zero for air
}

TransmissionImage log_transform(const TransmissionImage& img, const PreprocessConfig& cfg) {
  validate(cfg);
  TransmissionImage out = img;
  for (double& v : out.pixels.values()) v = log_attenuation(v, cfg.log_floor);
  return out;
}

PreprocessResult preprocess(const TransmissionImage& img, const PreprocessConfig& cfg) {
  validate(cfg);
  PreprocessResult result;
  StripeRemoval stripes = remove_black_stripes_detailed(img, cfg);
  result.removed_columns = std::move(stripes.removed_columns);
  ColumnNormalization norm = normalize_columns_detailed(stripes.image, cfg);
  result.flagged_columns = std::move(norm.flagged_columns);
  result.image = despeckle(norm.image, cfg);
  if (cfg.apply_log) result.image = log_transform(result.image, cfg);
  return result;
}

}  // namespace cargoscan::imagecore
