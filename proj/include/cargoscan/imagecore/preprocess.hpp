#pragma once

#include <vector>

#include "cargoscan/imagecore/image.hpp"

namespace cargoscan::imagecore {

struct PreprocessConfig {
  // A column is a misfire stripe when its fraction of exact-zero pixels
  // exceeds this value.
  double stripe_zero_fraction = 0.99;
  // Despeckle flags |v - median| > max(despeckle_threshold * MAD, 0.1).
  double despeckle_threshold = 5.0;
  // Rows at the top of the image that see only air.
  int air_band_rows = 16;
  double log_floor = 1e-4;
  bool apply_log = false;

  bool operator==(const PreprocessConfig&) const = default;
};

void validate(const PreprocessConfig& cfg);

struct StripeRemoval {
  TransmissionImage image;
  std::vector<int> removed_columns;  // indices in the input image
};

StripeRemoval remove_black_stripes_detailed(const TransmissionImage& img,
                                            const PreprocessConfig& cfg);
TransmissionImage remove_black_stripes(const TransmissionImage& img, const PreprocessConfig& cfg);

struct ColumnNormalization {
  TransmissionImage image;
  std::vector<int> flagged_columns;  // air reference was zero; left unscaled
};

// The air reference of a column is the upper median (sorted element n/2) of
// its top air_band_rows pixels. Pixels are divided by it and clamped to
// [0,1], so at least half of every unflagged air band becomes exactly 1.0.
ColumnNormalization normalize_columns_detailed(const TransmissionImage& img,
                                               const PreprocessConfig& cfg);
TransmissionImage normalize_columns(const TransmissionImage& img, const PreprocessConfig& cfg);

TransmissionImage despeckle(const TransmissionImage& img, const PreprocessConfig& cfg);

// -ln(clamp(v, floor, 1)) / -ln(floor): air -> 0, floor and below -> 1.
TransmissionImage log_transform(const TransmissionImage& img, const PreprocessConfig& cfg);
double log_attenuation(double v, double log_floor) noexcept;

struct PreprocessResult {
  TransmissionImage image;
  std::vector<int> removed_columns;
  std::vector<int> flagged_columns;
};

// Stripe removal -> column normalization -> despeckle, then the log
// transform when cfg.apply_log is set.
PreprocessResult preprocess(const TransmissionImage& img, const PreprocessConfig& cfg);

// Median with the usual convention (mean of the two middle elements for even
// counts). Reorders `values`.
double median_inplace(std::vector<double>& values);

}  // namespace cargoscan::imagecore
