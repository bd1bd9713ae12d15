#pragma once

#include <vector>

#include "cargoscan/common/grid.hpp"
#include "cargoscan/imagecore/image.hpp"

namespace cargoscan::imagecore {

// Half-sample symmetric reflection ("cba|abc...cba"), periodic beyond 2n.
int reflect_index(int i, int n) noexcept;

// 1-D kernel with known parity. taps[t] holds k(t) for t in [0, radius]; the
// negative half is k(-t) = k(t) (symmetric) or -k(t) (antisymmetric).
struct Kernel1D {
  enum class Parity { kSymmetric, kAntisymmetric };
  std::vector<double> taps;
  Parity parity = Parity::kSymmetric;

  int radius() const noexcept { return static_cast<int>(taps.size()) - 1; }
  double at(int t) const noexcept {
    const int a = t < 0 ? -t : t;
    const double v = taps[static_cast<std::size_t>(a)];
    return (t < 0 && parity == Parity::kAntisymmetric) ? -v : v;
  }
};

// Sampled Gaussian, L1-normalized, truncated at `radius`.
Kernel1D gaussian_kernel(double sigma, int radius);

// Convolution out(x) = sum_t k(t) in(x - t) along rows (x) or columns (y),
// reflective borders. Each output sample is computed with the same operation
// order regardless of the grid extent, so convolving a crop reproduces the
// full-image result bit-for-bit wherever the kernel support lies inside the
// crop.
RealGrid convolve_rows(const RealGrid& in, const Kernel1D& k);
RealGrid convolve_cols(const RealGrid& in, const Kernel1D& k);

RealGrid gaussian_blur(const RealGrid& in, double sigma);
TransmissionImage gaussian_blur(const TransmissionImage& img, double sigma);

// Truncation radius used by gaussian_blur: ceil(3 sigma).
int blur_radius(double sigma);

}  // namespace cargoscan::imagecore
