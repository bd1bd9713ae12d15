#include "cargoscan/imagecore/filter.hpp"

#include <cmath>

#include "cargoscan/common/error.hpp"

namespace cargoscan::imagecore {

int reflect_index(int i, int n) noexcept {
  if (n == 1) return 0;
  const int period = 2 * n;
  i %= period;
  if (i < 0) i += period;
  return i < n ? i : period - 1 - i;
}

Kernel1D gaussian_kernel(double sigma, int radius) {
  if (!(sigma > 0.0)) fail(ErrorKind::kValidation, "gaussian sigma must be positive");
  Kernel1D k;
  k.taps.resize(static_cast<std::size_t>(radius) + 1);
  double sum = 0.0;
  for (int t = 0; t <= radius; ++t) {
    const double v = std::exp(-0.5 * t * t / (sigma * sigma));
    k.taps[static_cast<std::size_t>(t)] = v;
    sum += t == 0 ? v : 2.0 * v;
  }
  for (double& v : k.taps) v /= sum;
  return k;
}

RealGrid convolve_rows(const RealGrid& in, const Kernel1D& k) {
  const int w = in.width();
  const int h = in.height();
  const int r = k.radius();
  RealGrid out(w, h);
  std::vector<double> buf(static_cast<std::size_t>(w + 2 * r));
  const bool symmetric = k.parity == Kernel1D::Parity::kSymmetric;
  for (int y = 0; y < h; ++y) {
    const auto src = in.row(y);
    for (int i = -r; i < w + r; ++i) buf[static_cast<std::size_t>(i + r)] = src[reflect_index(i, w)];
    double* __restrict dst = out.row(y).data();
    const double* __restrict b = buf.data() + r;
    const double k0 = symmetric ? k.taps[0] : 0.0;
    for (int x = 0; x < w; ++x) dst[x] = k0 * b[x];
    for (int t = 1; t <= r; ++t) {
      const double c = k.taps[static_cast<std::size_t>(t)];
      const double* __restrict lo = b - t;
      const double* __restrict hi = b + t;
      if (symmetric) {
        for (int x = 0; x < w; ++x) dst[x] += c * (lo[x] + hi[x]);
      } else {
        for (int x = 0; x < w; ++x) dst[x] += c * (lo[x] - hi[x]);
      }
    }
  }
  return out;
}

RealGrid convolve_cols(const RealGrid& in, const Kernel1D& k) {
  const int w = in.width();
  const int h = in.height();
  const int r = k.radius();
  RealGrid out(w, h);
  const bool symmetric = k.parity == Kernel1D::Parity::kSymmetric;
  const double k0 = symmetric ? k.taps[0] : 0.0;
  for (int y = 0; y < h; ++y) {
    double* __restrict dst = out.row(y).data();
    const double* __restrict mid = in.row(y).data();
    for (int x = 0; x < w; ++x) dst[x] = k0 * mid[x];
    for (int t = 1; t <= r; ++t) {
      const double c = k.taps[static_cast<std::size_t>(t)];
      const double* __restrict lo = in.row(reflect_index(y - t, h)).data();
      const double* __restrict hi = in.row(reflect_index(y + t, h)).data();
      if (symmetric) {
        for (int x = 0; x < w; ++x) dst[x] += c * (lo[x] + hi[x]);
      } else {
        for (int x = 0; x < w; ++x) dst[x] += c * (lo[x] - hi[x]);
      }
    }
  }
  return out;
}

int blur_radius(double sigma) { return static_cast<int>(std::ceil(3.0 * sigma)); }

RealGrid gaussian_blur(const RealGrid& in, double sigma) {
  const Kernel1D k = gaussian_kernel(sigma, blur_radius(sigma));
  return convolve_cols(convolve_rows(in, k), k);
}

TransmissionImage gaussian_blur(const TransmissionImage& img, double sigma) {
  return TransmissionImage(gaussian_blur(img.pixels, sigma), img.pixel_pitch_mm);
}

}  // namespace cargoscan::imagecore
