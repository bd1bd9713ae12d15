#pragma once

#include <string>

#include "cargoscan/common/grid.hpp"

namespace cargoscan::imagecore {

// Axis-aligned rectangle [x, x + w) x [y, y + h) in pixel coordinates.
struct Roi {
  int x = 0;
  int y = 0;
  int w = 0;
  int h = 0;

  int right() const noexcept { return x + w; }
  int bottom() const noexcept { return y + h; }
  long long area() const noexcept { return static_cast<long long>(w) * h; }
  bool valid() const noexcept { return w > 0 && h > 0; }
  bool contains(int px, int py) const noexcept {
    return px >= x && px < right() && py >= y && py < bottom();
  }
  bool within(int width, int height) const noexcept {
    return x >= 0 && y >= 0 && w > 0 && h > 0 && right() <= width && bottom() <= height;
  }

  bool operator==(const Roi&) const = default;
  auto operator<=>(const Roi&) const = default;
};

Roi intersect(const Roi& a, const Roi& b);
// Grows r by `margin` on every side and clips it to [0,width) x [0,height).
Roi dilate_clip(const Roi& r, int margin, int width, int height);
std::string to_string(const Roi& r);

// Air-normalized transmission map: 1.0 is unattenuated air, 0.0 is opaque.
struct TransmissionImage {
  RealGrid pixels;
  double pixel_pitch_mm = 6.0;

  TransmissionImage() = default;
  TransmissionImage(int width, int height, double fill = 1.0)
      : pixels(width, height, fill) {}
  explicit TransmissionImage(RealGrid grid, double pitch_mm = 6.0)
      : pixels(std::move(grid)), pixel_pitch_mm(pitch_mm) {}

  int width() const noexcept { return pixels.width(); }
  int height() const noexcept { return pixels.height(); }
  double operator()(int x, int y) const { return pixels(x, y); }
  double& operator()(int x, int y) { return pixels(x, y); }
  Roi bounds() const noexcept { return {0, 0, width(), height()}; }
};

// Throws kValidation unless the image is non-empty with finite values in [0,1].
void validate(const TransmissionImage& img);

RealGrid crop(const RealGrid& grid, const Roi& r);

// Mirror left-right (x -> width - 1 - x).
RealGrid mirror_horizontal(const RealGrid& grid);

}  // namespace cargoscan::imagecore
