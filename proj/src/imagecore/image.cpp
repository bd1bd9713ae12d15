#include "cargoscan/imagecore/image.hpp"

#include <algorithm>
#include <cmath>

#include "cargoscan/common/error.hpp"

namespace cargoscan::imagecore {

Roi intersect(const Roi& a, const Roi& b) {
  const int x0 = std::max(a.x, b.x);
  const int y0 = std::max(a.y, b.y);
  const int x1 = std::min(a.right(), b.right());
  const int y1 = std::min(a.bottom(), b.bottom());
  if (x1 <= x0 || y1 <= y0) return {x0, y0, 0, 0};
  return {x0, y0, x1 - x0, y1 - y0};
}

Roi dilate_clip(const Roi& r, int margin, int width, int height) {
  const int x0 = std::max(0, r.x - margin);
  const int y0 = std::max(0, r.y - margin);
  const int x1 = std::min(width, r.right() + margin);
  const int y1 = std::min(height, r.bottom() + margin);
  return {x0, y0, std::max(0, x1 - x0), std::max(0, y1 - y0)};
}

std::string to_string(const Roi& r) {
  return std::to_string(r.x) + "," + std::to_string(r.y) + "," + std::to_string(r.w) + "," +
         std::to_string(r.h);
}

void validate(const TransmissionImage& img) {
  if (img.width() < 1 || img.height() < 1) fail(ErrorKind::kValidation, "image has no pixels");
  for (double v : img.pixels.values()) {
    if (!std::isfinite(v) || v < 0.0 || v > 1.0) {
      fail(ErrorKind::kValidation, "pixel value outside [0,1]");
    }
  }
}

RealGrid crop(const RealGrid& grid, const Roi& r) {
  if (!r.within(grid.width(), grid.height())) {
    fail(ErrorKind::kBounds, "crop " + to_string(r) + " outside grid");
  }
  RealGrid out(r.w, r.h);
  for (int y = 0; y < r.h; ++y) {
    const auto src = grid.row(r.y + y);
    std::copy_n(src.begin() + r.x, r.w, out.row(y).begin());
  }
  return out;
}

RealGrid mirror_horizontal(const RealGrid& grid) {
  RealGrid out(grid.width(), grid.height());
  for (int y = 0; y < grid.height(); ++y) {
    const auto src = grid.row(y);
    std::reverse_copy(src.begin(), src.end(), out.row(y).begin());
  }
  return out;
}

}  // namespace cargoscan::imagecore
