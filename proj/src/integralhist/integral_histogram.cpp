#include "cargoscan/integralhist/integral_histogram.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "cargoscan/common/error.hpp"

namespace cargoscan::integralhist {

void validate(const LabelMap& map) {
  if (map.width < 1 || map.height < 1) fail(ErrorKind::kValidation, "label map has no pixels");
  if (map.num_labels < 1 || map.num_labels > 65536) fail(ErrorKind::kValidation, "bad label count");
  if (map.labels.size() != static_cast<std::size_t>(map.width) * static_cast<std::size_t>(map.height)) {
    fail(ErrorKind::kValidation, "label map size mismatch");
  }
  for (auto l : map.labels) {
    if (l >= map.num_labels) fail(ErrorKind::kValidation, "label out of range");
  }
}

IntegralHistogram IntegralHistogram::build(const LabelMap& map) {
  std::vector<int> xs(static_cast<std::size_t>(map.width) + 1);
  std::vector<int> ys(static_cast<std::size_t>(map.height) + 1);
  std::iota(xs.begin(), xs.end(), 0);
  std::iota(ys.begin(), ys.end(), 0);
  return build(map, std::move(xs), std::move(ys));
}

IntegralHistogram IntegralHistogram::build(const LabelMap& map, std::vector<int> xs,
                                           std::vector<int> ys) {
  validate(map);
  std::sort(xs.begin(), xs.end());
  xs.erase(std::unique(xs.begin(), xs.end()), xs.end());
  std::sort(ys.begin(), ys.end());
  ys.erase(std::unique(ys.begin(), ys.end()), ys.end());
  if (xs.empty() || ys.empty() || xs.front() < 0 || ys.front() < 0 || xs.back() > map.width ||
      ys.back() > map.height) {
    fail(ErrorKind::kBounds, "lattice coordinates outside the label map");
  }

  IntegralHistogram ih;
  ih.width_ = map.width;
  ih.height_ = map.height;
  ih.num_labels_ = map.num_labels;
  ih.xs_ = std::move(xs);
  ih.ys_ = std::move(ys);
  ih.x_index_.assign(static_cast<std::size_t>(map.width) + 1, -1);
  ih.y_index_.assign(static_cast<std::size_t>(map.height) + 1, -1);
  for (std::size_t i = 0; i < ih.xs_.size(); ++i) ih.x_index_[static_cast<std::size_t>(ih.xs_[i])] = static_cast<int>(i);
  for (std::size_t j = 0; j < ih.ys_.size(); ++j) ih.y_index_[static_cast<std::size_t>(ih.ys_[j])] = static_cast<int>(j);

  const std::size_t nx = ih.xs_.size();
  const std::size_t ny = ih.ys_.size();
  const std::size_t nl = static_cast<std::size_t>(map.num_labels);

  // Pixel column u contributes to every lattice x strictly greater than u;
  // band_x[u] is the first such lattice index (nx when none).
  std::vector<std::size_t> band_x(static_cast<std::size_t>(map.width));
  for (int u = 0; u < map.width; ++u) {
    band_x[static_cast<std::size_t>(u)] = static_cast<std::size_t>(
        std::upper_bound(ih.xs_.begin(), ih.xs_.end(), u) - ih.xs_.begin());
  }

  // Cell counts: counts_[(j * nx + i) * L + l] first holds pixels whose first
  // contributing lattice point is (i, j), then gets 2-D prefix-summed.
  ih.counts_.assign(nx * ny * nl, 0);
  for (int v = 0; v < map.height; ++v) {
    const auto by = static_cast<std::size_t>(
        std::upper_bound(ih.ys_.begin(), ih.ys_.end(), v) - ih.ys_.begin());
    if (by >= ny) break;
    const std::uint16_t* row = map.labels.data() + static_cast<std::size_t>(v) * static_cast<std::size_t>(map.width);
    std::uint32_t* base = ih.counts_.data() + by * nx * nl;
    for (int u = 0; u < map.width; ++u) {
      const std::size_t bx = band_x[static_cast<std::size_t>(u)];
      if (bx >= nx) break;
      ++base[bx * nl + row[u]];
    }
  }
  for (std::size_t j = 0; j < ny; ++j) {
    for (std::size_t i = 0; i < nx; ++i) {
      std::uint32_t* cell = ih.counts_.data() + (j * nx + i) * nl;
      const std::uint32_t* left = i > 0 ? cell - nl : nullptr;
      const std::uint32_t* up = j > 0 ? cell - nx * nl : nullptr;
      const std::uint32_t* diag = (i > 0 && j > 0) ? cell - nx * nl - nl : nullptr;
      for (std::size_t l = 0; l < nl; ++l) {
        std::uint32_t c = cell[l];
        if (left) c += left[l];
        if (up) c += up[l];
        if (diag) c -= diag[l];
        cell[l] = c;
      }
    }
  }
  return ih;
}

int IntegralHistogram::lattice_x(int x) const {
  if (x < 0 || x > width_) return -1;
  return x_index_[static_cast<std::size_t>(x)];
}

int IntegralHistogram::lattice_y(int y) const {
  if (y < 0 || y > height_) return -1;
  return y_index_[static_cast<std::size_t>(y)];
}

std::uint32_t IntegralHistogram::cumulative(int x, int y, int label) const {
  const int ix = lattice_x(x);
  const int iy = lattice_y(y);
  if (ix < 0 || iy < 0 || label < 0 || label >= num_labels_) {
    fail(ErrorKind::kBounds, "cumulative lookup off the lattice");
  }
  return corner(ix, iy)[label];
}

void IntegralHistogram::query_into(const Roi& rect, std::span<std::uint32_t> out) const {
  if (!rect.within(width_, height_)) {
    fail(ErrorKind::kBounds, "query rect " + imagecore::to_string(rect) + " outside map");
  }
  const int ix0 = lattice_x(rect.x);
  const int ix1 = lattice_x(rect.right());
  const int iy0 = lattice_y(rect.y);
  const int iy1 = lattice_y(rect.bottom());
  if (ix0 < 0 || ix1 < 0 || iy0 < 0 || iy1 < 0) {
    fail(ErrorKind::kBounds, "query rect " + imagecore::to_string(rect) + " not on lattice");
  }
  if (out.size() != static_cast<std::size_t>(num_labels_)) {
    fail(ErrorKind::kValidation, "histogram buffer has wrong length");
  }
  const std::uint32_t* a = corner(ix0, iy0);
  const std::uint32_t* b = corner(ix1, iy0);
  const std::uint32_t* c = corner(ix0, iy1);
  const std::uint32_t* d = corner(ix1, iy1);
  for (int l = 0; l < num_labels_; ++l) out[static_cast<std::size_t>(l)] = d[l] - b[l] - c[l] + a[l];
}

std::vector<std::uint32_t> IntegralHistogram::query(const Roi& rect) const {
  std::vector<std::uint32_t> out(static_cast<std::size_t>(num_labels_));
  query_into(rect, out);
  return out;
}

std::vector<std::uint32_t> brute_force_histogram(const LabelMap& map, const Roi& rect) {
  if (!rect.within(map.width, map.height)) fail(ErrorKind::kBounds, "rect outside map");
  std::vector<std::uint32_t> h(static_cast<std::size_t>(map.num_labels), 0);
  for (int y = rect.y; y < rect.bottom(); ++y) {
    for (int x = rect.x; x < rect.right(); ++x) ++h[map(x, y)];
  }
  return h;
}

std::uint16_t quantize256(double v) noexcept {
  const double q = std::floor(v * 256.0);
  if (!(q > 0.0)) return 0;
  return q >= 255.0 ? 255 : static_cast<std::uint16_t>(q);
}

}  // namespace cargoscan::integralhist
