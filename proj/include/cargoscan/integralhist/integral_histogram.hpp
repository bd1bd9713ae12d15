#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "cargoscan/imagecore/image.hpp"

namespace cargoscan::integralhist {

using imagecore::Roi;

// Quantized label image, one label in [0, num_labels) per pixel.
struct LabelMap {
  int width = 0;
  int height = 0;
  int num_labels = 0;
  std::vector<std::uint16_t> labels;

  LabelMap() = default;
  LabelMap(int w, int h, int l) : width(w), height(h), num_labels(l),
      labels(static_cast<std::size_t>(w) * static_cast<std::size_t>(h), 0) {}

  std::uint16_t operator()(int x, int y) const {
    return labels[static_cast<std::size_t>(y) * static_cast<std::size_t>(width) + static_cast<std::size_t>(x)];
  }
  std::uint16_t& operator()(int x, int y) {
    return labels[static_cast<std::size_t>(y) * static_cast<std::size_t>(width) + static_cast<std::size_t>(x)];
  }
  bool operator==(const LabelMap&) const = default;
};

void validate(const LabelMap& map);

// Cumulative per-label counts C(x, y, l) = #{pixels (u, v) : u < x, v < y,
// label l}. The full form stores every x in [0, width] and y in [0, height];
// the lattice form stores only caller-chosen coordinates, which is enough for
// any rectangle whose edges lie on the lattice and needs far less memory for
// large images with many labels.
class IntegralHistogram {
 public:
  static IntegralHistogram build(const LabelMap& map);
  static IntegralHistogram build(const LabelMap& map, std::vector<int> xs, std::vector<int> ys);

  int num_labels() const noexcept { return num_labels_; }
  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  const std::vector<int>& xs() const noexcept { return xs_; }
  const std::vector<int>& ys() const noexcept { return ys_; }

  // Histogram of the labels inside rect via 4-corner inclusion-exclusion.
  // Throws kBounds when rect is empty, leaves the map, or has an edge that is
  // not on the lattice.
  std::vector<std::uint32_t> query(const Roi& rect) const;
  void query_into(const Roi& rect, std::span<std::uint32_t> out) const;

  // Cumulative count at lattice coordinate (x, y); both must be on the lattice.
  std::uint32_t cumulative(int x, int y, int label) const;

 private:
  int lattice_x(int x) const;
  int lattice_y(int y) const;
  const std::uint32_t* corner(int ix, int iy) const {
    return counts_.data() + (static_cast<std::size_t>(iy) * xs_.size() + static_cast<std::size_t>(ix)) *
                                static_cast<std::size_t>(num_labels_);
  }

  int width_ = 0;
  int height_ = 0;
  int num_labels_ = 0;
  std::vector<int> xs_;
  std::vector<int> ys_;
  // Coordinate -> lattice index lookup (-1 when absent), sized width+1 / height+1.
  std::vector<int> x_index_;
  std::vector<int> y_index_;
  std::vector<std::uint32_t> counts_;
};

// Direct count of labels inside rect; the reference for query().
std::vector<std::uint32_t> brute_force_histogram(const LabelMap& map, const Roi& rect);

// Uniform 256-bin quantization floor(v * 256) clamped to [0, 255].
std::uint16_t quantize256(double v) noexcept;

}  // namespace cargoscan::integralhist
