#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "cargoscan/imagecore/image.hpp"

namespace cargoscan::pipeline {

using imagecore::Roi;

enum class WindowShape { kSquare, kRectangular };

std::string to_string(WindowShape s);
WindowShape parse_window_shape(const std::string& s);

struct WindowSpec {
  WindowShape shape = WindowShape::kSquare;
  int width = 512;
  int height = 512;
  int stride_train = 32;
  int stride_infer = 64;

  static WindowSpec square();       // 512 x 512
  static WindowSpec rectangular();  // 1050 wide x 350 tall
  double default_t_roi() const noexcept { return shape == WindowShape::kSquare ? 0.5 : 0.65; }
  bool operator==(const WindowSpec&) const = default;
};

void validate(const WindowSpec& spec);

enum class SamplingMode { kTrain, kInfer };

// 0, s, 2s, ... plus a final flush position extent - window when the grid
// does not land on it.
std::vector<int> window_positions(int extent, int window, int stride);

std::vector<Roi> sample_windows(int width, int height, const WindowSpec& spec, SamplingMode mode);

// |window & roi| / |window|.
double overlap_ratio(const Roi& window, const Roi& roi);

struct SamplerConfig {
  double t_roi = 0.5;
  double negative_per_positive = 1.0;
  std::uint64_t seed = 1;
  bool operator==(const SamplerConfig&) const = default;
};

void validate(const SamplerConfig& cfg);

// Window of the WindowSpec size centred on the ROI, shifted to fit the image.
Roi centered_window(const Roi& roi, const WindowSpec& spec, int width, int height);

struct PositiveWindows {
  std::vector<Roi> windows;          // sorted, unique
  std::vector<int> unmatched_rois;   // ROIs no grid window passed
};

PositiveWindows oversample_positives(int width, int height, std::span<const Roi> rois, const WindowSpec& spec,
                                     double t_roi);

// Uniform draw of `count` items without replacement from a pool laid out as
// consecutive per-image blocks; returns (image, index) pairs in pool order.
struct PoolPick {
  std::size_t image;
  std::size_t index;
  bool operator==(const PoolPick&) const = default;
};
std::vector<PoolPick> sample_pool(std::span<const std::size_t> sizes, std::size_t count, std::uint64_t seed);

}  // namespace cargoscan::pipeline
