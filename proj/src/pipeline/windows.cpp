#include "cargoscan/pipeline/windows.hpp"

#include <algorithm>
#include <set>

#include "cargoscan/common/error.hpp"
#include "cargoscan/common/rng.hpp"

namespace cargoscan::pipeline {

std::string to_string(WindowShape s) { return s == WindowShape::kSquare ? "square" : "rectangular"; }

WindowShape parse_window_shape(const std::string& s) {
  if (s == "square") return WindowShape::kSquare;
  if (s == "rectangular") return WindowShape::kRectangular;
  fail(ErrorKind::kConfig, "unknown window shape '" + s + "'");
}

WindowSpec WindowSpec::square() { return {}; }

WindowSpec WindowSpec::rectangular() {
  WindowSpec s;
  s.shape = WindowShape::kRectangular;
  s.width = 1050;
  s.height = 350;
  return s;
}

void validate(const WindowSpec& spec) {
  if (spec.width < 1 || spec.height < 1) fail(ErrorKind::kConfig, "window dimensions must be positive");
  if (spec.stride_train < 1 || spec.stride_infer < 1) fail(ErrorKind::kConfig, "window strides must be positive");
}

void validate(const SamplerConfig& cfg) {
  if (!(cfg.t_roi > 0.0 && cfg.t_roi <= 1.0)) fail(ErrorKind::kConfig, "t_roi must be in (0, 1]");
  if (!(cfg.negative_per_positive > 0.0)) fail(ErrorKind::kConfig, "negative_per_positive must be positive");
}

std::vector<int> window_positions(int extent, int window, int stride) {
  if (extent < window) fail(ErrorKind::kSize, "image smaller than window");
  std::vector<int> out;
  for (int p = 0; p + window <= extent; p += stride) out.push_back(p);
  if (out.back() != extent - window) out.push_back(extent - window);
  return out;
}

std::vector<Roi> sample_windows(int width, int height, const WindowSpec& spec, SamplingMode mode) {
  validate(spec);
  const int stride = mode == SamplingMode::kTrain ? spec.stride_train : spec.stride_infer;
  const auto xs = window_positions(width, spec.width, stride);
  const auto ys = window_positions(height, spec.height, stride);
  std::vector<Roi> out;
  out.reserve(xs.size() * ys.size());
  for (int y : ys)
    for (int x : xs) out.push_back({x, y, spec.width, spec.height});
  return out;
}

double overlap_ratio(const Roi& window, const Roi& roi) {
  const Roi i = imagecore::intersect(window, roi);
  if (!i.valid()) return 0.0;
  return static_cast<double>(i.area()) / static_cast<double>(window.area());
}

Roi centered_window(const Roi& roi, const WindowSpec& spec, int width, int height) {
  if (width < spec.width || height < spec.height) fail(ErrorKind::kSize, "image smaller than window");
  // Twice the centre keeps the arithmetic integral.
  const int x = std::clamp((2 * roi.x + roi.w - spec.width) / 2, 0, width - spec.width);
  const int y = std::clamp((2 * roi.y + roi.h - spec.height) / 2, 0, height - spec.height);
  return {x, y, spec.width, spec.height};
}

PositiveWindows oversample_positives(int width, int height, std::span<const Roi> rois, const WindowSpec& spec,
                                     double t_roi) {
  if (rois.empty()) fail(ErrorKind::kValidation, "car image without ROIs");
  const auto grid = sample_windows(width, height, spec, SamplingMode::kTrain);
  std::set<Roi> chosen;
  PositiveWindows out;
  for (std::size_t r = 0; r < rois.size(); ++r) {
    if (!rois[r].valid()) fail(ErrorKind::kValidation, "invalid ROI " + imagecore::to_string(rois[r]));
    bool any = false;
    for (const Roi& w : grid) {
      if (overlap_ratio(w, rois[r]) > t_roi) {
        chosen.insert(w);
        any = true;
      }
    }
    if (!any) out.unmatched_rois.push_back(static_cast<int>(r));
    chosen.insert(centered_window(rois[r], spec, width, height));
  }
  out.windows.assign(chosen.begin(), chosen.end());
  return out;
}

std::vector<PoolPick> sample_pool(std::span<const std::size_t> sizes, std::size_t count, std::uint64_t seed) {
  std::size_t total = 0;
  for (std::size_t s : sizes) total += s;
  std::size_t needed = std::min(count, total);
  std::size_t remaining = total;
  Rng rng(seed);
  std::vector<PoolPick> out;
  out.reserve(needed);
  for (std::size_t i = 0; i < sizes.size(); ++i) {
    for (std::size_t k = 0; k < sizes[i]; ++k, --remaining) {
      if (needed == 0) return out;
      // Keep with probability needed / remaining.
      if (needed < remaining && rng.below(remaining) >= needed) continue;
      out.push_back({i, k});
      --needed;
    }
  }
  return out;
}

}  // namespace cargoscan::pipeline
