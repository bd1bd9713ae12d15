#include "cargoscan/pipeline/scoring.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "cargoscan/common/error.hpp"
#include "cargoscan/common/parallel.hpp"
#include "cargoscan/imagecore/preprocess.hpp"
#include "cargoscan/integralhist/integral_histogram.hpp"

namespace cargoscan::pipeline {

namespace {

RealGrid to_feature_domain(const imagecore::TransmissionImage& t, const imagecore::PreprocessConfig& cfg) {
  if (!cfg.apply_log) return t.pixels;
  return imagecore::log_transform(t, cfg).pixels;
}

std::vector<int> sorted_unique(std::vector<int> v) {
  std::sort(v.begin(), v.end());
  v.erase(std::unique(v.begin(), v.end()), v.end());
  return v;
}

}  // namespace

ImageVerdict make_verdict(std::vector<WindowScore> windows, double t_car) {
  if (windows.empty()) fail(ErrorKind::kValidation, "verdict needs at least one window");
  ImageVerdict v;
  v.t_car = t_car;
  v.p_image = windows.front().score;
  for (const auto& w : windows) v.p_image = std::max(v.p_image, w.score);
  v.car = v.p_image >= t_car;
  v.windows = std::move(windows);
  return v;
}

RealGrid prepare_image(const imagecore::TransmissionImage& raw, const ModelBundle& bundle) {
  return imagecore::preprocess(raw, bundle.preprocess).image.pixels;
}

ImageVerdict score_image(const RealGrid& image, const ModelBundle& bundle, int jobs) {
  validate(bundle);
  const auto windows = sample_windows(image.width(), image.height(), bundle.windows, SamplingMode::kInfer);
  const WindowFeaturizer f(image, bundle.features, bundle.vocabulary ? &*bundle.vocabulary : nullptr, windows, jobs);
  const auto d = static_cast<std::size_t>(f.dimension());
  std::vector<WindowScore> scores(windows.size());
  parallel_for(windows.size(), jobs, [&](std::size_t i) {
    std::vector<float> x(d);
    f.extract(windows[i], x);
    scores[i] = {windows[i], forest::score(bundle.forest, x)};
  });
  return make_verdict(std::move(scores), bundle.t_car);
}

ImageVerdict classify_raw(const imagecore::TransmissionImage& raw, const ModelBundle& bundle, int jobs) {
  return score_image(prepare_image(raw, bundle), bundle, jobs);
}

std::vector<HeatmapCell> heatmap_cells(const ImageVerdict& verdict) {
  std::vector<int> xs, ys;
  for (const auto& w : verdict.windows) {
    xs.push_back(w.window.x);
    xs.push_back(w.window.right());
    ys.push_back(w.window.y);
    ys.push_back(w.window.bottom());
  }
  xs = sorted_unique(std::move(xs));
  ys = sorted_unique(std::move(ys));
  std::vector<HeatmapCell> cells;
  for (std::size_t j = 0; j + 1 < ys.size(); ++j) {
    for (std::size_t i = 0; i + 1 < xs.size(); ++i) {
      double sum = 0.0;
      int n = 0;
      for (const auto& w : verdict.windows) {
        if (w.window.contains(xs[i], ys[j])) {
          sum += w.score;
          ++n;
        }
      }
      if (n > 0) cells.push_back({xs[i], xs[i + 1], ys[j], ys[j + 1], sum / n});
    }
  }
  return cells;
}

RealGrid heatmap(const ImageVerdict& verdict, int width, int height) {
  RealGrid map(width, height, 0.0);
  for (const auto& c : heatmap_cells(verdict)) {
    for (int y = std::max(c.y0, 0); y < std::min(c.y1, height); ++y) {
      for (int x = std::max(c.x0, 0); x < std::min(c.x1, width); ++x) map(x, y) = c.value;
    }
  }
  return map;
}

Grid<std::uint8_t> heatmap_to_gray(const RealGrid& map) {
  Grid<std::uint8_t> out(map.width(), map.height());
  for (std::size_t i = 0; i < map.size(); ++i) {
    out.data()[i] = static_cast<std::uint8_t>(std::lround(std::clamp(map.data()[i], 0.0, 1.0) * 255.0));
  }
  return out;
}

std::string format_heatmap_cells(const std::vector<HeatmapCell>& cells, int width, int height) {
  std::ostringstream os;
  os.precision(17);
  os << "# heatmap " << width << "x" << height << "; uncovered pixels are 0\n# x0 x1 y0 y1 value\n";
  for (const auto& c : cells) os << c.x0 << ' ' << c.x1 << ' ' << c.y0 << ' ' << c.y1 << ' ' << c.value << '\n';
  return os.str();
}

ObscurationScorer::ObscurationScorer(imagecore::TransmissionImage transmission, const ModelBundle& bundle, int jobs)
    : bundle_(bundle), jobs_(jobs), transmission_(std::move(transmission)) {
  validate(bundle_);
  imagecore::validate(transmission_);
  feature_image_ = to_feature_domain(transmission_, bundle_.preprocess);
  windows_ = sample_windows(transmission_.width(), transmission_.height(), bundle_.windows, SamplingMode::kInfer);
  scores_.assign(windows_.size(), 0.0);
  if (!is_histogram_family(bundle_.features.family)) {
    full_rescore();
    return;
  }
  maps_ = label_maps(feature_image_, bundle_.features, transmission_.bounds(), jobs_);
  int offset = 0;
  for (const auto& m : maps_) {
    offsets_.push_back(offset);
    offset += m.num_labels;
  }
  const auto d = static_cast<std::size_t>(offset);
  counts_.assign(windows_.size() * d, 0);
  // Window histograms from full-lattice integral histograms of each map.
  std::vector<int> xs, ys;
  for (const Roi& w : windows_) {
    xs.insert(xs.end(), {w.x, w.right()});
    ys.insert(ys.end(), {w.y, w.bottom()});
  }
  for (std::size_t m = 0; m < maps_.size(); ++m) {
    const auto ih = integralhist::IntegralHistogram::build(maps_[m], xs, ys);
    for (std::size_t w = 0; w < windows_.size(); ++w) {
      ih.query_into(windows_[w], std::span<std::uint32_t>(counts_.data() + w * d + offsets_[m],
                                                          static_cast<std::size_t>(maps_[m].num_labels)));
    }
  }
  parallel_for(windows_.size(), jobs_, [&](std::size_t w) { rescore(w); });
}

void ObscurationScorer::rescore(std::size_t w) {
  const auto d = counts_.size() / windows_.size();
  const double area = static_cast<double>(windows_[w].area());
  std::vector<float> x(d);
  const std::uint32_t* c = counts_.data() + w * d;
  for (std::size_t i = 0; i < d; ++i) x[i] = static_cast<float>(c[i] / area);
  scores_[w] = forest::score(bundle_.forest, x);
}

void ObscurationScorer::full_rescore() {
  const auto v = score_image(feature_image_, bundle_, jobs_);
  for (std::size_t i = 0; i < windows_.size(); ++i) scores_[i] = v.windows[i].score;
}

void ObscurationScorer::multiply(const RealGrid& patch, int x, int y) {
  const Roi fp{x, y, patch.width(), patch.height()};
  if (!fp.within(transmission_.width(), transmission_.height())) {
    fail(ErrorKind::kPlacement, "object footprint " + imagecore::to_string(fp) + " leaves the image");
  }
  for (int j = 0; j < fp.h; ++j) {
    for (int i = 0; i < fp.w; ++i) transmission_(x + i, y + j) *= patch(i, j);
  }
  // Only pixels of the footprint change in the feature domain.
  const RealGrid fresh = to_feature_domain(
      imagecore::TransmissionImage(imagecore::crop(transmission_.pixels, fp), transmission_.pixel_pitch_mm),
      bundle_.preprocess);
  for (int j = 0; j < fp.h; ++j) {
    for (int i = 0; i < fp.w; ++i) feature_image_(x + i, y + j) = fresh(i, j);
  }
  if (!is_histogram_family(bundle_.features.family)) {
    full_rescore();
    return;
  }

  const Roi dirty = imagecore::dilate_clip(fp, label_margin(bundle_.features), transmission_.width(),
                                           transmission_.height());
  auto fresh_maps = label_maps(feature_image_, bundle_.features, dirty, jobs_);
  std::vector<std::size_t> touched;
  std::vector<int> xs{0, dirty.w}, ys{0, dirty.h};
  for (std::size_t w = 0; w < windows_.size(); ++w) {
    const Roi inter = imagecore::intersect(windows_[w], dirty);
    if (!inter.valid()) continue;
    touched.push_back(w);
    xs.insert(xs.end(), {inter.x - dirty.x, inter.right() - dirty.x});
    ys.insert(ys.end(), {inter.y - dirty.y, inter.bottom() - dirty.y});
  }
  const auto d = counts_.size() / windows_.size();
  parallel_for(maps_.size(), jobs_, [&](std::size_t m) {
    LabelMap& full = maps_[m];
    LabelMap old(dirty.w, dirty.h, full.num_labels);
    for (int j = 0; j < dirty.h; ++j) {
      for (int i = 0; i < dirty.w; ++i) old(i, j) = full(dirty.x + i, dirty.y + j);
    }
    if (old == fresh_maps[m]) return;
    const auto before = integralhist::IntegralHistogram::build(old, xs, ys);
    const auto after = integralhist::IntegralHistogram::build(fresh_maps[m], xs, ys);
    const auto nl = static_cast<std::size_t>(full.num_labels);
    std::vector<std::uint32_t> hb(nl), ha(nl);
    for (std::size_t w : touched) {
      const Roi inter = imagecore::intersect(windows_[w], dirty);
      const Roi local{inter.x - dirty.x, inter.y - dirty.y, inter.w, inter.h};
      before.query_into(local, hb);
      after.query_into(local, ha);
      std::uint32_t* c = counts_.data() + w * d + offsets_[m];
      for (std::size_t l = 0; l < nl; ++l) c[l] = c[l] - hb[l] + ha[l];
    }
    for (int j = 0; j < dirty.h; ++j) {
      for (int i = 0; i < dirty.w; ++i) full(dirty.x + i, dirty.y + j) = fresh_maps[m](i, j);
    }
  });
  parallel_for(touched.size(), jobs_, [&](std::size_t k) { rescore(touched[k]); });
}

double ObscurationScorer::p_image() const { return *std::max_element(scores_.begin(), scores_.end()); }

ImageVerdict ObscurationScorer::verdict() const {
  std::vector<WindowScore> ws(windows_.size());
  for (std::size_t i = 0; i < windows_.size(); ++i) ws[i] = {windows_[i], scores_[i]};
  return make_verdict(std::move(ws), bundle_.t_car);
}

}  // namespace cargoscan::pipeline
