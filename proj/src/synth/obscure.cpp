#include <algorithm>
#include <cmath>
#include <sstream>

#include "cargoscan/common/error.hpp"
#include "cargoscan/pipeline/scoring.hpp"
#include "cargoscan/synth/synth.hpp"

namespace cargoscan::synth {

double mean_relative_attenuation(const TransmissionImage& raw, const TransmissionImage& obscured, const Roi& roi) {
  if (raw.width() != obscured.width() || raw.height() != obscured.height()) {
    fail(ErrorKind::kValidation, "raw and obscured images differ in size");
  }
  if (!roi.valid() || !roi.within(raw.width(), raw.height())) fail(ErrorKind::kBounds, "ROI outside image");
  double sum = 0.0;
  for (int y = roi.y; y < roi.bottom(); ++y) {
    for (int x = roi.x; x < roi.right(); ++x) {
      const double r = raw(x, y);
      if (!(r > 0.0)) fail(ErrorKind::kDomain, "raw pixel is zero inside the ROI");
      sum += (r - obscured(x, y)) / r;
    }
  }
  return sum / static_cast<double>(roi.area());
}

SceneObject obscuring_object(const SceneObject& proto, int w, int h, double density) {
  if (w < 1 || h < 1 || !(density > 0.0)) fail(ErrorKind::kConfig, "obscuring object needs a positive size and density");
  const int pw = proto.patch.width(), ph = proto.patch.height();
  RealGrid att(w, h);
  double sum = 0.0;
  std::size_t mask = 0;
  for (int y = 0; y < h; ++y) {
    const int sy = std::min(ph - 1, static_cast<int>((y + 0.5) * ph / h));
    for (int x = 0; x < w; ++x) {
      const int sx = std::min(pw - 1, static_cast<int>((x + 0.5) * pw / w));
      const double a = -std::log(proto.patch(sx, sy));
      att(x, y) = a;
      if (a > 1e-9) {
        sum += a;
        ++mask;
      }
    }
  }
  if (mask == 0) fail(ErrorKind::kDegenerateInput, "prototype object is transparent");
  const double scale = density / (sum / static_cast<double>(mask));
  SceneObject o = proto;
  o.patch = RealGrid(w, h);
  for (std::size_t i = 0; i < att.size(); ++i) o.patch.data()[i] = std::max(portable_exp(-scale * att.data()[i]), 1e-6);
  o.density = density;
  o.x = o.y = 0;
  return o;
}

ObscurationTrace obscuration_experiment(const TransmissionImage& car_image, const Roi& roi,
                                        const ObjectLibrary& library, const pipeline::ModelBundle& bundle,
                                        std::uint64_t seed, const ObscurationConfig& cfg, int jobs) {
  if (library.objects.empty()) fail(ErrorKind::kValidation, "empty object library");
  if (cfg.realisations < 1 || cfg.max_insertions < 1) fail(ErrorKind::kConfig, "realisations and max_insertions must be >= 1");
  if (!(cfg.target_mra > 0.0 && cfg.target_mra <= 1.0)) fail(ErrorKind::kConfig, "target_mra must be in (0, 1]");
  if (!roi.valid() || !roi.within(car_image.width(), car_image.height())) fail(ErrorKind::kBounds, "car ROI outside image");
  const Roi region = cfg.region.value_or(car_image.bounds());
  if (!region.valid() || !region.within(car_image.width(), car_image.height())) fail(ErrorKind::kBounds, "placement region outside image");
  const int ow = std::max(1, static_cast<int>(std::lround(cfg.size_fraction * cfg.car_length)));
  const int oh = std::max(1, static_cast<int>(std::lround(cfg.size_fraction * cfg.car_height)));
  const double density = cfg.density_fraction * cfg.car_density;
  for (int y = roi.y; y < roi.bottom(); ++y) {
    for (int x = roi.x; x < roi.right(); ++x) {
      if (!(car_image(x, y) > 0.0)) fail(ErrorKind::kDomain, "raw pixel is zero inside the ROI");
    }
  }

  ObscurationTrace trace;
  trace.realisations = cfg.realisations;
  const Rng master(seed);
  for (int r = 0; r < cfg.realisations; ++r) {
    Rng rng = master.split(static_cast<std::uint64_t>(r));
    pipeline::ObscurationScorer scorer(car_image, bundle, jobs);
    // obscured / raw over the ROI; mra = 1 - mean(ratio).
    RealGrid ratio(roi.w, roi.h, 1.0);
    trace.rows.push_back({r, 0, 0.0, scorer.p_image()});
    double mra = 0.0;
    int n = 0;
    while (mra < cfg.target_mra && n < cfg.max_insertions) {
      const auto& proto = library.objects[static_cast<std::size_t>(rng.below(library.objects.size()))];
      SceneObject o = obscuring_object(proto, ow, oh, density);
      if (rng.bernoulli(0.5)) o.patch = imagecore::mirror_horizontal(o.patch);
      // Uniform centre in the region; the part outside the region is cut off.
      o.x = region.x + rng.range(0, region.w - 1) - ow / 2;
      o.y = region.y + rng.range(0, region.h - 1) - oh / 2;
      const Roi kept = imagecore::intersect(o.footprint(), region);
      const RealGrid piece = imagecore::crop(o.patch, Roi{kept.x - o.x, kept.y - o.y, kept.w, kept.h});
      scorer.multiply(piece, kept.x, kept.y);
      const Roi hit = imagecore::intersect(kept, roi);
      if (hit.valid()) {
        for (int y = hit.y; y < hit.bottom(); ++y) {
          for (int x = hit.x; x < hit.right(); ++x) ratio(x - roi.x, y - roi.y) *= o.patch(x - o.x, y - o.y);
        }
      }
      double sum = 0.0;
      for (double v : ratio.values()) sum += v;
      // Clamp so rounding in the sum cannot undo monotonicity at 0.
      mra = std::max(mra, 1.0 - sum / static_cast<double>(ratio.size()));
      ++n;
      trace.rows.push_back({r, n, mra, scorer.p_image()});
    }
    trace.reached_target.push_back(mra >= cfg.target_mra);
  }
  return trace;
}

std::string format_trace(const ObscurationTrace& trace) {
  std::ostringstream os;
  os.precision(10);
  os << "# realisation object_count mra p_I\n";
  for (const auto& row : trace.rows) os << row.realisation << ' ' << row.objects << ' ' << row.mra << ' ' << row.p_image << '\n';
  return os.str();
}

}  // namespace cargoscan::synth
