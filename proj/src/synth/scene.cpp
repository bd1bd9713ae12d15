#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <system_error>

#include "cargoscan/common/error.hpp"
#include "cargoscan/common/parallel.hpp"
#include "cargoscan/imagecore/pgm.hpp"
#include "cargoscan/synth/synth.hpp"

namespace cargoscan::synth {

namespace fs = std::filesystem;

std::string to_string(SceneKind k) {
  switch (k) {
    case SceneKind::kCar: return "car";
    case SceneKind::kNoncar: return "noncar";
    case SceneKind::kEmpty: return "empty";
  }
  return "unknown";
}

void validate(const SynthConfig& cfg) {
  if (cfg.width < 256 || cfg.height < 256) fail(ErrorKind::kConfig, "synthetic images must be at least 256 x 256");
  if (cfg.noise_sigma < 0.0 || cfg.column_gain < 0.0 || cfg.column_gain >= 1.0) {
    fail(ErrorKind::kConfig, "noise_sigma must be >= 0 and column_gain in [0, 1)");
  }
  if (cfg.max_cars < 1 || cfg.max_objects < 0) fail(ErrorKind::kConfig, "max_cars >= 1 and max_objects >= 0");
  if (cfg.max_angle < 0.0 || cfg.max_angle > 45.0) fail(ErrorKind::kConfig, "max_angle must be in [0, 45]");
  if (cfg.car_length < 40 || cfg.car_height < 20 || !(cfg.car_density > 0.0)) fail(ErrorKind::kConfig, "bad car template");
}

RealGrid container_background(int width, int height, Rng& rng, Roi* interior) {
  RealGrid a(width, height, 0.0);
  const int air = 28;
  const int x0 = rng.range(8, 20), x1 = width - rng.range(8, 20);
  const int y0 = air, y1 = height - 18;
  const int roof = 10, floor = 26, end_wall = 12;
  const double period = rng.uniform(22.0, 40.0);
  const double ripple = rng.uniform(40.0, 90.0);
  for (int y = y0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      double v;
      if (y >= y1) {
        v = 1.6;  // carriage bed
      } else if (x < x0 || x >= x1) {
        v = 0.0;
      } else if (x < x0 + end_wall || x >= x1 - end_wall) {
        v = 0.55;
      } else if (y < y0 + roof) {
        v = 0.5;
      } else if (y >= y1 - floor) {
        double s, c;
        portable_sincos(2.0 * std::numbers::pi * x / ripple, s, c);
        v = 0.9 + 0.12 * s;
      } else {
        // Corrugated side walls seen face-on.
        double s, c;
        portable_sincos(2.0 * std::numbers::pi * x / period, s, c);
        v = 0.07 + 0.025 * (1.0 + s);
      }
      a(x, y) = v;
    }
  }
  if (interior) *interior = {x0 + end_wall, y0 + roof, (x1 - end_wall) - (x0 + end_wall), (y1 - floor) - (y0 + roof)};
  RealGrid t(width, height);
  for (std::size_t i = 0; i < a.size(); ++i) t.data()[i] = portable_exp(-a.data()[i]);
  return t;
}

namespace {

SceneObject pick_object(const ObjectLibrary& lib, Rng& rng) {
  SceneObject o = lib.objects[static_cast<std::size_t>(rng.below(lib.objects.size()))];
  if (rng.bernoulli(0.5)) o.patch = imagecore::mirror_horizontal(o.patch);
  return o;
}

// Uniform top-left so the patch fits in `region`; false when it cannot fit.
bool place(Rng& rng, const Roi& region, int w, int h, int& x, int& y) {
  if (w > region.w || h > region.h) return false;
  x = region.x + rng.range(0, region.w - w);
  y = region.y + rng.range(0, region.h - h);
  return true;
}

// Granular bulk load filling part of the container.
SceneObject bulk_load(Rng& rng, const Roi& interior) {
  const int w = std::max(64, static_cast<int>(interior.w * rng.uniform(0.4, 1.0)));
  const int h = std::max(64, static_cast<int>(interior.h * rng.uniform(0.3, 0.9)));
  const double mu = rng.uniform(0.4, 1.6);
  const int grain = rng.range(3, 9);
  RealGrid coarse((w + grain - 1) / grain + 1, (h + grain - 1) / grain + 1);
  for (double& v : coarse.values()) v = rng.uniform(0.75, 1.25);
  RealGrid att(w, h);
  for (int y = 0; y < h; ++y) {
    // Free surface: the load slopes down towards one end.
    const double top = 0.15 * h * (1.0 * y / h);
    for (int x = 0; x < w; ++x) {
      const double fx = static_cast<double>(x) / grain, fy = static_cast<double>(y) / grain;
      const int ix = static_cast<int>(fx), iy = static_cast<int>(fy);
      const double tx = fx - ix, ty = fy - iy;
      const double g = (1 - ty) * ((1 - tx) * coarse(ix, iy) + tx * coarse(ix + 1, iy)) +
                       ty * ((1 - tx) * coarse(ix, iy + 1) + tx * coarse(ix + 1, iy + 1));
      att(x, y) = (y >= top * (1.0 - static_cast<double>(x) / w)) ? mu * g : 0.0;
    }
  }
  SceneObject o;
  o.patch = RealGrid(w, h);
  for (std::size_t i = 0; i < att.size(); ++i) o.patch.data()[i] = std::max(portable_exp(-att.data()[i]), 1e-6);
  o.id = -1;
  o.density = mu;
  int x = 0, y = 0;
  place(rng, interior, w, h, x, y);
  o.x = x;
  o.y = y;
  return o;
}

void add_cars(Scene& s, TransmissionImage& img, Rng& rng, const SynthConfig& cfg, int count) {
  for (int k = 0; k < count; ++k) {
    const double scale = rng.uniform(0.9, 1.1);
    CarStyle style = sample_car_style(rng, static_cast<int>(cfg.car_length * scale),
                                      static_cast<int>(cfg.car_height * rng.uniform(0.9, 1.1)), cfg.car_density);
    RealGrid patch = render_car(style);
    if (cfg.max_angle > 0.0 && rng.bernoulli(cfg.angle_probability)) {
      patch = rotate_patch(patch, rng.uniform(-cfg.max_angle, cfg.max_angle));
    }
    for (int attempt = 0; attempt < 60; ++attempt) {
      int x = 0, y = 0;
      if (!place(rng, s.interior, patch.width(), patch.height(), x, y)) break;
      const Roi roi{x, y, patch.width(), patch.height()};
      const bool clash = std::any_of(s.rois.begin(), s.rois.end(),
                                     [&](const Roi& r) { return imagecore::intersect(r, roi).valid(); });
      if (clash) continue;
      SceneObject car;
      car.patch = std::move(patch);
      car.x = x;
      car.y = y;
      car.id = -2;
      car.density = style.body_density;
      project_in_place(img, car, s.interior);
      s.rois.push_back(roi);
      break;
    }
  }
}

void add_goods(Scene& s, TransmissionImage& img, const ObjectLibrary& lib, Rng& rng, int count, int mode) {
  // mode 0: anywhere; 1: clear of the cars; 2: overlapping a car.
  for (int k = 0; k < count; ++k) {
    SceneObject o = pick_object(lib, rng);
    for (int attempt = 0; attempt < 40; ++attempt) {
      int x = 0, y = 0;
      if (mode == 2 && !s.rois.empty()) {
        // Centre inside a car ROI, clamped to the interior.
        const Roi& car = s.rois[static_cast<std::size_t>(rng.below(s.rois.size()))];
        if (o.patch.width() > s.interior.w || o.patch.height() > s.interior.h) break;
        x = std::clamp(car.x + rng.range(0, car.w - 1) - o.patch.width() / 2, s.interior.x,
                       s.interior.right() - o.patch.width());
        y = std::clamp(car.y + rng.range(0, car.h - 1) - o.patch.height() / 2, s.interior.y,
                       s.interior.bottom() - o.patch.height());
      } else if (!place(rng, s.interior, o.patch.width(), o.patch.height(), x, y)) {
        break;
      }
      o.x = x;
      o.y = y;
      if (mode == 1) {
        const Roi fp = o.footprint();
        if (std::any_of(s.rois.begin(), s.rois.end(), [&](const Roi& r) { return imagecore::intersect(r, fp).valid(); })) {
          continue;
        }
      }
      project_in_place(img, o, s.interior);
      break;
    }
  }
}

}  // namespace

Scene generate_scene(const ObjectLibrary& library, SceneKind kind, std::uint64_t seed, const SynthConfig& cfg) {
  validate(cfg);
  if (library.objects.empty()) fail(ErrorKind::kValidation, "empty object library");
  Rng rng(seed);
  Scene s;
  s.kind = kind;
  TransmissionImage img(container_background(cfg.width, cfg.height, rng, &s.interior));

  switch (kind) {
    case SceneKind::kEmpty:
      s.layout = "empty";
      break;
    case SceneKind::kNoncar: {
      if (rng.bernoulli(0.15)) {
        s.layout = "bulk";
        project_in_place(img, bulk_load(rng, s.interior), s.interior);
        add_goods(s, img, library, rng, rng.range(0, 3), 0);
      } else {
        s.layout = "cargo";
        add_goods(s, img, library, rng, rng.range(0, cfg.max_objects), 0);
      }
      break;
    }
    case SceneKind::kCar: {
      const double u = rng.uniform();
      if (u < 0.3) {
        s.layout = "single";
        add_cars(s, img, rng, cfg, 1);
      } else if (u < 0.5) {
        s.layout = "multi";
        add_cars(s, img, rng, cfg, rng.range(2, std::max(2, cfg.max_cars)));
      } else if (u < 0.75) {
        s.layout = "goods";
        add_cars(s, img, rng, cfg, rng.range(1, std::min(2, cfg.max_cars)));
        add_goods(s, img, library, rng, rng.range(1, 6), 1);
      } else {
        s.layout = "obscured";
        add_cars(s, img, rng, cfg, rng.range(1, std::min(2, cfg.max_cars)));
        add_goods(s, img, library, rng, rng.range(1, 4), 2);
      }
      if (s.rois.empty()) fail(ErrorKind::kPlacement, "car template does not fit the container");
      break;
    }
  }

  // Quantum noise, then per-column source/detector gain.
  if (cfg.noise_sigma > 0.0) {
    for (double& v : img.pixels.values()) {
      const double eta = cfg.noise_sigma * std::sqrt(std::max(0.0, 1.0 - v)) * rng.normal();
      v = std::clamp(v * (1.0 + eta), 1.0 / 65535.0, 1.0);
    }
  }
  if (cfg.column_gain > 0.0) {
    std::vector<double> gain(static_cast<std::size_t>(cfg.width));
    for (double& g : gain) g = 1.0 - cfg.column_gain * rng.uniform();
    for (int y = 0; y < cfg.height; ++y) {
      auto row = img.pixels.row(y);
      for (int x = 0; x < cfg.width; ++x) row[static_cast<std::size_t>(x)] *= gain[static_cast<std::size_t>(x)];
    }
  }
  s.image = std::move(img);
  return s;
}

std::vector<Scene> generate_corpus(const ObjectLibrary& library, const CorpusCounts& counts, std::uint64_t seed,
                                   const SynthConfig& cfg, int jobs) {
  if (counts.cars < 0 || counts.noncars < 0 || counts.empties < 0) fail(ErrorKind::kConfig, "negative scene count");
  const std::size_t n = static_cast<std::size_t>(counts.cars + counts.noncars + counts.empties);
  std::vector<Scene> scenes(n);
  const Rng master(seed);
  parallel_for(n, jobs, [&](std::size_t i) {
    const auto ii = static_cast<int>(i);
    const SceneKind kind = ii < counts.cars ? SceneKind::kCar
                           : ii < counts.cars + counts.noncars ? SceneKind::kNoncar
                                                               : SceneKind::kEmpty;
    scenes[i] = generate_scene(library, kind, master.split(i).key(), cfg);
  });
  return scenes;
}

pipeline::Dataset write_corpus(const fs::path& dir, const ObjectLibrary& library, const CorpusCounts& counts,
                               std::uint64_t seed, const SynthConfig& cfg, int jobs) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) fail(ErrorKind::kIo, "cannot create " + dir.string() + ": " + ec.message());
  const std::size_t n = static_cast<std::size_t>(counts.cars + counts.noncars + counts.empties);
  pipeline::Dataset data;
  data.entries.resize(n);
  const Rng master(seed);
  // Scenes are generated and written one per task to bound memory.
  parallel_for(n, jobs, [&](std::size_t i) {
    const auto ii = static_cast<int>(i);
    const SceneKind kind = ii < counts.cars ? SceneKind::kCar
                           : ii < counts.cars + counts.noncars ? SceneKind::kNoncar
                                                               : SceneKind::kEmpty;
    const std::uint64_t key = master.split(i).key();
    const Scene s = generate_scene(library, kind, key, cfg);
    const int local = kind == SceneKind::kCar ? ii : kind == SceneKind::kNoncar ? ii - counts.cars
                                                                                : ii - counts.cars - counts.noncars;
    char name[64];
    std::snprintf(name, sizeof name, "%s_%04d.pgm", to_string(kind).c_str(), local);
    imagecore::save_image(dir / name, s.image);
    data.entries[i] = {dir / name, kind == SceneKind::kCar, s.rois, key, s.layout};
  });
  pipeline::write_manifest(dir / "manifest.tsv", data);
  return data;
}

}  // namespace cargoscan::synth
