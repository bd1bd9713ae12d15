#include <algorithm>
#include <cmath>
#include <numbers>

#include "cargoscan/common/error.hpp"
#include "cargoscan/synth/synth.hpp"

namespace cargoscan::synth {

double portable_exp(double x) {
  if (x != x) return x;
  if (x < -745.0) return 0.0;
  if (x > 709.0) return HUGE_VAL;
  constexpr double kInvLn2 = 1.4426950408889634;
  constexpr double kLn2Hi = 6.93147180369123816490e-01;  // upper bits of ln 2, exact in k * kLn2Hi
  constexpr double kLn2Lo = 1.90821492927058770002e-10;
  const double kf = std::floor(x * kInvLn2 + 0.5);
  const double r = (x - kf * kLn2Hi) - kf * kLn2Lo;  // |r| <= 0.35
  // Taylor series to r^14 / 14!, Horner form.
  double p = 1.0;
  for (int n = 14; n >= 1; --n) p = 1.0 + p * r / n;
  return std::ldexp(p, static_cast<int>(kf));
}

void portable_sincos(double radians, double& s, double& c) {
  constexpr double kTwoOverPi = 0.63661977236758134308;
  constexpr double kPio2Hi = 1.57079632673412561417e+00;
  constexpr double kPio2Lo = 6.07710050650619224932e-11;
  const double nf = std::floor(radians * kTwoOverPi + 0.5);
  const double r = (radians - nf * kPio2Hi) - nf * kPio2Lo;  // |r| <= pi / 4
  const double r2 = r * r;
  double ps = 1.0, pc = 1.0;
  // sin r = r (1 - r^2/(2*3) (1 - r^2/(4*5) (...))), cos likewise.
  for (int k = 9; k >= 1; --k) {
    ps = 1.0 - ps * r2 / ((2.0 * k) * (2.0 * k + 1.0));
    pc = 1.0 - pc * r2 / ((2.0 * k - 1.0) * (2.0 * k));
  }
  const double sr = r * ps, cr = pc;
  const long q = static_cast<long>(nf) & 3;
  switch (q) {
    case 0: s = sr; c = cr; break;
    case 1: s = cr; c = -sr; break;
    case 2: s = -sr; c = -cr; break;
    default: s = -cr; c = sr; break;
  }
}

std::string to_string(ShapeKind k) {
  switch (k) {
    case ShapeKind::kRectangle: return "rectangle";
    case ShapeKind::kEllipse: return "ellipse";
    case ShapeKind::kPolygon: return "polygon";
    case ShapeKind::kTubeBundle: return "tubes";
    case ShapeKind::kDiskRow: return "disks";
  }
  return "unknown";
}

void validate(const SceneObject& obj) {
  if (obj.patch.empty()) fail(ErrorKind::kValidation, "object has an empty patch");
  for (double v : obj.patch.values()) {
    if (!(v > 0.0 && v <= 1.0)) fail(ErrorKind::kValidation, "object transmission outside (0, 1]");
  }
}

namespace {

RealGrid to_transmission(const RealGrid& att) {
  RealGrid t(att.width(), att.height());
  for (std::size_t i = 0; i < att.size(); ++i) t.data()[i] = std::max(portable_exp(-att.data()[i]), 1e-6);
  return t;
}

double mean_positive(const RealGrid& att) {
  double s = 0.0;
  std::size_t n = 0;
  for (double a : att.values()) {
    if (a > 0.0) {
      s += a;
      ++n;
    }
  }
  return n ? s / static_cast<double>(n) : 0.0;
}

// Profile of a cylinder seen side-on: chord length through a unit circle.
double chord(double t) { return t >= 1.0 ? 0.0 : std::sqrt(1.0 - t * t); }

RealGrid rectangle_shape(Rng& rng, int w, int h, double mu) {
  RealGrid a(w, h, 0.0);
  const bool palletised = rng.bernoulli(0.5);
  const int cols = rng.range(1, 5), rows = rng.range(1, 4);
  const int wall = rng.range(2, 6);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      double v = mu;
      if (x < wall || y < wall || x >= w - wall || y >= h - wall) v *= 1.4;
      if (palletised) {
        const int cx = x * cols % w, cy = y * rows % h;
        // Gaps between the stacked cartons.
        if (cx < 2 * cols || cy < 2 * rows) v *= 0.5;
      }
      a(x, y) = v;
    }
  }
  // Pallet base.
  if (palletised) {
    const int base = std::max(4, h / 12);
    for (int y = h - base; y < h; ++y)
      for (int x = 0; x < w; ++x) a(x, y) = mu * ((x / 12) % 2 ? 0.9 : 1.3);
  }
  return a;
}

RealGrid ellipse_shape(int w, int h, double mu) {
  RealGrid a(w, h, 0.0);
  const double rx = w / 2.0, ry = h / 2.0;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const double u = (x + 0.5 - rx) / rx, v = (y + 0.5 - ry) / ry;
      a(x, y) = mu * chord(std::sqrt(u * u + v * v));
    }
  }
  return a;
}

bool inside_polygon(const std::vector<double>& px, const std::vector<double>& py, double x, double y) {
  bool in = false;
  for (std::size_t i = 0, j = px.size() - 1; i < px.size(); j = i++) {
    if ((py[i] > y) != (py[j] > y) && x < (px[j] - px[i]) * (y - py[i]) / (py[j] - py[i]) + px[i]) in = !in;
  }
  return in;
}

RealGrid polygon_shape(Rng& rng, int w, int h, double mu) {
  const int n = rng.range(6, 13);
  std::vector<double> px(static_cast<std::size_t>(n)), py(static_cast<std::size_t>(n));
  for (int k = 0; k < n; ++k) {
    double s, c;
    portable_sincos(2.0 * std::numbers::pi * k / n, s, c);
    const double r = rng.uniform(0.55, 1.0);
    px[static_cast<std::size_t>(k)] = w / 2.0 + r * c * (w / 2.0 - 1);
    py[static_cast<std::size_t>(k)] = h / 2.0 + r * s * (h / 2.0 - 1);
  }
  RealGrid a(w, h, 0.0);
  const double gx = rng.uniform(-0.3, 0.3), gy = rng.uniform(-0.3, 0.3);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      if (inside_polygon(px, py, x + 0.5, y + 0.5))
        a(x, y) = mu * (1.0 + gx * (x / (w - 1.0) - 0.5) + gy * (y / (h - 1.0) - 0.5));
  return a;
}

RealGrid tube_shape(Rng& rng, int w, int h, double mu) {
  const bool horizontal = rng.bernoulli(0.5);
  const int across = horizontal ? h : w;
  const int k = std::clamp(rng.range(3, 10), 1, std::max(1, across / 8));
  const double pitch = static_cast<double>(across) / k;
  const double radius = pitch * rng.uniform(0.3, 0.48);
  const bool hollow = rng.bernoulli(0.5);
  RealGrid a(w, h, 0.0);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const double t = (horizontal ? y : x) + 0.5;
      const double centre = (std::floor(t / pitch) + 0.5) * pitch;
      const double d = std::abs(t - centre) / radius;
      double v = chord(d);
      if (hollow) v -= 0.8 * chord(d / 0.8) * 0.8;
      a(x, y) = mu * v;
    }
  }
  return a;
}

// Wheel-like ring of dense rubber around a hub.
double wheel_attenuation(double d, double radius, double tyre, double rim, double hub) {
  if (d > radius) return 0.0;
  if (d > 0.62 * radius) return tyre;
  if (d > 0.2 * radius) return rim;
  return hub;
}

// Draws within max_w x max_h; w and h receive the tight size.
RealGrid disk_row_shape(Rng& rng, int& w, int& h, int max_w, int max_h, double mu) {
  const int r_hi = std::max(4, std::min(75, (max_h - 2) / 2));
  const int r = rng.range(std::min(r_hi, 30), r_hi);
  const int n_hi = std::clamp((max_w - 2 + 4) / (2 * r + 4), 1, 6);
  const int n = rng.range(std::min(2, n_hi), n_hi);
  const int gap_hi = n > 1 ? std::max(4, std::min(3 * r, (max_w - 2 - n * 2 * r) / (n - 1))) : 4;
  const int gap = rng.range(4, gap_hi);
  w = n * 2 * r + (n - 1) * gap + 2;
  h = 2 * r + 2;
  RealGrid a(w, h, 0.0);
  const double tyre = mu * 2.0, rim = mu * 1.1, hub = mu * 2.0;
  for (int i = 0; i < n; ++i) {
    const double cx = 1 + r + i * (2.0 * r + gap), cy = 1 + r;
    for (int y = 0; y < h; ++y)
      for (int x = std::max(0, static_cast<int>(cx) - r - 1); x < std::min(w, static_cast<int>(cx) + r + 2); ++x) {
        const double dx = x + 0.5 - cx, dy = y + 0.5 - cy;
        a(x, y) = std::max(a(x, y), wheel_attenuation(std::sqrt(dx * dx + dy * dy), r, tyre, rim, hub));
      }
  }
  return a;
}

}  // namespace

ObjectLibrary make_library(const LibraryConfig& cfg) {
  if (cfg.size < 1) fail(ErrorKind::kConfig, "object library needs at least one object");
  if (cfg.min_extent < 8 || cfg.max_width < cfg.min_extent || cfg.max_height < cfg.min_extent) {
    fail(ErrorKind::kConfig, "bad object size range");
  }
  if (!(cfg.min_density > 0.0 && cfg.max_density >= cfg.min_density)) fail(ErrorKind::kConfig, "bad density range");
  ObjectLibrary lib;
  const Rng master(cfg.seed);
  for (int i = 0; i < cfg.size; ++i) {
    Rng rng = master.split(static_cast<std::uint64_t>(i));
    int w = rng.range(cfg.min_extent, cfg.max_width);
    int h = rng.range(cfg.min_extent, cfg.max_height);
    const double mu = rng.uniform(cfg.min_density, cfg.max_density);
    ShapeKind kind;
    if (rng.bernoulli(cfg.confuser_fraction)) {
      kind = ShapeKind::kDiskRow;
    } else {
      kind = static_cast<ShapeKind>(rng.below(4));
    }
    RealGrid att;
    switch (kind) {
      case ShapeKind::kRectangle: att = rectangle_shape(rng, w, h, mu); break;
      case ShapeKind::kEllipse: att = ellipse_shape(w, h, mu); break;
      case ShapeKind::kPolygon: att = polygon_shape(rng, w, h, mu); break;
      case ShapeKind::kTubeBundle: att = tube_shape(rng, w, h, mu); break;
      case ShapeKind::kDiskRow: att = disk_row_shape(rng, w, h, cfg.max_width, cfg.max_height, mu); break;
    }
    SceneObject obj;
    obj.patch = to_transmission(att);
    obj.id = i;
    obj.density = mean_positive(att);
    obj.shape = kind;
    lib.objects.push_back(std::move(obj));
  }
  return lib;
}

void project_in_place(TransmissionImage& img, const SceneObject& obj, const Roi& region) {
  const Roi fp = obj.footprint();
  const Roi inside = imagecore::intersect(region, img.bounds());
  if (!fp.valid() || imagecore::intersect(fp, inside) != fp) {
    fail(ErrorKind::kPlacement, "object " + std::to_string(obj.id) + " at " + imagecore::to_string(fp) +
                                    " leaves region " + imagecore::to_string(region));
  }
  for (int j = 0; j < fp.h; ++j) {
    double* row = img.pixels.row(fp.y + j).data() + fp.x;
    const double* p = obj.patch.row(j).data();
    for (int i = 0; i < fp.w; ++i) row[i] *= p[i];
  }
}

TransmissionImage project_object(const TransmissionImage& img, const SceneObject& obj, const Roi& region) {
  TransmissionImage out = img;
  project_in_place(out, obj, region);
  return out;
}

TransmissionImage project_object(const TransmissionImage& img, const SceneObject& obj) {
  return project_object(img, obj, img.bounds());
}

RealGrid rotate_patch(const RealGrid& patch, double degrees) {
  double s, c;
  portable_sincos(degrees * (std::numbers::pi / 180.0), s, c);
  const int w = patch.width(), h = patch.height();
  // The slack absorbs rounding in sin/cos at quarter turns.
  const int nw = static_cast<int>(std::ceil(std::abs(w * c) + std::abs(h * s) - 1e-9));
  const int nh = static_cast<int>(std::ceil(std::abs(w * s) + std::abs(h * c) - 1e-9));
  RealGrid out(nw, nh, 1.0);
  const double cx = w / 2.0, cy = h / 2.0, ncx = nw / 2.0, ncy = nh / 2.0;
  for (int y = 0; y < nh; ++y) {
    for (int x = 0; x < nw; ++x) {
      // Inverse rotation of the destination pixel centre.
      const double dx = x + 0.5 - ncx, dy = y + 0.5 - ncy;
      const double sx = c * dx + s * dy + cx, sy = -s * dx + c * dy + cy;
      const int ix = static_cast<int>(std::floor(sx)), iy = static_cast<int>(std::floor(sy));
      if (ix >= 0 && iy >= 0 && ix < w && iy < h) out(x, y) = patch(ix, iy);
    }
  }
  return out;
}

CarStyle sample_car_style(Rng& rng, int length, int height, double body_density) {
  CarStyle s;
  s.length = length;
  s.height = height;
  s.body_density = body_density * rng.uniform(0.85, 1.15);
  s.cabin_start = rng.uniform(0.22, 0.32);
  s.cabin_end = rng.uniform(0.68, 0.8);
  s.cabin_top = rng.uniform(0.02, 0.14);
  s.wheel_radius = rng.uniform(0.17, 0.22);
  s.front_wheel = rng.uniform(0.15, 0.2);
  s.rear_wheel = rng.uniform(0.78, 0.84);
  s.facing_left = rng.bernoulli(0.5);
  return s;
}

RealGrid render_car(const CarStyle& st) {
  const int L = st.length, H = st.height;
  if (L < 40 || H < 20) fail(ErrorKind::kConfig, "car template too small");
  const double d = st.body_density;
  const double R = st.wheel_radius * H;
  const double wy = H - R - 1.0;
  const double wx[2] = {st.rear_wheel * L, st.front_wheel * L};  // drawn facing right, mirrored below
  const double body_top = 0.42 * H, body_bottom = H - 0.45 * R;
  const double corner = 0.14 * H;
  const double cab_l = st.cabin_start * L, cab_r = st.cabin_end * L;
  const double cab_top = st.cabin_top * H;
  const double roof_l = cab_l + 0.07 * L, roof_r = cab_r - 0.13 * L;
  const int pillar = std::max(3, H / 32);
  RealGrid a(L, H, 0.0);

  auto in_body = [&](double x, double y) {
    if (y < body_top || y > body_bottom || x < 0.5 || x > L - 0.5) return false;
    // Rounded ends.
    const double ex = x < corner ? corner - x : (x > L - corner ? x - (L - corner) : 0.0);
    const double ey = y < body_top + corner ? body_top + corner - y : 0.0;
    return ex * ex + ey * ey <= corner * corner;
  };
  // Cabin: trapezoid from the belt line up to a rounded roof.
  auto cabin_edges = [&](double y, double& xl, double& xr) {
    const double t = (body_top - y) / (body_top - cab_top);  // 0 at the belt line, 1 at the roof
    xl = cab_l + (roof_l - cab_l) * t;
    xr = cab_r + (roof_r - cab_r) * t;
  };
  auto in_cabin = [&](double x, double y) {
    if (y < cab_top || y >= body_top) return false;
    double xl, xr;
    cabin_edges(y, xl, xr);
    return x >= xl && x <= xr;
  };
  auto in_window = [&](double x, double y) {
    if (y < cab_top + pillar || y >= body_top - pillar) return false;
    double xl, xr;
    cabin_edges(y, xl, xr);
    const double mid = 0.5 * (xl + xr);
    if (x < xl + pillar || x > xr - pillar) return false;
    return std::abs(x - mid) > pillar;  // B-pillar
  };

  for (int y = 0; y < H; ++y) {
    for (int x = 0; x < L; ++x) {
      const double px = x + 0.5, py = y + 0.5;
      double v = 0.0;
      bool arch = false;
      for (double cx : wx) {
        const double dx = px - cx, dy = py - wy;
        if (dx * dx + dy * dy < 1.18 * 1.18 * R * R) arch = true;
      }
      if (in_body(px, py) && !arch) {
        v += d;
        // Sheet metal seen edge-on along the outline.
        if (!in_body(px - 5, py) || !in_body(px + 5, py) || !in_body(px, py - 5) || !in_body(px, py + 5)) v += 0.6 * d;
        // Engine block at the front.
        if (px > 0.8 * L && px < 0.96 * L && py > 0.46 * H && py < 0.8 * H) v += 1.1 * d;
        // Seats.
        if ((px > cab_l + 0.04 * L && px < cab_l + 0.16 * L) || (px > cab_r - 0.2 * L && px < cab_r - 0.1 * L)) {
          if (py < 0.7 * H) v += 0.35 * d;
        }
      }
      if (in_cabin(px, py)) v += in_window(px, py) ? 0.12 * d : 0.55 * d;
      // Seat backs show through the windows.
      if (in_cabin(px, py) && py > 0.5 * (cab_top + body_top) &&
          ((px > cab_l + 0.10 * L && px < cab_l + 0.14 * L) || (px > cab_r - 0.16 * L && px < cab_r - 0.12 * L))) {
        v += 0.3 * d;
      }
      // Axle line.
      if (std::abs(py - wy) < 3.0 && px > wx[1] && px < wx[0]) v += 0.6 * d;
      for (double cx : wx) {
        const double dx = px - cx, dy = py - wy;
        v += wheel_attenuation(std::sqrt(dx * dx + dy * dy), R, 2.2 * d, 1.3 * d, 2.4 * d);
      }
      a(x, y) = v;
    }
  }
  RealGrid t = to_transmission(a);
  return st.facing_left ? imagecore::mirror_horizontal(t) : t;
}

}  // namespace cargoscan::synth
