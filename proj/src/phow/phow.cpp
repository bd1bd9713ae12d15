#include "cargoscan/phow/phow.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>

#include "cargoscan/common/error.hpp"
#include "cargoscan/common/rng.hpp"
#include "cargoscan/imagecore/filter.hpp"

namespace cargoscan::phow {

using imagecore::Kernel1D;
using imagecore::reflect_index;

namespace {

int ceil_div(int a, int b) { return a >= 0 ? (a + b - 1) / b : -((-a) / b); }
int floor_div(int a, int b) { return a >= 0 ? a / b : -((-a + b - 1) / b); }

// First and last grid point g*step with lo <= g*step <= hi; n = 0 if none.
void grid_span(int lo, int hi, int step, int& first, int& n) {
  const int g0 = ceil_div(lo, step);
  const int g1 = floor_div(hi, step);
  first = g0 * step;
  n = std::max(0, g1 - g0 + 1);
}

Kernel1D triangle_kernel(int b) {
  Kernel1D k;
  k.taps.resize(static_cast<std::size_t>(b));
  for (int t = 0; t < b; ++t) k.taps[static_cast<std::size_t>(t)] = 1.0 - static_cast<double>(t) / b;
  return k;
}

int layer_margin(int b) { return b * 5 / 2 + imagecore::blur_radius(b / 6.0); }

void normalize_descriptor(float* v) {
  double n2 = 0.0;
  for (int c = 0; c < kDescriptorSize; ++c) n2 += static_cast<double>(v[c]) * v[c];
  if (n2 == 0.0) return;
  double inv = 1.0 / std::sqrt(n2);
  double m2 = 0.0;
  std::array<double, kDescriptorSize> tmp{};
  for (int c = 0; c < kDescriptorSize; ++c) {
    tmp[static_cast<std::size_t>(c)] = std::min(0.2, v[c] * inv);
    m2 += tmp[static_cast<std::size_t>(c)] * tmp[static_cast<std::size_t>(c)];
  }
  inv = 1.0 / std::sqrt(m2);
  for (int c = 0; c < kDescriptorSize; ++c) v[c] = static_cast<float>(tmp[static_cast<std::size_t>(c)] * inv);
}

SiftLayer compute_layer(const RealGrid& image, int b, int step, const Roi& region) {
  SiftLayer layer;
  layer.bin_size = b;
  const int w = image.width();
  const int h = image.height();
  grid_span(std::max(2 * b, region.x), std::min(w - 2 * b, region.right() - 1), step, layer.x0, layer.nx);
  grid_span(std::max(2 * b, region.y), std::min(h - 2 * b, region.bottom() - 1), step, layer.y0, layer.ny);
  if (layer.nx == 0 || layer.ny == 0) {
    layer.nx = layer.ny = 0;
    return layer;
  }
  const Roi points{layer.x0, layer.y0, (layer.nx - 1) * step + 1, (layer.ny - 1) * step + 1};
  const Roi support = imagecore::dilate_clip(points, layer_margin(b), w, h);
  const RealGrid patch = imagecore::crop(image, support);
  const RealGrid blurred = imagecore::gaussian_blur(patch, b / 6.0);
  const int pw = patch.width();
  const int ph = patch.height();

  // Per-pixel orientation split between two adjacent bins.
  std::vector<std::uint8_t> bin(static_cast<std::size_t>(pw) * ph);
  std::vector<double> lower(bin.size()), upper(bin.size());
  for (int y = 0; y < ph; ++y) {
    for (int x = 0; x < pw; ++x) {
      const double gx = 0.5 * (blurred(reflect_index(x + 1, pw), y) - blurred(reflect_index(x - 1, pw), y));
      const double gy = 0.5 * (blurred(x, reflect_index(y + 1, ph)) - blurred(x, reflect_index(y - 1, ph)));
      const double m = std::sqrt(gx * gx + gy * gy);
      double t = std::atan2(gy, gx) / (2.0 * std::numbers::pi / 8.0);
      if (t < 0.0) t += 8.0;
      const double ft = std::floor(t);
      const double frac = t - ft;
      const std::size_t i = static_cast<std::size_t>(y) * pw + x;
      bin[i] = static_cast<std::uint8_t>(static_cast<int>(ft) % 8);
      lower[i] = m * (1.0 - frac);
      upper[i] = m * frac;
    }
  }

  const Kernel1D tri = triangle_kernel(b);
  layer.descriptors.assign(layer.count() * kDescriptorSize, 0.0f);
  const int ox = support.x;
  const int oy = support.y;
  const int half = 3 * b / 2;
  RealGrid plane(pw, ph);
  for (int o = 0; o < 8; ++o) {
    const int prev = (o + 7) % 8;
    for (std::size_t i = 0; i < bin.size(); ++i) {
      plane.data()[i] = bin[i] == o ? lower[i] : (bin[i] == prev ? upper[i] : 0.0);
    }
    const RealGrid pooled = imagecore::convolve_cols(imagecore::convolve_rows(plane, tri), tri);
    for (int j = 0; j < layer.ny; ++j) {
      for (int i = 0; i < layer.nx; ++i) {
        float* d = layer.descriptors.data() + (static_cast<std::size_t>(j) * layer.nx + i) * kDescriptorSize;
        const int px = layer.x0 + i * step - ox;
        const int py = layer.y0 + j * step - oy;
        for (int by = 0; by < 4; ++by) {
          for (int bx = 0; bx < 4; ++bx) {
            d[(by * 4 + bx) * 8 + o] = static_cast<float>(pooled(px - half + bx * b, py - half + by * b));
          }
        }
      }
    }
  }
  for (std::size_t p = 0; p < layer.count(); ++p) normalize_descriptor(layer.descriptors.data() + p * kDescriptorSize);
  return layer;
}

double squared_distance(const float* a, const float* b, int d) {
  double s = 0.0;
  for (int c = 0; c < d; ++c) {
    const double t = static_cast<double>(a[c]) - b[c];
    s += t * t;
  }
  return s;
}

float squared_distance_f(const float* a, const float* b, int d) {
  float s = 0.0f;
  for (int c = 0; c < d; ++c) {
    const float t = a[c] - b[c];
    s += t * t;
  }
  return s;
}

int nearest(const float* centroids, int k, int d, const float* x, double* best_out) {
  std::vector<float> dist(static_cast<std::size_t>(k));
  float best_f = std::numeric_limits<float>::infinity();
  for (int c = 0; c < k; ++c) {
    dist[static_cast<std::size_t>(c)] = squared_distance_f(centroids + static_cast<std::size_t>(c) * d, x, d);
    best_f = std::min(best_f, dist[static_cast<std::size_t>(c)]);
  }
  // Float distances only shortlist; the winner is settled in double.
  const float cutoff = best_f * (1.0f + 1e-4f) + 1e-7f;
  int best = -1;
  double best_d = std::numeric_limits<double>::infinity();
  for (int c = 0; c < k; ++c) {
    if (dist[static_cast<std::size_t>(c)] > cutoff) continue;
    const double dd = squared_distance(centroids + static_cast<std::size_t>(c) * d, x, d);
    if (dd < best_d) {
      best_d = dd;
      best = c;
    }
  }
  if (best_out) *best_out = best_d;
  return best;
}

}  // namespace

void validate(const SiftParams& params) {
  if (params.step < 1) fail(ErrorKind::kConfig, "SIFT grid step must be positive");
  if (params.bin_sizes.empty()) fail(ErrorKind::kConfig, "SIFT needs at least one bin size");
  for (int b : params.bin_sizes) {
    // Bin centres sit at p + (i - 1.5) b, which is a pixel only for even b.
    if (b < 2 || b % 2 != 0) fail(ErrorKind::kConfig, "SIFT bin sizes must be even and >= 2");
  }
}

std::size_t DenseSiftField::count() const noexcept {
  std::size_t n = 0;
  for (const auto& l : layers) n += l.count();
  return n;
}

int sift_margin(const SiftParams& params) {
  int m = 0;
  for (int b : params.bin_sizes) m = std::max(m, layer_margin(b));
  return m;
}

DenseSiftField dense_sift(const RealGrid& image, const SiftParams& params, const Roi& region) {
  validate(params);
  const int max_b = *std::max_element(params.bin_sizes.begin(), params.bin_sizes.end());
  if (image.width() <= 4 * max_b || image.height() <= 4 * max_b) {
    fail(ErrorKind::kSize, "image too small for dense SIFT at bin size " + std::to_string(max_b));
  }
  if (!region.within(image.width(), image.height())) fail(ErrorKind::kBounds, "SIFT region outside image");
  DenseSiftField field;
  field.width = image.width();
  field.height = image.height();
  field.step = params.step;
  for (int b : params.bin_sizes) field.layers.push_back(compute_layer(image, b, params.step, region));
  return field;
}

DenseSiftField dense_sift(const RealGrid& image, const SiftParams& params) {
  return dense_sift(image, params, Roi{0, 0, image.width(), image.height()});
}

void validate(const Vocabulary& vocab) {
  if (vocab.dimension < 1 || vocab.centroids.empty() ||
      vocab.centroids.size() % static_cast<std::size_t>(vocab.dimension) != 0) {
    fail(ErrorKind::kValidation, "vocabulary has no centroids or a ragged layout");
  }
  if (vocab.size() > 65535) fail(ErrorKind::kValidation, "vocabulary too large");
  for (float v : vocab.centroids) {
    if (!std::isfinite(v)) fail(ErrorKind::kValidation, "vocabulary has non-finite components");
  }
}

Vocabulary learn_vocabulary(std::span<const float> samples, int dimension, int k, std::uint64_t seed,
                            const KMeansOptions& options) {
  if (dimension < 1 || samples.size() % static_cast<std::size_t>(dimension) != 0) {
    fail(ErrorKind::kValidation, "descriptor sample has a ragged layout");
  }
  if (k < 1) fail(ErrorKind::kConfig, "vocabulary size must be positive");
  if (options.max_iterations < 1) fail(ErrorKind::kConfig, "k-means needs at least one iteration");
  for (float v : samples) {
    if (!std::isfinite(v)) fail(ErrorKind::kValidation, "descriptor sample has non-finite values");
  }
  const std::size_t d = static_cast<std::size_t>(dimension);
  const std::size_t n = samples.size() / d;
  const float* x = samples.data();
  auto row = [&](std::size_t i) { return x + i * d; };

  // Distinct rows must cover k.
  {
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    auto less = [&](std::size_t a, std::size_t b) {
      return std::lexicographical_compare(row(a), row(a) + d, row(b), row(b) + d);
    };
    std::sort(order.begin(), order.end(), less);
    std::size_t distinct = n > 0 ? 1 : 0;
    for (std::size_t i = 1; i < n; ++i) distinct += less(order[i - 1], order[i]) ? 1 : 0;
    if (distinct < static_cast<std::size_t>(k)) {
      fail(ErrorKind::kDegenerateInput,
           "need " + std::to_string(k) + " distinct descriptors, have " + std::to_string(distinct));
    }
  }

  const std::size_t kk = static_cast<std::size_t>(k);
  std::vector<float> centres(kk * d);
  Rng rng(seed);

  // k-means++ seeding.
  std::vector<double> d2(n, std::numeric_limits<double>::infinity());
  std::size_t pick = rng.below(n);
  for (std::size_t c = 0; c < kk; ++c) {
    std::copy(row(pick), row(pick) + d, centres.begin() + static_cast<std::ptrdiff_t>(c * d));
    if (c + 1 == kk) break;
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      d2[i] = std::min(d2[i], squared_distance(row(i), centres.data() + c * d, dimension));
      total += d2[i];
    }
    const double r = rng.uniform() * total;
    double acc = 0.0;
    std::size_t last_positive = n;
    pick = n;
    for (std::size_t i = 0; i < n; ++i) {
      if (d2[i] <= 0.0) continue;
      last_positive = i;
      acc += d2[i];
      if (acc > r) {
        pick = i;
        break;
      }
    }
    if (pick == n) pick = last_positive;
  }

  std::vector<int> assign(n);
  std::vector<double> dist(n);
  auto assign_all = [&] {
    double inertia = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      assign[i] = nearest(centres.data(), k, dimension, row(i), &dist[i]);
      inertia += dist[i];
    }
    return inertia;
  };

  Vocabulary vocab;
  vocab.dimension = dimension;
  double prev = std::numeric_limits<double>::infinity();
  int it = 0;
  for (it = 1; it <= options.max_iterations; ++it) {
    const double inertia = assign_all();
    if (it > 1 && std::abs(prev - inertia) <= options.tolerance * prev) break;
    prev = inertia;
    if (inertia == 0.0) break;
    std::vector<double> sum(kk * d, 0.0);
    std::vector<std::size_t> members(kk, 0);
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t c = static_cast<std::size_t>(assign[i]);
      ++members[c];
      for (std::size_t j = 0; j < d; ++j) sum[c * d + j] += row(i)[j];
    }
    // Empty clusters take the points farthest from their centroids.
    std::vector<std::size_t> by_distance;
    std::size_t next_far = 0;
    for (std::size_t c = 0; c < kk; ++c) {
      if (members[c] > 0) {
        for (std::size_t j = 0; j < d; ++j) centres[c * d + j] = static_cast<float>(sum[c * d + j] / members[c]);
        continue;
      }
      if (by_distance.empty()) {
        by_distance.resize(n);
        std::iota(by_distance.begin(), by_distance.end(), std::size_t{0});
        std::stable_sort(by_distance.begin(), by_distance.end(),
                         [&](std::size_t a, std::size_t b) { return dist[a] > dist[b]; });
      }
      const std::size_t p = by_distance[std::min(next_far++, n - 1)];
      std::copy(row(p), row(p) + d, centres.begin() + static_cast<std::ptrdiff_t>(c * d));
    }
  }
  vocab.iterations = std::min(it, options.max_iterations);
  vocab.centroids = std::move(centres);
  double inertia = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double dd = 0.0;
    nearest(vocab.centroids.data(), k, dimension, row(i), &dd);
    inertia += dd;
  }
  vocab.inertia = inertia;
  return vocab;
}

DescriptorSampler::DescriptorSampler(std::size_t total, std::size_t cap, std::uint64_t seed)
    : needed_(std::min(total, cap)), remaining_(total), rng_(seed) {
  out_.reserve(needed_ * kDescriptorSize);
}

void DescriptorSampler::consume(const DenseSiftField& field) {
  // Selection sampling: keep each item with probability needed / remaining.
  for (const auto& layer : field.layers) {
    for (std::size_t p = 0; p < layer.count(); ++p) {
      if (needed_ == 0 || remaining_ == 0) break;
      if (needed_ < remaining_ && rng_.below(remaining_) >= needed_) {
        --remaining_;
        continue;
      }
      const float* src = layer.descriptors.data() + p * kDescriptorSize;
      out_.insert(out_.end(), src, src + kDescriptorSize);
      --needed_;
      --remaining_;
    }
  }
}

std::size_t dense_sift_count(int width, int height, const SiftParams& params) {
  validate(params);
  std::size_t n = 0;
  for (int b : params.bin_sizes) {
    int fx = 0, nx = 0, fy = 0, ny = 0;
    grid_span(2 * b, width - 2 * b, params.step, fx, nx);
    grid_span(2 * b, height - 2 * b, params.step, fy, ny);
    n += static_cast<std::size_t>(std::max(nx, 0)) * static_cast<std::size_t>(std::max(ny, 0));
  }
  return n;
}

std::vector<float> sample_descriptors(std::span<const DenseSiftField> fields, std::size_t cap, std::uint64_t seed) {
  std::size_t total = 0;
  for (const auto& f : fields) total += f.count();
  DescriptorSampler sampler(total, cap, seed);
  for (const auto& f : fields) sampler.consume(f);
  return sampler.take();
}

int nearest_word(const Vocabulary& vocab, std::span<const float> x) {
  if (x.size() != static_cast<std::size_t>(vocab.dimension)) fail(ErrorKind::kValidation, "descriptor dimension mismatch");
  return nearest(vocab.centroids.data(), vocab.size(), vocab.dimension, x.data(), nullptr);
}

WordField quantize(const DenseSiftField& field, const Vocabulary& vocab) {
  validate(vocab);
  if (vocab.dimension != kDescriptorSize) fail(ErrorKind::kValidation, "vocabulary is not over SIFT descriptors");
  WordField out;
  out.width = field.width;
  out.height = field.height;
  out.step = field.step;
  out.num_words = vocab.size();
  for (const auto& layer : field.layers) {
    WordLayer wl{layer.x0, layer.y0, layer.nx, layer.ny, std::vector<std::uint16_t>(layer.count())};
    for (std::size_t p = 0; p < layer.count(); ++p) {
      wl.words[p] = static_cast<std::uint16_t>(
          nearest(vocab.centroids.data(), vocab.size(), kDescriptorSize, layer.descriptors.data() + p * kDescriptorSize,
                  nullptr));
    }
    out.layers.push_back(std::move(wl));
  }
  return out;
}

std::vector<std::uint32_t> pyramid_counts(const WordField& words, const Roi& window) {
  if (!window.within(words.width, words.height)) fail(ErrorKind::kBounds, "PHOW window outside image");
  const std::size_t k = static_cast<std::size_t>(words.num_words);
  std::vector<std::uint32_t> counts(kPyramidCells * k, 0);
  const int step = words.step;
  for (const auto& layer : words.layers) {
    if (layer.nx == 0) continue;
    const int i0 = std::max(0, ceil_div(window.x - layer.x0, step));
    const int i1 = std::min(layer.nx - 1, floor_div(window.right() - 1 - layer.x0, step));
    const int j0 = std::max(0, ceil_div(window.y - layer.y0, step));
    const int j1 = std::min(layer.ny - 1, floor_div(window.bottom() - 1 - layer.y0, step));
    for (int j = j0; j <= j1; ++j) {
      const int ry = layer.y0 + j * step - window.y;
      const int c1y = 2 * ry / window.h;
      const int c2y = 4 * ry / window.h;
      for (int i = i0; i <= i1; ++i) {
        const int rx = layer.x0 + i * step - window.x;
        const std::size_t word = layer.words[static_cast<std::size_t>(j) * layer.nx + i];
        const std::size_t c1 = static_cast<std::size_t>(c1y * 2 + 2 * rx / window.w);
        const std::size_t c2 = static_cast<std::size_t>(4 + c2y * 4 + 4 * rx / window.w);
        ++counts[c1 * k + word];
        ++counts[c2 * k + word];
      }
    }
  }
  return counts;
}

PhowEncoding encode_window(const WordField& words, const Roi& window) {
  const auto counts = pyramid_counts(words, window);
  PhowEncoding enc;
  enc.values.assign(counts.size(), 0.0);
  const double total = std::accumulate(counts.begin(), counts.end(), 0.0);
  enc.empty = total == 0.0;
  if (enc.empty) return enc;
  for (std::size_t i = 0; i < counts.size(); ++i) enc.values[i] = counts[i] / total;
  return enc;
}

PhowEncoding encode_window(const DenseSiftField& field, const Vocabulary& vocab, const Roi& window) {
  return encode_window(quantize(field, vocab), window);
}

}  // namespace cargoscan::phow
