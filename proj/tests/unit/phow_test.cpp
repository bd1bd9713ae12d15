#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <numeric>

#include "cargoscan/common/error.hpp"
#include "cargoscan/common/rng.hpp"
#include "cargoscan/imagecore/filter.hpp"
#include "cargoscan/phow/phow.hpp"

namespace cargoscan::phow {
namespace {

using imagecore::reflect_index;

RealGrid texture(std::uint64_t seed, int w, int h) {
  Rng rng(seed);
  RealGrid g(w, h);
  for (double& v : g.values()) v = rng.uniform();
  return imagecore::gaussian_blur(g, 1.5);
}

ErrorKind kind_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  ADD_FAILURE() << "expected an Error";
  return ErrorKind::kInput;
}

// Direct per-pixel accumulation: every pixel votes into the 4 x 4 bins with
// weight (1 - |dx|/b)(1 - |dy|/b) and into two orientation bins.
std::vector<double> reference_descriptor(const RealGrid& img, int b, int px, int py) {
  const RealGrid s = imagecore::gaussian_blur(img, b / 6.0);
  const int w = s.width(), h = s.height();
  std::vector<double> d(128, 0.0);
  for (int by = 0; by < 4; ++by)
    for (int bx = 0; bx < 4; ++bx) {
      const double cx = px + (bx - 1.5) * b, cy = py + (by - 1.5) * b;
      for (int y = static_cast<int>(cy) - b; y <= static_cast<int>(cy) + b; ++y)
        for (int x = static_cast<int>(cx) - b; x <= static_cast<int>(cx) + b; ++x) {
          const double wx = std::max(0.0, 1.0 - std::abs(x - cx) / b);
          const double wy = std::max(0.0, 1.0 - std::abs(y - cy) / b);
          if (wx == 0 || wy == 0) continue;
          const int xr = reflect_index(x, w), yr = reflect_index(y, h);
          const double gx = 0.5 * (s(reflect_index(xr + 1, w), yr) - s(reflect_index(xr - 1, w), yr));
          const double gy = 0.5 * (s(xr, reflect_index(yr + 1, h)) - s(xr, reflect_index(yr - 1, h)));
          const double m = std::hypot(gx, gy);
          double t = std::atan2(gy, gx) * 4 / std::numbers::pi;
          if (t < 0) t += 8;
          const int o = static_cast<int>(std::floor(t)) % 8;
          const double f = t - std::floor(t);
          d[(by * 4 + bx) * 8 + o] += wx * wy * m * (1 - f);
          d[(by * 4 + bx) * 8 + (o + 1) % 8] += wx * wy * m * f;
        }
    }
  double n = 0;
  for (double v : d) n += v * v;
  if (n == 0) return d;
  n = std::sqrt(n);
  double m = 0;
  for (double& v : d) {
    v = std::min(0.2, v / n);
    m += v * v;
  }
  for (double& v : d) v /= std::sqrt(m);
  return d;
}

TEST(DenseSift, ConstantImageGivesZeroDescriptors) {
  const auto field = dense_sift(RealGrid(64, 64, 0.4), SiftParams{});
  ASSERT_EQ(field.layers.size(), 4u);
  EXPECT_GT(field.count(), 0u);
  for (const auto& l : field.layers)
    for (float v : l.descriptors) ASSERT_EQ(v, 0.0f);
}

TEST(DenseSift, GridAndSupportRule) {
  const auto field = dense_sift(texture(1, 64, 50), SiftParams{});
  for (const auto& l : field.layers) {
    const int b = l.bin_size;
    EXPECT_EQ(l.x0 % 3, 0);
    EXPECT_GE(l.x0, 2 * b);
    EXPECT_LT(l.x0 - 3, 2 * b);
    EXPECT_LE(l.x0 + (l.nx - 1) * 3 + 2 * b, 64);
    EXPECT_GT(l.x0 + l.nx * 3 + 2 * b, 64);
    EXPECT_LE(l.y0 + (l.ny - 1) * 3 + 2 * b, 50);
    EXPECT_EQ(l.descriptors.size(), l.count() * 128);
  }
}

TEST(DenseSift, DescriptorsAreNormalisedAndNonNegative) {
  const auto field = dense_sift(texture(2, 80, 70), SiftParams{});
  for (const auto& l : field.layers)
    for (std::size_t p = 0; p < l.count(); ++p) {
      double n = 0;
      for (int c = 0; c < 128; ++c) {
        const float v = l.descriptors[p * 128 + c];
        ASSERT_GE(v, 0.0f);
        n += static_cast<double>(v) * v;
      }
      ASSERT_LE(std::sqrt(n), 1.0 + 1e-6);
    }
}

TEST(DenseSift, MatchesDirectAccumulation) {
  const RealGrid img = texture(3, 72, 66);
  const auto field = dense_sift(img, SiftParams{});
  for (const auto& l : field.layers) {
    for (auto [i, j] : {std::pair{0, 0}, {l.nx - 1, l.ny - 1}, {l.nx / 2, l.ny / 3}}) {
      const auto ref = reference_descriptor(img, l.bin_size, l.x0 + 3 * i, l.y0 + 3 * j);
      const auto got = l.descriptor(i, j);
      for (int c = 0; c < 128; ++c) ASSERT_NEAR(got[c], ref[c], 1e-5) << "b=" << l.bin_size << " c=" << c;
    }
  }
}

TEST(DenseSift, StepEdgeMassIsNormalToEdge) {
  RealGrid img(64, 64, 0.2);
  for (int y = 0; y < 64; ++y)
    for (int x = 32; x < 64; ++x) img(x, y) = 0.8;
  const auto field = dense_sift(img, SiftParams{});
  int straddling = 0;
  for (const auto& l : field.layers)
    for (int j = 0; j < l.ny; ++j)
      for (int i = 0; i < l.nx; ++i) {
        const int px = l.x0 + 3 * i;
        if (std::abs(px - 32) > l.bin_size) continue;
        ++straddling;
        double normal = 0, total = 0;
        const auto d = l.descriptor(i, j);
        for (int c = 0; c < 128; ++c) {
          total += d[c];
          if (c % 8 == 0 || c % 8 == 4) normal += d[c];
        }
        ASSERT_GT(total, 0);
        EXPECT_GT(normal / total, 0.99);
      }
  EXPECT_GT(straddling, 0);
}

TEST(DenseSift, RegionMatchesWholeImage) {
  const RealGrid img = texture(4, 120, 90);
  const auto full = dense_sift(img, SiftParams{});
  const Roi region{37, 20, 50, 41};
  const auto part = dense_sift(img, SiftParams{}, region);
  for (std::size_t k = 0; k < full.layers.size(); ++k) {
    const auto& a = full.layers[k];
    const auto& b = part.layers[k];
    ASSERT_GT(b.count(), 0u);
    EXPECT_GE(b.x0, region.x);
    EXPECT_LT(b.x0 + 3 * (b.nx - 1), region.right());
    for (int j = 0; j < b.ny; ++j)
      for (int i = 0; i < b.nx; ++i) {
        const int fi = (b.x0 - a.x0) / 3 + i, fj = (b.y0 - a.y0) / 3 + j;
        const auto x = a.descriptor(fi, fj), y = b.descriptor(i, j);
        ASSERT_TRUE(std::equal(x.begin(), x.end(), y.begin()));
      }
  }
}

TEST(DenseSift, RejectsSmallImagesAndOddBins) {
  EXPECT_EQ(kind_of([] { dense_sift(RealGrid(40, 100), SiftParams{}); }), ErrorKind::kSize);
  SiftParams odd;
  odd.bin_sizes = {5};
  EXPECT_EQ(kind_of([&] { dense_sift(RealGrid(64, 64), odd); }), ErrorKind::kConfig);
}

TEST(Vocabulary, SingleClusterIsSampleMean) {
  Rng rng(5);
  std::vector<float> x(50 * 4);
  for (float& v : x) v = static_cast<float>(rng.uniform());
  const auto v = learn_vocabulary(x, 4, 1, 9);
  ASSERT_EQ(v.size(), 1);
  for (int c = 0; c < 4; ++c) {
    double m = 0;
    for (int i = 0; i < 50; ++i) m += x[i * 4 + c];
    EXPECT_NEAR(v.centroid(0)[c], m / 50, 1e-6);
  }
}

TEST(Vocabulary, RepeatedDistinctPointsAreRecovered) {
  const std::vector<std::vector<float>> pts{{0, 0, 0}, {1, 0, 0}, {0, 5, 0}, {2, 2, 2}, {-3, 1, 4}};
  std::vector<float> x;
  for (int r = 0; r < 7; ++r)
    for (const auto& p : pts) x.insert(x.end(), p.begin(), p.end());
  const auto v = learn_vocabulary(x, 3, 5, 1);
  EXPECT_EQ(v.inertia, 0.0);
  for (const auto& p : pts) {
    bool found = false;
    for (int c = 0; c < 5; ++c) found |= std::equal(p.begin(), p.end(), v.centroid(c).begin());
    EXPECT_TRUE(found);
  }
}

TEST(Vocabulary, SeparatedBlobsGiveBlobMeans) {
  Rng rng(77);
  std::vector<float> mean_a(128), mean_b(128);
  for (int c = 0; c < 128; ++c) {
    mean_a[c] = static_cast<float>(rng.uniform());
    mean_b[c] = mean_a[c] + 2.0f;
  }
  std::vector<float> x;
  for (int i = 0; i < 400; ++i) {
    const auto& m = i % 2 ? mean_a : mean_b;
    for (int c = 0; c < 128; ++c) x.push_back(m[c] + static_cast<float>(0.05 * rng.normal()));
  }
  const auto v = learn_vocabulary(x, 128, 2, 3);
  for (const auto* m : {&mean_a, &mean_b}) {
    double best = 1e30;
    for (int k = 0; k < 2; ++k) {
      double worst = 0;
      for (int c = 0; c < 128; ++c) worst = std::max(worst, std::abs(static_cast<double>(v.centroid(k)[c]) - (*m)[c]));
      best = std::min(best, worst);
    }
    EXPECT_LT(best, 0.1);
  }
}

TEST(Vocabulary, TooFewDistinctPointsIsDegenerate) {
  std::vector<float> x(20 * 2, 1.0f);
  x[0] = 0.0f;
  EXPECT_EQ(kind_of([&] { learn_vocabulary(x, 2, 3, 1); }), ErrorKind::kDegenerateInput);
}

TEST(Vocabulary, DeterministicPerSeed) {
  Rng rng(8);
  std::vector<float> x(300 * 8);
  for (float& v : x) v = static_cast<float>(rng.uniform());
  EXPECT_EQ(learn_vocabulary(x, 8, 10, 42), learn_vocabulary(x, 8, 10, 42));
}

Vocabulary random_vocabulary(std::uint64_t seed, int k) {
  Rng rng(seed);
  Vocabulary v;
  v.centroids.resize(static_cast<std::size_t>(k) * 128);
  for (float& c : v.centroids) c = static_cast<float>(rng.uniform() * 0.15);
  return v;
}

TEST(Quantize, NearestWordMatchesBruteForce) {
  const auto vocab = random_vocabulary(10, 300);
  Rng rng(11);
  for (int t = 0; t < 1000; ++t) {
    std::vector<float> x(128);
    for (float& v : x) v = static_cast<float>(rng.uniform() * 0.15);
    if (t % 50 == 0) std::copy_n(vocab.centroid(t % 300).begin(), 128, x.begin());
    int best = 0;
    double best_d = 1e300;
    for (int c = 0; c < 300; ++c) {
      double d = 0;
      for (int j = 0; j < 128; ++j) d += std::pow(static_cast<double>(x[j]) - vocab.centroid(c)[j], 2);
      if (d < best_d) {
        best_d = d;
        best = c;
      }
    }
    ASSERT_EQ(nearest_word(vocab, x), best);
  }
}

TEST(Quantize, TiesGoToLowestIndex) {
  Vocabulary v;
  v.dimension = 1;
  v.centroids = {2.0f, 0.0f, 1.0f, 0.0f};
  EXPECT_EQ(nearest_word(v, std::vector<float>{0.0f}), 1);
  EXPECT_EQ(nearest_word(v, std::vector<float>{1.5f}), 0);
  EXPECT_EQ(nearest_word(v, std::vector<float>{0.5f}), 1);
}

TEST(Encode, LengthAndUnitMassOnTexturedWindow) {
  const RealGrid img = texture(12, 160, 150);
  const auto field = dense_sift(img, SiftParams{});
  const auto vocab = random_vocabulary(13, 300);
  const auto enc = encode_window(field, vocab, Roi{16, 11, 128, 128});
  ASSERT_EQ(enc.values.size(), 6000u);
  EXPECT_FALSE(enc.empty);
  EXPECT_NEAR(std::accumulate(enc.values.begin(), enc.values.end(), 0.0), 1.0, 1e-9);
  for (double v : enc.values) EXPECT_GE(v, 0.0);
}

TEST(Encode, PyramidLevelsAreConsistent) {
  const RealGrid img = texture(14, 120, 100);
  const auto field = dense_sift(img, SiftParams{});
  const auto words = quantize(field, random_vocabulary(15, 50));
  const Roi win{7, 9, 97, 83};
  const auto counts = pyramid_counts(words, win);
  std::vector<std::uint32_t> direct(50, 0);
  for (const auto& l : words.layers)
    for (int j = 0; j < l.ny; ++j)
      for (int i = 0; i < l.nx; ++i)
        if (win.contains(l.x0 + 3 * i, l.y0 + 3 * j)) ++direct[l.words[j * l.nx + i]];
  for (int w = 0; w < 50; ++w) {
    std::uint32_t lvl1 = 0, lvl2 = 0;
    for (int c = 0; c < 4; ++c) lvl1 += counts[c * 50 + w];
    for (int c = 4; c < 20; ++c) lvl2 += counts[c * 50 + w];
    EXPECT_EQ(lvl1, direct[w]);
    EXPECT_EQ(lvl2, direct[w]);
  }
}

TEST(Encode, SingleWordSingleCell) {
  WordField f;
  f.width = f.height = 100;
  f.num_words = 300;
  f.layers.push_back(WordLayer{30, 30, 2, 2, {7, 7, 7, 7}});  // points (30|33, 30|33)
  const auto enc = encode_window(f, Roi{28, 28, 40, 40});  // all points fall in cell (0,0) at both levels
  for (std::size_t i = 0; i < enc.values.size(); ++i) {
    const bool expected = i == 7 || i == 4 * 300 + 7;
    EXPECT_EQ(enc.values[i], expected ? 0.5 : 0.0) << i;
  }
}

TEST(Encode, WindowWithoutPointsIsFlagged) {
  WordField f;
  f.width = f.height = 100;
  f.num_words = 300;
  f.layers.push_back(WordLayer{30, 30, 1, 1, {3}});
  const auto enc = encode_window(f, Roi{50, 50, 20, 20});
  EXPECT_TRUE(enc.empty);
  EXPECT_EQ(enc.values.size(), 6000u);
  EXPECT_EQ(std::accumulate(enc.values.begin(), enc.values.end(), 0.0), 0.0);
  EXPECT_EQ(kind_of([&] { encode_window(f, Roi{90, 90, 20, 20}); }), ErrorKind::kBounds);
}

TEST(Encode, Deterministic) {
  const auto field = dense_sift(texture(16, 90, 90), SiftParams{});
  const auto vocab = random_vocabulary(17, 300);
  EXPECT_EQ(encode_window(field, vocab, Roi{0, 0, 90, 90}).values, encode_window(field, vocab, Roi{0, 0, 90, 90}).values);
}

TEST(Sampling, RespectsCapAndSeed) {
  std::vector<DenseSiftField> fields{dense_sift(texture(18, 70, 70), SiftParams{}),
                                     dense_sift(texture(19, 70, 70), SiftParams{})};
  const std::size_t total = fields[0].count() + fields[1].count();
  EXPECT_EQ(sample_descriptors(fields, total + 10, 1).size(), total * 128);
  const auto a = sample_descriptors(fields, 100, 1);
  EXPECT_EQ(a.size(), 100u * 128);
  EXPECT_EQ(a, sample_descriptors(fields, 100, 1));
  EXPECT_NE(a, sample_descriptors(fields, 100, 2));
}

}  // namespace
}  // namespace cargoscan::phow
