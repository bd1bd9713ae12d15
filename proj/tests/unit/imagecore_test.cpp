#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>

#include "cargoscan/common/error.hpp"
#include "cargoscan/common/rng.hpp"
#include "cargoscan/imagecore/filter.hpp"
#include "cargoscan/imagecore/pgm.hpp"
#include "cargoscan/imagecore/preprocess.hpp"

namespace cargoscan::imagecore {
namespace {

namespace fs = std::filesystem;

std::string raw_pgm(int w, int h, const std::vector<unsigned>& values, int maxval = 65535) {
  std::string s = "P5\n" + std::to_string(w) + " " + std::to_string(h) + "\n" + std::to_string(maxval) + "\n";
  for (unsigned v : values) {
    s.push_back(static_cast<char>((v >> 8) & 0xFF));
    s.push_back(static_cast<char>(v & 0xFF));
  }
  return s;
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

fs::path temp_dir() {
  auto dir = fs::temp_directory_path() / ("cargoscan_imagecore_" + std::to_string(::getpid()));
  fs::create_directories(dir);
  return dir;
}

TEST(Pgm, DecodesSixteenBitSamples) {
  const auto img = decode_pgm16(raw_pgm(2, 2, {0, 65535, 32768, 65535}));
  ASSERT_EQ(img.width(), 2);
  ASSERT_EQ(img.height(), 2);
  EXPECT_EQ(img(0, 0), 0.0);
  EXPECT_EQ(img(1, 0), 1.0);
  EXPECT_DOUBLE_EQ(img(0, 1), 32768.0 / 65535.0);
  EXPECT_NEAR(img(0, 1), 0.5000076, 1e-7);
  EXPECT_EQ(img(1, 1), 1.0);
}

TEST(Pgm, RejectsMalformedInput) {
  EXPECT_EQ(kind_of([] { decode_pgm16(""); }), ErrorKind::kFormat);
  EXPECT_EQ(kind_of([] { decode_pgm16("P2\n2 2\n65535\n"); }), ErrorKind::kFormat);
  EXPECT_EQ(kind_of([] { decode_pgm16("P5\n2 x\n65535\n"); }), ErrorKind::kFormat);
  EXPECT_EQ(kind_of([] { decode_pgm16(raw_pgm(2, 2, {1, 2, 3})); }), ErrorKind::kFormat);
  std::string eight_bit = "P5\n2 1\n255\n";
  eight_bit += "ab";
  EXPECT_EQ(kind_of([&] { decode_pgm16(eight_bit); }), ErrorKind::kUnsupportedDepth);
}

TEST(Pgm, ZeroLengthFileIsFormatError) {
  const auto path = temp_dir() / "empty.pgm";
  write_file(path, "");
  EXPECT_EQ(kind_of([&] { load_image(path); }), ErrorKind::kFormat);
  EXPECT_EQ(kind_of([&] { load_image(temp_dir() / "missing.pgm"); }), ErrorKind::kIo);
}

TEST(Pgm, LargestScannerFrameKeepsDimensions) {
  TransmissionImage img(2570, 850, 0.25);
  const auto path = temp_dir() / "big.pgm";
  save_image(path, img);
  const auto back = load_image(path);
  EXPECT_EQ(back.width(), 2570);
  EXPECT_EQ(back.height(), 850);
}

TEST(Pgm, SixteenBitRoundTripIsExactOnTheQuantizationGrid) {
  Rng rng(7);
  TransmissionImage img(17, 9, 0.0);
  for (double& v : img.pixels.values()) v = static_cast<double>(rng.below(65536)) / 65535.0;
  EXPECT_EQ(decode_pgm16(encode_pgm16(img)).pixels, img.pixels);
}

TEST(Pgm, CommentsInHeaderAreSkipped) {
  std::string s = "P5\n# scanner frame\n1 1\n65535\n";
  s += std::string("\xFF\xFF", 2);
  EXPECT_EQ(decode_pgm16(s)(0, 0), 1.0);
}

TEST(Pgm, SidecarSetsPixelPitch) {
  const auto path = temp_dir() / "meta.pgm";
  save_image(path, TransmissionImage(3, 3, 0.5));
  write_file(sidecar_path(path), "# metadata\npixel_pitch_mm = 5.5\nsource=unit test\n");
  EXPECT_DOUBLE_EQ(load_image(path).pixel_pitch_mm, 5.5);
  const auto meta = parse_metadata(read_file(sidecar_path(path)));
  EXPECT_EQ(meta.at("source"), "unit test");
  EXPECT_EQ(parse_metadata(format_metadata(meta)), meta);
}

TEST(Stripes, RemovesAllZeroColumn) {
  PreprocessConfig cfg;
  TransmissionImage img(10, 6, 0.7);
  for (int y = 0; y < 6; ++y) img(4, y) = 0.0;
  const auto r = remove_black_stripes_detailed(img, cfg);
  EXPECT_EQ(r.image.width(), 9);
  EXPECT_EQ(r.removed_columns, std::vector<int>{4});
}

TEST(Stripes, NoZerosIsIdentity) {
  PreprocessConfig cfg;
  TransmissionImage img(5, 4, 0.3);
  img(2, 1) = 0.9;
  EXPECT_EQ(remove_black_stripes(img, cfg).pixels, img.pixels);
}

TEST(Stripes, HalfZeroColumnIsRetained) {
  PreprocessConfig cfg;
  TransmissionImage img(3, 10, 0.5);
  int zeros = 0;
  for (int y = 0; y < 10; y += 2) {
    img(1, y) = 0.0;
    ++zeros;
  }
  ASSERT_EQ(zeros, 5);  // 50% < 99%
  const auto out = remove_black_stripes(img, cfg);
  EXPECT_EQ(out.width(), 3);
  EXPECT_EQ(out(1, 0), 0.0);
}

TEST(Stripes, AllColumnsQualifyIsEmptyImageError) {
  PreprocessConfig cfg;
  EXPECT_EQ(kind_of([&] { remove_black_stripes(TransmissionImage(4, 4, 0.0), cfg); }),
            ErrorKind::kEmptyImage);
}

TEST(Normalize, ScalesByAirMedian) {
  PreprocessConfig cfg;
  cfg.air_band_rows = 3;
  TransmissionImage img(2, 5, 0.4);
  for (int y = 0; y < 3; ++y) img(0, y) = 0.8;
  for (int y = 0; y < 3; ++y) img(1, y) = 0.5;
  img(1, 4) = 0.7;
  const auto out = normalize_columns(img, cfg);
  EXPECT_DOUBLE_EQ(out(0, 4), 0.5);
  EXPECT_EQ(out(1, 4), 1.0);  // 0.7 / 0.5 clamped
  EXPECT_DOUBLE_EQ(out(1, 3), 0.8);
}

TEST(Normalize, AlreadyNormalizedIsUnchanged) {
  PreprocessConfig cfg;
  cfg.air_band_rows = 4;
  Rng rng(3);
  TransmissionImage img(6, 12, 1.0);
  for (int y = 4; y < 12; ++y)
    for (int x = 0; x < 6; ++x) img(x, y) = rng.uniform(0.05, 1.0);
  EXPECT_EQ(normalize_columns(img, cfg).pixels, img.pixels);
}

TEST(Normalize, ZeroAirColumnsAreFlaggedNotScaled) {
  PreprocessConfig cfg;
  cfg.air_band_rows = 2;
  TransmissionImage img(3, 4, 0.5);
  for (int y = 0; y < 2; ++y) img(1, y) = 0.0;
  const auto r = normalize_columns_detailed(img, cfg);
  EXPECT_EQ(r.flagged_columns, std::vector<int>{1});
  EXPECT_EQ(r.image(1, 3), 0.5);
  EXPECT_EQ(r.image(0, 3), 1.0);
}

TEST(Normalize, AirBandMedianBecomesOne) {
  PreprocessConfig cfg;
  cfg.air_band_rows = 7;
  Rng rng(11);
  TransmissionImage img(20, 30, 0.0);
  for (int x = 0; x < 20; ++x) {
    const double gain = rng.uniform(0.8, 1.0);
    for (int y = 0; y < 30; ++y) img(x, y) = gain * (y < 7 ? rng.uniform(0.97, 1.0) : rng.uniform(0.1, 1.0));
  }
  const auto out = normalize_columns(img, cfg);
  for (int x = 0; x < 20; ++x) {
    std::vector<double> band;
    for (int y = 0; y < 7; ++y) band.push_back(out(x, y));
    EXPECT_EQ(median_inplace(band), 1.0) << "column " << x;
  }
}

TEST(Normalize, BandTallerThanImageIsRejected) {
  PreprocessConfig cfg;
  cfg.air_band_rows = 5;
  EXPECT_EQ(kind_of([&] { normalize_columns(TransmissionImage(3, 5), cfg); }), ErrorKind::kValidation);
}

TEST(Despeckle, IsolatedOutlierReplaced) {
  PreprocessConfig cfg;
  TransmissionImage img(7, 7, 0.5);
  img(3, 3) = 1.0;
  const auto out = despeckle(img, cfg);
  EXPECT_EQ(out(3, 3), 0.5);
  EXPECT_EQ(out.pixels, TransmissionImage(7, 7, 0.5).pixels);
}

TEST(Despeckle, UniformIsUnchanged) {
  PreprocessConfig cfg;
  TransmissionImage img(5, 8, 0.37);
  EXPECT_EQ(despeckle(img, cfg).pixels, img.pixels);
}

// Reference: per-pixel brute-force median / MAD over the clipped window.
TransmissionImage despeckle_reference(const TransmissionImage& img, double k) {
  TransmissionImage out = img;
  for (int y = 0; y < img.height(); ++y) {
    for (int x = 0; x < img.width(); ++x) {
      std::vector<double> nb;
      for (int dy = -1; dy <= 1; ++dy)
        for (int dx = -1; dx <= 1; ++dx) {
          const int xx = x + dx, yy = y + dy;
          if (xx >= 0 && yy >= 0 && xx < img.width() && yy < img.height()) nb.push_back(img(xx, yy));
        }
      std::vector<double> sorted = nb;
      std::sort(sorted.begin(), sorted.end());
      const std::size_t n = sorted.size();
      const double med = n % 2 ? sorted[n / 2] : (sorted[n / 2 - 1] + sorted[n / 2]) / 2;
      std::vector<double> dev;
      for (double v : nb) dev.push_back(std::abs(v - med));
      std::sort(dev.begin(), dev.end());
      const double mad = n % 2 ? dev[n / 2] : (dev[n / 2 - 1] + dev[n / 2]) / 2;
      if (std::abs(img(x, y) - med) > std::max(k * mad, 0.1)) out(x, y) = med;
    }
  }
  return out;
}

TEST(Despeckle, CheckerboardUnchangedAndMatchesReference) {
  PreprocessConfig cfg;
  TransmissionImage img(9, 6, 0.0);
  for (int y = 0; y < 6; ++y)
    for (int x = 0; x < 9; ++x) img(x, y) = ((x + y) % 2 == 0) ? 0.4 : 0.6;
  const auto ref = despeckle_reference(img, cfg.despeckle_threshold);
  EXPECT_EQ(ref.pixels, img.pixels);
  EXPECT_EQ(despeckle(img, cfg).pixels, img.pixels);
}

TEST(Despeckle, MatchesReferenceOnNoisyImages) {
  PreprocessConfig cfg;
  Rng rng(5);
  for (int trial = 0; trial < 5; ++trial) {
    TransmissionImage img(23, 17, 0.0);
    for (double& v : img.pixels.values()) v = rng.uniform(0.3, 0.5);
    for (int i = 0; i < 12; ++i) img(rng.range(0, 22), rng.range(0, 16)) = rng.bernoulli(0.5) ? 1.0 : 0.0;
    EXPECT_EQ(despeckle(img, cfg).pixels, despeckle_reference(img, cfg.despeckle_threshold).pixels);
  }
}

TEST(LogTransform, AnchorsAndMidpoint) {
  PreprocessConfig cfg;
  TransmissionImage img(3, 1, 1.0);
  img(1, 0) = cfg.log_floor;
  img(2, 0) = 0.5;
  const auto out = log_transform(img, cfg);
  EXPECT_EQ(out(0, 0), 0.0);
  EXPECT_FALSE(std::signbit(out(0, 0)));
  EXPECT_DOUBLE_EQ(out(1, 0), 1.0);
  EXPECT_NEAR(out(2, 0), std::log(2.0) / std::log(10000.0), 1e-15);
  EXPECT_NEAR(out(2, 0), 0.07525, 1e-5);
}

TEST(LogTransform, StrictlyDecreasingOverDomain) {
  PreprocessConfig cfg;
  double prev = log_attenuation(cfg.log_floor, cfg.log_floor);
  for (int i = 1; i <= 2000; ++i) {
    const double v = cfg.log_floor + (1.0 - cfg.log_floor) * i / 2000.0;
    const double cur = log_attenuation(v, cfg.log_floor);
    EXPECT_LT(cur, prev) << v;
    prev = cur;
  }
}

TEST(GaussianBlur, ConstantIsPreserved) {
  RealGrid g(31, 19, 0.625);
  const auto out = gaussian_blur(g, 2.0);
  for (double v : out.values()) EXPECT_NEAR(v, 0.625, 1e-9);
}

TEST(GaussianBlur, ImpulseGivesKernelOuterProduct) {
  const double sigma = 1.5;
  const int r = static_cast<int>(std::ceil(3 * sigma));
  // Independent kernel: sampled exp(-t^2 / 2 sigma^2) normalized over [-r, r].
  std::vector<double> k(2 * r + 1);
  double sum = 0;
  for (int t = -r; t <= r; ++t) sum += k[t + r] = std::exp(-t * t / (2 * sigma * sigma));
  for (double& v : k) v /= sum;

  RealGrid g(41, 41, 0.0);
  g(20, 20) = 1.0;
  const auto out = gaussian_blur(g, sigma);
  double total = 0;
  for (int y = 0; y < 41; ++y)
    for (int x = 0; x < 41; ++x) {
      const int dx = x - 20, dy = y - 20;
      const double expected = (std::abs(dx) <= r && std::abs(dy) <= r) ? k[dx + r] * k[dy + r] : 0.0;
      EXPECT_NEAR(out(x, y), expected, 1e-15);
      total += out(x, y);
    }
  EXPECT_NEAR(total, 1.0, 1e-6);
}

TEST(GaussianBlur, CommutesWithMirroring) {
  Rng rng(9);
  RealGrid g(37, 23);
  for (double& v : g.values()) v = rng.uniform();
  for (double sigma : {1.0, 2.0, 4.0, 8.0}) {
    const auto a = gaussian_blur(mirror_horizontal(g), sigma);
    const auto b = mirror_horizontal(gaussian_blur(g, sigma));
    for (std::size_t i = 0; i < a.size(); ++i) EXPECT_NEAR(a.data()[i], b.data()[i], 1e-9);
  }
}

TEST(GaussianBlur, RejectsNonPositiveSigma) {
  EXPECT_EQ(kind_of([] { gaussian_blur(RealGrid(3, 3), 0.0); }), ErrorKind::kValidation);
}

TEST(ReflectIndex, HalfSampleSymmetric) {
  EXPECT_EQ(reflect_index(-1, 5), 0);
  EXPECT_EQ(reflect_index(-2, 5), 1);
  EXPECT_EQ(reflect_index(5, 5), 4);
  EXPECT_EQ(reflect_index(6, 5), 3);
  EXPECT_EQ(reflect_index(-7, 3), 0);
  EXPECT_EQ(reflect_index(-5, 3), 1);
  EXPECT_EQ(reflect_index(12, 1), 0);
}

// A raw scanner-like frame: column gains, air band, smooth body, isolated
// speckles and one misfire stripe.
TransmissionImage raw_frame(std::uint64_t seed) {
  Rng rng(seed);
  const int w = 64, h = 48;
  RealGrid body(w, h, 1.0);
  for (int y = 10; y < h; ++y)
    for (int x = 0; x < w; ++x) body(x, y) = rng.uniform(0.2, 0.9);
  body = gaussian_blur(body, 2.0);
  for (int y = 0; y < 10; ++y)
    for (int x = 0; x < w; ++x) body(x, y) = 1.0 - 0.003 * rng.uniform();
  TransmissionImage img(w, h, 0.0);
  for (int x = 0; x < w; ++x) {
    const double gain = rng.uniform(0.85, 1.0);
    for (int y = 0; y < h; ++y) img(x, y) = gain * body(x, y);
  }
  for (int i = 0; i < 8; ++i) {
    const int x = rng.range(2, w - 3);
    const int y = rng.range(12, h - 3);
    img(x, y) = rng.bernoulli(0.5) ? 0.0 : 1.0;
  }
  const int stripe = rng.range(0, w - 1);
  for (int y = 0; y < h; ++y) img(stripe, y) = 0.0;
  return img;
}

TEST(PreprocessChain, IdempotentOnItsOutput) {
  PreprocessConfig cfg;
  cfg.air_band_rows = 8;
  for (std::uint64_t seed = 1; seed <= 12; ++seed) {
    const auto once = preprocess(raw_frame(seed), cfg);
    EXPECT_EQ(once.removed_columns.size(), 1u);
    const auto twice = preprocess(once.image, cfg);
    ASSERT_EQ(twice.image.width(), once.image.width());
    for (std::size_t i = 0; i < once.image.pixels.size(); ++i) {
      ASSERT_NEAR(twice.image.pixels.data()[i], once.image.pixels.data()[i], 1e-9) << "seed " << seed;
    }
  }
}

TEST(PreprocessChain, RejectsBadConfig) {
  PreprocessConfig cfg;
  cfg.log_floor = 0.0;
  EXPECT_EQ(kind_of([&] { preprocess(TransmissionImage(4, 40), cfg); }), ErrorKind::kConfig);
  cfg = {};
  cfg.air_band_rows = 0;
  EXPECT_EQ(kind_of([&] { preprocess(TransmissionImage(4, 40), cfg); }), ErrorKind::kConfig);
}

TEST(Validate, RejectsOutOfRangePixels) {
  TransmissionImage img(2, 2, 0.5);
  EXPECT_NO_THROW(validate(img));
  img(0, 0) = 1.5;
  EXPECT_EQ(kind_of([&] { validate(img); }), ErrorKind::kValidation);
  img(0, 0) = std::nan("");
  EXPECT_EQ(kind_of([&] { validate(img); }), ErrorKind::kValidation);
}

}  // namespace
}  // namespace cargoscan::imagecore
