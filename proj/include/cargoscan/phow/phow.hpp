#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "cargoscan/common/grid.hpp"
#include "cargoscan/common/rng.hpp"
#include "cargoscan/imagecore/image.hpp"

namespace cargoscan::phow {

using imagecore::Roi;

inline constexpr int kDescriptorSize = 128;  // 4 x 4 spatial x 8 orientation
inline constexpr int kPyramidCells = 20;     // 2x2 + 4x4

struct SiftParams {
  int step = 3;
  std::vector<int> bin_sizes{4, 6, 8, 10};
  bool operator==(const SiftParams&) const = default;
};

void validate(const SiftParams& params);

// Descriptors of one bin size on the regular grid {0, step, 2 step, ...}.
// Only points whose 4b x 4b support [p - 2b, p + 2b) lies inside the image are
// kept; they form the rectangle of grid points x0 + i*step, y0 + j*step.
struct SiftLayer {
  int bin_size = 0;
  int x0 = 0, y0 = 0;
  int nx = 0, ny = 0;
  std::vector<float> descriptors;  // (j * nx + i) * 128

  std::size_t count() const noexcept { return static_cast<std::size_t>(nx) * static_cast<std::size_t>(ny); }
  std::span<const float> descriptor(int i, int j) const {
    return {descriptors.data() + (static_cast<std::size_t>(j) * nx + i) * kDescriptorSize, kDescriptorSize};
  }
};

struct DenseSiftField {
  int width = 0, height = 0;
  int step = 3;
  std::vector<SiftLayer> layers;
  std::size_t count() const noexcept;
};

// Whole image, or only grid points inside `region` (coordinates stay global
// and descriptors equal those of the whole-image call).
DenseSiftField dense_sift(const RealGrid& image, const SiftParams& params);
DenseSiftField dense_sift(const RealGrid& image, const SiftParams& params, const Roi& region);

// Pixels of context each side of a region that dense_sift reads.
int sift_margin(const SiftParams& params);

struct KMeansOptions {
  int max_iterations = 100;
  double tolerance = 1e-4;  // relative inertia change
};

struct Vocabulary {
  int dimension = kDescriptorSize;
  std::vector<float> centroids;  // k * dimension
  int iterations = 0;
  double inertia = 0.0;

  int size() const noexcept { return static_cast<int>(centroids.size() / static_cast<std::size_t>(dimension)); }
  std::span<const float> centroid(int c) const {
    return {centroids.data() + static_cast<std::size_t>(c) * dimension, static_cast<std::size_t>(dimension)};
  }
  bool operator==(const Vocabulary&) const = default;
};

void validate(const Vocabulary& vocab);

// k-means++ seeding then Lloyd iterations. `samples` holds n rows of `dimension`.
Vocabulary learn_vocabulary(std::span<const float> samples, int dimension, int k, std::uint64_t seed,
                            const KMeansOptions& options = {});

// Uniform sample (without replacement, original order kept) of at most `cap`
// descriptors pooled over every layer of every field.
std::vector<float> sample_descriptors(std::span<const DenseSiftField> fields, std::size_t cap, std::uint64_t seed);

// The same draw fed one field at a time; `total` is the pooled descriptor
// count, known up front from dense_sift_count.
class DescriptorSampler {
 public:
  DescriptorSampler(std::size_t total, std::size_t cap, std::uint64_t seed);
  void consume(const DenseSiftField& field);
  std::vector<float> take() { return std::move(out_); }

 private:
  std::size_t needed_;
  std::size_t remaining_;
  Rng rng_;
  std::vector<float> out_;
};

// Number of descriptors dense_sift produces for a width x height image.
std::size_t dense_sift_count(int width, int height, const SiftParams& params);

// Nearest centroid by Euclidean distance; ties go to the lowest index.
int nearest_word(const Vocabulary& vocab, std::span<const float> x);

struct WordLayer {
  int x0 = 0, y0 = 0;
  int nx = 0, ny = 0;
  std::vector<std::uint16_t> words;  // j * nx + i
};

struct WordField {
  int width = 0, height = 0;
  int step = 3;
  int num_words = 0;
  std::vector<WordLayer> layers;
};

WordField quantize(const DenseSiftField& field, const Vocabulary& vocab);

// Raw (4 + 16) x K cell counts of the grid points inside the window, pooled
// over layers. Layout: cell * K + word, level-1 cells row-major, then level-2.
std::vector<std::uint32_t> pyramid_counts(const WordField& words, const Roi& window);

struct PhowEncoding {
  std::vector<double> values;  // L1-normalized, length 20 * K
  bool empty = false;          // no grid point fell inside the window
};

PhowEncoding encode_window(const WordField& words, const Roi& window);
PhowEncoding encode_window(const DenseSiftField& field, const Vocabulary& vocab, const Roi& window);

}  // namespace cargoscan::phow
