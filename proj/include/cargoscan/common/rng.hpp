#pragma once

#include <cstdint>

namespace cargoscan {

// Counter-based generator: draw i of a stream with key K is
// splitmix64_finalize(K + (i + 1) * 0x9E3779B97F4A7C15), i.e. the SplitMix64
// sequence seeded with K. Child streams are keyed by
// splitmix64_finalize(K ^ splitmix64_finalize(index + 0xD1B54A32D192ED03)).
// Every derived distribution below is defined in terms of next_u64() only, so
// sequences are reproducible across platforms and standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t key) : key_(key) {}

  std::uint64_t key() const noexcept { return key_; }
  std::uint64_t counter() const noexcept { return counter_; }

  std::uint64_t next_u64();

  // Uniform in [0, 1) with 53 random bits.
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Uniform integer in [0, n), rejection-sampled (n > 0).
  std::uint64_t below(std::uint64_t n);
  // Uniform integer in [lo, hi] inclusive.
  int range(int lo, int hi);

  // Standard normal via Box-Muller; consumes two draws per call.
  double normal();

  bool bernoulli(double p) { return uniform() < p; }

  Rng split(std::uint64_t index) const;

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

std::uint64_t splitmix64_finalize(std::uint64_t z);

// FNV-1a over a string, for deriving stream keys from names.
std::uint64_t hash_string(const char* text);

}  // namespace cargoscan
