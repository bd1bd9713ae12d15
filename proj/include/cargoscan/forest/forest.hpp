#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

namespace cargoscan::forest {

inline constexpr std::uint8_t kNoncar = 0;
inline constexpr std::uint8_t kCar = 1;

struct TrainingSet {
  int dimension = 0;
  std::vector<float> features;  // rows * dimension
  std::vector<std::uint8_t> labels;
  std::string family;

  TrainingSet() = default;
  explicit TrainingSet(int d, std::string fam = {}) : dimension(d), family(std::move(fam)) {}

  std::size_t rows() const noexcept { return labels.size(); }
  std::span<const float> row(std::size_t i) const {
    return {features.data() + i * static_cast<std::size_t>(dimension), static_cast<std::size_t>(dimension)};
  }
  void add(std::span<const float> x, std::uint8_t label);
  void add(std::span<const double> x, std::uint8_t label);
};

void validate(const TrainingSet& data);

struct ForestConfig {
  int num_trees = 40;
  int mtry = 0;  // 0: floor(sqrt(d))
  std::uint64_t seed = 1;
  int jobs = 1;
  bool operator==(const ForestConfig&) const = default;
};

struct Node {
  int feature = -1;  // -1 marks a leaf
  double threshold = 0.0;  // x <= threshold goes left
  int left = -1;
  int right = -1;
  std::uint32_t noncar = 0;  // training samples reaching the node
  std::uint32_t car = 0;
  bool operator==(const Node&) const = default;
};

struct Tree {
  std::vector<Node> nodes;  // nodes[0] is the root
  bool operator==(const Tree&) const = default;
};

struct ForestModel {
  int dimension = 0;
  int mtry = 0;
  std::uint64_t seed = 0;
  std::vector<Tree> trees;

  int num_trees() const noexcept { return static_cast<int>(trees.size()); }
  bool operator==(const ForestModel&) const = default;
};

void validate(const ForestModel& model);

struct TrainResult {
  ForestModel model;
  // Fraction of out-of-bag trees voting car, per training row; -1 when the
  // row was in every bootstrap sample.
  std::vector<double> oob_scores;
};

ForestModel train(const TrainingSet& data, const ForestConfig& config);
TrainResult train_detailed(const TrainingSet& data, const ForestConfig& config);

int car_votes(const ForestModel& model, std::span<const float> x);
double score(const ForestModel& model, std::span<const float> x);
double score(const ForestModel& model, std::span<const double> x);

// Split machinery exposed for verification.
struct Split {
  int feature = -1;
  double threshold = 0.0;
  double decrease = 0.0;  // n * gini(parent) - nL * gini(L) - nR * gini(R)
};

// Midpoints between consecutive distinct values, ascending.
std::vector<double> candidate_thresholds(std::span<const float> values);

// Best Gini split over `features` for the multiset of rows; ties keep the
// earlier feature and the lower threshold. feature = -1 when none decreases.
Split best_split(const TrainingSet& data, std::span<const std::size_t> rows, std::span<const int> features);

nlohmann::json to_json(const ForestModel& model);
ForestModel forest_from_json(const nlohmann::json& j);

}  // namespace cargoscan::forest
