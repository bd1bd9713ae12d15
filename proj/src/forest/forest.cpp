#include "cargoscan/forest/forest.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "cargoscan/common/error.hpp"
#include "cargoscan/common/parallel.hpp"
#include "cargoscan/common/rng.hpp"

namespace cargoscan::forest {

void TrainingSet::add(std::span<const float> x, std::uint8_t label) {
  if (x.size() != static_cast<std::size_t>(dimension)) fail(ErrorKind::kValidation, "feature length mismatch");
  features.insert(features.end(), x.begin(), x.end());
  labels.push_back(label);
}

void TrainingSet::add(std::span<const double> x, std::uint8_t label) {
  if (x.size() != static_cast<std::size_t>(dimension)) fail(ErrorKind::kValidation, "feature length mismatch");
  for (double v : x) features.push_back(static_cast<float>(v));
  labels.push_back(label);
}

void validate(const TrainingSet& data) {
  if (data.dimension < 1) fail(ErrorKind::kValidation, "feature dimension must be positive");
  if (data.features.size() != data.rows() * static_cast<std::size_t>(data.dimension)) {
    fail(ErrorKind::kValidation, "feature matrix does not match label count");
  }
  for (float v : data.features) {
    if (!std::isfinite(v)) fail(ErrorKind::kValidation, "non-finite feature value");
  }
  bool has[2] = {false, false};
  for (auto l : data.labels) {
    if (l > 1) fail(ErrorKind::kValidation, "labels must be 0 (noncar) or 1 (car)");
    has[l] = true;
  }
  if (!has[0] || !has[1]) fail(ErrorKind::kTraining, "training set needs both classes");
}

void validate(const ForestModel& model) {
  if (model.dimension < 1 || model.trees.empty()) fail(ErrorKind::kValidation, "forest has no trees");
  for (const auto& t : model.trees) {
    if (t.nodes.empty()) fail(ErrorKind::kValidation, "empty tree");
    const int n = static_cast<int>(t.nodes.size());
    for (int i = 0; i < n; ++i) {
      const Node& nd = t.nodes[static_cast<std::size_t>(i)];
      if (nd.feature < 0) continue;
      // Children follow their parent, which also rules out cycles.
      if (nd.feature >= model.dimension || nd.left <= i || nd.right <= i || nd.left >= n || nd.right >= n) {
        fail(ErrorKind::kValidation, "malformed tree node");
      }
    }
  }
}

std::vector<double> candidate_thresholds(std::span<const float> values) {
  std::vector<float> v(values.begin(), values.end());
  std::sort(v.begin(), v.end());
  std::vector<double> out;
  for (std::size_t i = 1; i < v.size(); ++i) {
    if (v[i] != v[i - 1]) out.push_back(0.5 * (static_cast<double>(v[i - 1]) + v[i]));
  }
  return out;
}

namespace {

double sum_squares_over_n(double a, double b) {
  const double n = a + b;
  return n > 0 ? (a * a + b * b) / n : 0.0;
}

struct Scratch {
  std::vector<std::pair<float, std::uint8_t>> pairs;
};

Split best_split_impl(const TrainingSet& data, std::span<const std::size_t> rows, std::span<const int> features,
                      Scratch& scratch) {
  Split best;
  double n1 = 0;
  for (std::size_t r : rows) n1 += data.labels[r];
  const double n = static_cast<double>(rows.size());
  const double n0 = n - n1;
  const double parent = sum_squares_over_n(n0, n1);
  // Decrease = Q(children) - Q(parent) with Q = sum over nodes of (c0^2 + c1^2) / size.
  const double min_gain = 1e-12 * n;
  auto& pairs = scratch.pairs;
  for (int f : features) {
    pairs.clear();
    for (std::size_t r : rows) pairs.emplace_back(data.features[r * data.dimension + f], data.labels[r]);
    std::sort(pairs.begin(), pairs.end());
    double l0 = 0, l1 = 0;
    for (std::size_t i = 0; i + 1 < pairs.size(); ++i) {
      (pairs[i].second ? l1 : l0) += 1;
      if (pairs[i].first == pairs[i + 1].first) continue;
      const double q = sum_squares_over_n(l0, l1) + sum_squares_over_n(n0 - l0, n1 - l1);
      const double gain = q - parent;
      if (gain > min_gain && (best.feature < 0 || gain > best.decrease)) {
        best.feature = f;
        best.threshold = 0.5 * (static_cast<double>(pairs[i].first) + pairs[i + 1].first);
        best.decrease = gain;
      }
    }
  }
  return best;
}

struct TreeBuilder {
  const TrainingSet& data;
  int mtry;
  Rng rng;
  Scratch scratch;
  std::vector<int> feature_pool;
  Tree tree;

  int grow(std::vector<std::size_t>& rows) {
    const int id = static_cast<int>(tree.nodes.size());
    tree.nodes.emplace_back();
    std::uint32_t c1 = 0;
    for (std::size_t r : rows) c1 += data.labels[r];
    const auto c0 = static_cast<std::uint32_t>(rows.size()) - c1;
    tree.nodes[static_cast<std::size_t>(id)].noncar = c0;
    tree.nodes[static_cast<std::size_t>(id)].car = c1;
    if (rows.size() < 2 || c0 == 0 || c1 == 0) return id;

    // mtry distinct features by partial Fisher-Yates.
    const std::size_t d = feature_pool.size();
    for (std::size_t i = 0; i < static_cast<std::size_t>(mtry); ++i) {
      const std::size_t j = i + static_cast<std::size_t>(rng.below(d - i));
      std::swap(feature_pool[i], feature_pool[j]);
    }
    const std::vector<int> chosen(feature_pool.begin(), feature_pool.begin() + mtry);
    const Split s = best_split_impl(data, rows, chosen, scratch);
    if (s.feature < 0) return id;

    std::vector<std::size_t> left, right;
    for (std::size_t r : rows) {
      (data.features[r * data.dimension + s.feature] <= s.threshold ? left : right).push_back(r);
    }
    rows.clear();
    rows.shrink_to_fit();
    tree.nodes[static_cast<std::size_t>(id)].feature = s.feature;
    tree.nodes[static_cast<std::size_t>(id)].threshold = s.threshold;
    const int l = grow(left);
    tree.nodes[static_cast<std::size_t>(id)].left = l;
    const int r = grow(right);
    tree.nodes[static_cast<std::size_t>(id)].right = r;
    return id;
  }
};

const Node& leaf_for(const Tree& t, const float* x) {
  const Node* n = &t.nodes[0];
  while (n->feature >= 0) n = &t.nodes[static_cast<std::size_t>(x[n->feature] <= n->threshold ? n->left : n->right)];
  return *n;
}

bool votes_car(const Node& leaf) { return leaf.car > leaf.noncar; }

}  // namespace

Split best_split(const TrainingSet& data, std::span<const std::size_t> rows, std::span<const int> features) {
  Scratch scratch;
  return best_split_impl(data, rows, features, scratch);
}

TrainResult train_detailed(const TrainingSet& data, const ForestConfig& config) {
  validate(data);
  if (config.num_trees < 1) fail(ErrorKind::kConfig, "forest needs at least one tree");
  const int d = data.dimension;
  const int mtry = config.mtry > 0 ? std::min(config.mtry, d) : std::max(1, static_cast<int>(std::floor(std::sqrt(d))));
  const std::size_t n = data.rows();

  TrainResult result;
  result.model.dimension = d;
  result.model.mtry = mtry;
  result.model.seed = config.seed;
  result.model.trees.resize(static_cast<std::size_t>(config.num_trees));
  std::vector<std::vector<std::uint8_t>> in_bag(static_cast<std::size_t>(config.num_trees));

  const Rng master(config.seed);
  parallel_for(static_cast<std::size_t>(config.num_trees), config.jobs, [&](std::size_t t) {
    TreeBuilder b{data, mtry, master.split(t), {}, {}, {}};
    b.feature_pool.resize(static_cast<std::size_t>(d));
    std::iota(b.feature_pool.begin(), b.feature_pool.end(), 0);
    std::vector<std::size_t> rows(n);
    auto& bag = in_bag[t];
    bag.assign(n, 0);
    for (std::size_t i = 0; i < n; ++i) {
      rows[i] = static_cast<std::size_t>(b.rng.below(n));
      bag[rows[i]] = 1;
    }
    std::sort(rows.begin(), rows.end());
    b.grow(rows);
    result.model.trees[t] = std::move(b.tree);
  });

  result.oob_scores.assign(n, -1.0);
  for (std::size_t i = 0; i < n; ++i) {
    int votes = 0, trees = 0;
    for (std::size_t t = 0; t < result.model.trees.size(); ++t) {
      if (in_bag[t][i]) continue;
      ++trees;
      votes += votes_car(leaf_for(result.model.trees[t], data.features.data() + i * static_cast<std::size_t>(d)));
    }
    if (trees > 0) result.oob_scores[i] = static_cast<double>(votes) / trees;
  }
  return result;
}

ForestModel train(const TrainingSet& data, const ForestConfig& config) { return train_detailed(data, config).model; }

int car_votes(const ForestModel& model, std::span<const float> x) {
  if (x.size() != static_cast<std::size_t>(model.dimension)) {
    fail(ErrorKind::kValidation, "feature vector has length " + std::to_string(x.size()) + ", forest expects " +
                                     std::to_string(model.dimension));
  }
  int votes = 0;
  for (const auto& t : model.trees) votes += votes_car(leaf_for(t, x.data()));
  return votes;
}

double score(const ForestModel& model, std::span<const float> x) {
  return static_cast<double>(car_votes(model, x)) / model.num_trees();
}

double score(const ForestModel& model, std::span<const double> x) {
  std::vector<float> f(x.begin(), x.end());
  return score(model, f);
}

nlohmann::json to_json(const ForestModel& model) {
  nlohmann::json trees = nlohmann::json::array();
  for (const auto& t : model.trees) {
    nlohmann::json feature = nlohmann::json::array(), threshold = nlohmann::json::array(),
                   left = nlohmann::json::array(), right = nlohmann::json::array(),
                   noncar = nlohmann::json::array(), car = nlohmann::json::array();
    for (const auto& nd : t.nodes) {
      feature.push_back(nd.feature);
      threshold.push_back(nd.threshold);
      left.push_back(nd.left);
      right.push_back(nd.right);
      noncar.push_back(nd.noncar);
      car.push_back(nd.car);
    }
    trees.push_back({{"feature", feature},
                     {"threshold", threshold},
                     {"left", left},
                     {"right", right},
                     {"noncar", noncar},
                     {"car", car}});
  }
  return {{"dimension", model.dimension}, {"mtry", model.mtry}, {"seed", model.seed}, {"trees", trees}};
}

ForestModel forest_from_json(const nlohmann::json& j) {
  ForestModel m;
  try {
    m.dimension = j.at("dimension").get<int>();
    m.mtry = j.at("mtry").get<int>();
    m.seed = j.at("seed").get<std::uint64_t>();
    for (const auto& t : j.at("trees")) {
      const auto& feature = t.at("feature");
      const std::size_t n = feature.size();
      for (const char* key : {"threshold", "left", "right", "noncar", "car"}) {
        if (t.at(key).size() != n) fail(ErrorKind::kFormat, "tree arrays differ in length");
      }
      Tree tree;
      tree.nodes.resize(n);
      for (std::size_t i = 0; i < n; ++i) {
        Node& nd = tree.nodes[i];
        nd.feature = feature[i].get<int>();
        nd.threshold = t["threshold"][i].get<double>();
        nd.left = t["left"][i].get<int>();
        nd.right = t["right"][i].get<int>();
        nd.noncar = t["noncar"][i].get<std::uint32_t>();
        nd.car = t["car"][i].get<std::uint32_t>();
      }
      m.trees.push_back(std::move(tree));
    }
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::kFormat, std::string("malformed forest: ") + e.what());
  }
  validate(m);
  return m;
}

}  // namespace cargoscan::forest
