#include "cargoscan/pipeline/config_io.hpp"

#include <algorithm>

namespace cargoscan::pipeline {

JsonReader::JsonReader(const Json& j, std::string path) : j_(j), path_(std::move(path)) {
  if (!j_.is_object()) fail(ErrorKind::kConfig, path_ + " must be an object");
}

const Json* JsonReader::child(const char* key) {
  seen_.push_back(key);
  const auto it = j_.find(key);
  if (it == j_.end()) return nullptr;
  if (!it->is_object()) fail(ErrorKind::kConfig, path_ + "." + key + " must be an object");
  return &*it;
}

void JsonReader::finish() const {
  for (auto it = j_.begin(); it != j_.end(); ++it) {
    if (std::find(seen_.begin(), seen_.end(), it.key()) == seen_.end()) {
      fail(ErrorKind::kConfig, "unknown key " + path_ + "." + it.key());
    }
  }
}

Json to_json(const imagecore::PreprocessConfig& c) {
  Json j = Json::object();
  j["stripe_zero_fraction"] = c.stripe_zero_fraction;
  j["despeckle_threshold"] = c.despeckle_threshold;
  j["air_band_rows"] = c.air_band_rows;
  j["log_floor"] = c.log_floor;
  j["apply_log"] = c.apply_log;
  return j;
}

Json to_json(const WindowSpec& s) {
  Json j = Json::object();
  j["shape"] = to_string(s.shape);
  j["width"] = s.width;
  j["height"] = s.height;
  j["stride_train"] = s.stride_train;
  j["stride_infer"] = s.stride_infer;
  return j;
}

Json to_json(const SamplerConfig& s) {
  Json j = Json::object();
  j["t_roi"] = s.t_roi;
  j["negative_per_positive"] = s.negative_per_positive;
  j["seed"] = s.seed;
  return j;
}

Json to_json(const FeatureParams& p) {
  Json j = Json::object();
  j["family"] = to_string(p.family);
  j["intensity"] = {{"sigmas", p.intensity.sigmas}};
  j["obifs"] = {{"scales", p.obifs.scales}, {"epsilons", p.obifs.epsilons}, {"oriented", p.obifs.oriented}};
  j["phow"] = {{"step", p.phow.sift.step},
               {"bin_sizes", p.phow.sift.bin_sizes},
               {"vocabulary_size", p.phow.vocabulary_size},
               {"sample_cap", p.phow.sample_cap},
               {"kmeans_iterations", p.phow.kmeans_iterations},
               {"kmeans_tolerance", p.phow.kmeans_tolerance}};
  return j;
}

Json to_json(const forest::ForestConfig& c) {
  Json j = Json::object();
  j["num_trees"] = c.num_trees;
  j["mtry"] = c.mtry;
  j["seed"] = c.seed;
  return j;
}

Json to_json(const phow::Vocabulary& v) {
  Json j = Json::object();
  j["dimension"] = v.dimension;
  j["size"] = v.size();
  j["iterations"] = v.iterations;
  j["inertia"] = v.inertia;
  j["centroids"] = v.centroids;
  return j;
}

imagecore::PreprocessConfig preprocess_from_json(const Json& j, imagecore::PreprocessConfig c, const std::string& path) {
  JsonReader r(j, path);
  r.read("stripe_zero_fraction", c.stripe_zero_fraction);
  r.read("despeckle_threshold", c.despeckle_threshold);
  r.read("air_band_rows", c.air_band_rows);
  r.read("log_floor", c.log_floor);
  r.read("apply_log", c.apply_log);
  r.finish();
  imagecore::validate(c);
  return c;
}

WindowSpec windows_from_json(const Json& j, WindowSpec s, const std::string& path) {
  JsonReader r(j, path);
  std::string shape = to_string(s.shape);
  r.read("shape", shape);
  if (shape != to_string(s.shape)) {
    // A shape change brings that shape's default size unless overridden.
    const WindowShape ws = parse_window_shape(shape);
    const WindowSpec d = ws == WindowShape::kSquare ? WindowSpec::square() : WindowSpec::rectangular();
    s.shape = d.shape;
    s.width = d.width;
    s.height = d.height;
  }
  r.read("width", s.width);
  r.read("height", s.height);
  r.read("stride_train", s.stride_train);
  r.read("stride_infer", s.stride_infer);
  r.finish();
  validate(s);
  return s;
}

SamplerConfig sampler_from_json(const Json& j, SamplerConfig s, const std::string& path) {
  JsonReader r(j, path);
  r.read("t_roi", s.t_roi);
  r.read("negative_per_positive", s.negative_per_positive);
  r.read("seed", s.seed);
  r.finish();
  validate(s);
  return s;
}

FeatureParams features_from_json(const Json& j, FeatureParams p, const std::string& path) {
  JsonReader r(j, path);
  std::string family = to_string(p.family);
  r.read("family", family);
  p.family = parse_feature_family(family);
  if (const Json* c = r.child("intensity")) {
    JsonReader ri(*c, path + ".intensity");
    ri.read("sigmas", p.intensity.sigmas);
    ri.finish();
  }
  if (const Json* c = r.child("obifs")) {
    JsonReader ro(*c, path + ".obifs");
    ro.read("scales", p.obifs.scales);
    ro.read("epsilons", p.obifs.epsilons);
    ro.read("oriented", p.obifs.oriented);
    ro.finish();
  }
  if (const Json* c = r.child("phow")) {
    JsonReader rp(*c, path + ".phow");
    rp.read("step", p.phow.sift.step);
    rp.read("bin_sizes", p.phow.sift.bin_sizes);
    rp.read("vocabulary_size", p.phow.vocabulary_size);
    rp.read("sample_cap", p.phow.sample_cap);
    rp.read("kmeans_iterations", p.phow.kmeans_iterations);
    rp.read("kmeans_tolerance", p.phow.kmeans_tolerance);
    rp.finish();
  }
  r.finish();
  validate(p);
  return p;
}

forest::ForestConfig forest_config_from_json(const Json& j, forest::ForestConfig c, const std::string& path) {
  JsonReader r(j, path);
  r.read("num_trees", c.num_trees);
  r.read("mtry", c.mtry);
  r.read("seed", c.seed);
  r.finish();
  if (c.num_trees < 1) fail(ErrorKind::kConfig, path + ".num_trees must be positive");
  if (c.mtry < 0) fail(ErrorKind::kConfig, path + ".mtry must be >= 0");
  return c;
}

phow::Vocabulary vocabulary_from_json(const Json& j) {
  phow::Vocabulary v;
  int size = 0;
  try {
    v.dimension = j.at("dimension").get<int>();
    size = j.at("size").get<int>();
    v.iterations = j.at("iterations").get<int>();
    v.inertia = j.at("inertia").get<double>();
    v.centroids = j.at("centroids").get<std::vector<float>>();
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::kFormat, std::string("malformed vocabulary: ") + e.what());
  }
  if (v.dimension < 1 || v.centroids.size() != static_cast<std::size_t>(size) * static_cast<std::size_t>(v.dimension)) {
    fail(ErrorKind::kFormat, "vocabulary size does not match its centroid array");
  }
  phow::validate(v);
  return v;
}

std::string dump(const Json& j) { return j.dump(2) + "\n"; }

Json parse_json(const std::string& text, const std::string& what) {
  try {
    return Json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::kFormat, what + " is not valid JSON: " + e.what());
  }
}

}  // namespace cargoscan::pipeline
