#pragma once

#include <string>
#include <vector>

#include "json.hpp"

#include "cargoscan/common/error.hpp"
#include "cargoscan/forest/forest.hpp"
#include "cargoscan/imagecore/preprocess.hpp"
#include "cargoscan/pipeline/features.hpp"
#include "cargoscan/pipeline/windows.hpp"

namespace cargoscan::pipeline {

using Json = nlohmann::json;

// Reads an object field by field; finish() rejects keys nobody asked for.
// Every error carries the dotted path of the offending key.
class JsonReader {
 public:
  JsonReader(const Json& j, std::string path);

  template <class T>
  void read(const char* key, T& value) {
    seen_.push_back(key);
    const auto it = j_.find(key);
    if (it == j_.end()) return;
    try {
      value = it->template get<T>();
    } catch (const nlohmann::json::exception&) {
      fail(ErrorKind::kConfig, "bad value type for " + path_ + "." + key);
    }
  }

  // Nested object, or nullptr when absent.
  const Json* child(const char* key);
  const std::string& path() const noexcept { return path_; }
  void finish() const;

 private:
  const Json& j_;
  std::string path_;
  std::vector<std::string> seen_;
};

Json to_json(const imagecore::PreprocessConfig& c);
Json to_json(const WindowSpec& s);
Json to_json(const SamplerConfig& s);
Json to_json(const FeatureParams& p);
Json to_json(const forest::ForestConfig& c);  // jobs is a runtime setting and is not stored
Json to_json(const phow::Vocabulary& v);

// Each starts from `base` and overrides the fields present.
imagecore::PreprocessConfig preprocess_from_json(const Json& j, imagecore::PreprocessConfig base = {},
                                                 const std::string& path = "preprocess");
WindowSpec windows_from_json(const Json& j, WindowSpec base = {}, const std::string& path = "windows");
SamplerConfig sampler_from_json(const Json& j, SamplerConfig base = {}, const std::string& path = "sampler");
FeatureParams features_from_json(const Json& j, FeatureParams base = {}, const std::string& path = "features");
forest::ForestConfig forest_config_from_json(const Json& j, forest::ForestConfig base = {},
                                             const std::string& path = "forest");
phow::Vocabulary vocabulary_from_json(const Json& j);

// Pretty-printed with sorted keys and a trailing newline, so equal values
// give equal bytes.
std::string dump(const Json& j);
Json parse_json(const std::string& text, const std::string& what);

}  // namespace cargoscan::pipeline
