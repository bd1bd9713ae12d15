#include "cargoscan/pipeline/bundle.hpp"

#include <cmath>
#include <system_error>

#include "cargoscan/common/error.hpp"
#include "cargoscan/imagecore/pgm.hpp"
#include "cargoscan/pipeline/config_io.hpp"

namespace cargoscan::pipeline {

namespace fs = std::filesystem;

void validate(const ModelBundle& b) {
  if (b.format_version != kBundleFormatVersion) {
    fail(ErrorKind::kFormat, "unsupported bundle format version " + std::to_string(b.format_version));
  }
  validate(b.features);
  validate(b.windows);
  imagecore::validate(b.preprocess);
  forest::validate(b.forest);
  if (b.forest.dimension != feature_dimension(b.features)) {
    fail(ErrorKind::kValidation, "forest dimension " + std::to_string(b.forest.dimension) + " does not match " +
                                     to_string(b.features.family) + " features (" +
                                     std::to_string(feature_dimension(b.features)) + ")");
  }
  if (b.features.family == FeatureFamily::kPhow) {
    if (!b.vocabulary) fail(ErrorKind::kValidation, "PHOW bundle without vocabulary");
    phow::validate(*b.vocabulary);
    if (b.vocabulary->size() != b.features.phow.vocabulary_size) fail(ErrorKind::kValidation, "vocabulary size mismatch");
  } else if (b.vocabulary) {
    fail(ErrorKind::kValidation, "vocabulary present for a histogram feature family");
  }
  if (!std::isfinite(b.t_car)) fail(ErrorKind::kValidation, "t_car must be finite");
}

void save_bundle(const fs::path& dir, const ModelBundle& b) {
  validate(b);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) fail(ErrorKind::kIo, "cannot create bundle directory " + dir.string() + ": " + ec.message());
  Json manifest = Json::object();
  manifest["format_version"] = b.format_version;
  manifest["feature_family"] = to_string(b.features.family);
  manifest["features"] = to_json(b.features);
  manifest["preprocess"] = to_json(b.preprocess);
  manifest["windows"] = to_json(b.windows);
  manifest["t_car"] = b.t_car;
  manifest["forest"] = "forest.json";
  if (b.vocabulary) manifest["vocabulary"] = "vocabulary.json";
  imagecore::write_file(dir / "manifest.json", dump(manifest));
  imagecore::write_file(dir / "forest.json", dump(forest::to_json(b.forest)));
  if (b.vocabulary) {
    imagecore::write_file(dir / "vocabulary.json", dump(to_json(*b.vocabulary)));
  } else {
    fs::remove(dir / "vocabulary.json", ec);
  }
}

ModelBundle load_bundle(const fs::path& dir) {
  const fs::path manifest_path = dir / "manifest.json";
  if (!fs::exists(manifest_path)) fail(ErrorKind::kIo, "no bundle manifest at " + manifest_path.string());
  const Json m = parse_json(imagecore::read_file(manifest_path), manifest_path.string());
  ModelBundle b;
  JsonReader r(m, "manifest");
  r.read("format_version", b.format_version);
  if (b.format_version != kBundleFormatVersion) {
    fail(ErrorKind::kFormat, "unsupported bundle format version " + std::to_string(b.format_version));
  }
  std::string family;
  r.read("feature_family", family);
  if (const Json* c = r.child("features")) b.features = features_from_json(*c, {}, "features");
  if (family != to_string(b.features.family)) fail(ErrorKind::kFormat, "feature_family disagrees with features");
  if (const Json* c = r.child("preprocess")) b.preprocess = preprocess_from_json(*c);
  if (const Json* c = r.child("windows")) b.windows = windows_from_json(*c);
  r.read("t_car", b.t_car);
  std::string forest_file = "forest.json", vocab_file;
  r.read("forest", forest_file);
  r.read("vocabulary", vocab_file);
  r.finish();
  b.forest = forest::forest_from_json(parse_json(imagecore::read_file(dir / forest_file), forest_file));
  if (!vocab_file.empty()) {
    b.vocabulary = vocabulary_from_json(parse_json(imagecore::read_file(dir / vocab_file), vocab_file));
  }
  validate(b);
  return b;
}

}  // namespace cargoscan::pipeline
