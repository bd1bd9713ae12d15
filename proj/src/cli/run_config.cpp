#include "cargoscan/cli/run_config.hpp"

#include <cmath>

#include "cargoscan/common/error.hpp"
#include "cargoscan/imagecore/pgm.hpp"

namespace cargoscan::cli {

using pipeline::Json;
using pipeline::JsonReader;

namespace {

Json library_json(const synth::LibraryConfig& c) {
  return {{"size", c.size},
          {"seed", c.seed},
          {"min_extent", c.min_extent},
          {"max_width", c.max_width},
          {"max_height", c.max_height},
          {"min_density", c.min_density},
          {"max_density", c.max_density},
          {"confuser_fraction", c.confuser_fraction}};
}

Json synth_json(const SynthSection& s) {
  const auto& c = s.scene;
  return {{"width", c.width},
          {"height", c.height},
          {"noise_sigma", c.noise_sigma},
          {"column_gain", c.column_gain},
          {"max_cars", c.max_cars},
          {"max_angle", c.max_angle},
          {"angle_probability", c.angle_probability},
          {"max_objects", c.max_objects},
          {"car_length", c.car_length},
          {"car_height", c.car_height},
          {"car_density", c.car_density},
          {"library", library_json(c.library)},
          {"cars", s.cars},
          {"noncars", s.noncars},
          {"empties", s.empties},
          {"seed", s.seed},
          {"obscuration",
           {{"realisations", s.obscuration.realisations},
            {"target_mra", s.obscuration.target_mra},
            {"max_insertions", s.obscuration.max_insertions},
            {"size_fraction", s.obscuration.size_fraction},
            {"density_fraction", s.obscuration.density_fraction}}}};
}

SynthSection synth_from_json(const Json& j) {
  SynthSection s;
  JsonReader r(j, "synth");
  auto& c = s.scene;
  r.read("width", c.width);
  r.read("height", c.height);
  r.read("noise_sigma", c.noise_sigma);
  r.read("column_gain", c.column_gain);
  r.read("max_cars", c.max_cars);
  r.read("max_angle", c.max_angle);
  r.read("angle_probability", c.angle_probability);
  r.read("max_objects", c.max_objects);
  r.read("car_length", c.car_length);
  r.read("car_height", c.car_height);
  r.read("car_density", c.car_density);
  r.read("cars", s.cars);
  r.read("noncars", s.noncars);
  r.read("empties", s.empties);
  r.read("seed", s.seed);
  if (const Json* lj = r.child("library")) {
    JsonReader lr(*lj, "synth.library");
    auto& l = c.library;
    lr.read("size", l.size);
    lr.read("seed", l.seed);
    lr.read("min_extent", l.min_extent);
    lr.read("max_width", l.max_width);
    lr.read("max_height", l.max_height);
    lr.read("min_density", l.min_density);
    lr.read("max_density", l.max_density);
    lr.read("confuser_fraction", l.confuser_fraction);
    lr.finish();
  }
  if (const Json* oj = r.child("obscuration")) {
    JsonReader orr(*oj, "synth.obscuration");
    auto& o = s.obscuration;
    orr.read("realisations", o.realisations);
    orr.read("target_mra", o.target_mra);
    orr.read("max_insertions", o.max_insertions);
    orr.read("size_fraction", o.size_fraction);
    orr.read("density_fraction", o.density_fraction);
    orr.finish();
  }
  r.finish();
  return s;
}

}  // namespace

Json to_json(const RunConfig& c) {
  return {{"preprocess", pipeline::to_json(c.preprocess)},
          {"windows", pipeline::to_json(c.windows)},
          {"features", pipeline::to_json(c.features)},
          {"forest", pipeline::to_json(c.forest)},
          {"sampler", pipeline::to_json(c.sampler)},
          {"eval", {{"t_car", c.eval.t_car}}},
          {"synth", synth_json(c.synth)}};
}

RunConfig run_config_from_json(const Json& j) {
  RunConfig c;
  JsonReader r(j, "config");
  if (const Json* p = r.child("preprocess")) c.preprocess = pipeline::preprocess_from_json(*p);
  if (const Json* p = r.child("windows")) c.windows = pipeline::windows_from_json(*p);
  if (const Json* p = r.child("features")) c.features = pipeline::features_from_json(*p);
  if (const Json* p = r.child("forest")) c.forest = pipeline::forest_config_from_json(*p);
  if (const Json* p = r.child("sampler")) c.sampler = pipeline::sampler_from_json(*p);
  if (const Json* p = r.child("eval")) {
    JsonReader er(*p, "eval");
    er.read("t_car", c.eval.t_car);
    er.finish();
  }
  if (const Json* p = r.child("synth")) c.synth = synth_from_json(*p);
  r.finish();
  validate(c);
  return c;
}

RunConfig parse_run_config(const std::string& text) {
  return run_config_from_json(pipeline::parse_json(text, "configuration"));
}

RunConfig load_run_config(const std::filesystem::path& path) {
  return parse_run_config(imagecore::read_file(path));
}

std::string format_run_config(const RunConfig& c) { return pipeline::dump(to_json(c)); }

void validate(const RunConfig& c) {
  imagecore::validate(c.preprocess);
  pipeline::validate(c.windows);
  pipeline::validate(c.features);
  pipeline::validate(c.sampler);
  if (c.forest.num_trees < 1 || c.forest.mtry < 0) fail(ErrorKind::kConfig, "forest.num_trees >= 1 and forest.mtry >= 0");
  if (!std::isfinite(c.eval.t_car)) fail(ErrorKind::kConfig, "eval.t_car must be finite");
  synth::validate(c.synth.scene);
  if (c.synth.cars < 0 || c.synth.noncars < 0 || c.synth.empties < 0) fail(ErrorKind::kConfig, "synth counts must be >= 0");
  const auto& o = c.synth.obscuration;
  if (o.realisations < 1 || o.max_insertions < 1 || !(o.target_mra > 0.0 && o.target_mra <= 1.0) ||
      !(o.size_fraction > 0.0) || !(o.density_fraction > 0.0)) {
    fail(ErrorKind::kConfig, "bad synth.obscuration settings");
  }
}

pipeline::TrainingConfig training_config(const RunConfig& c, int jobs) {
  pipeline::TrainingConfig t;
  t.features = c.features;
  t.windows = c.windows;
  t.sampler = c.sampler;
  t.forest = c.forest;
  t.preprocess = c.preprocess;
  t.t_car = c.eval.t_car;
  t.jobs = jobs;
  return t;
}

synth::ObscurationConfig obscuration_config(const RunConfig& c) {
  synth::ObscurationConfig o;
  o.realisations = c.synth.obscuration.realisations;
  o.target_mra = c.synth.obscuration.target_mra;
  o.max_insertions = c.synth.obscuration.max_insertions;
  o.size_fraction = c.synth.obscuration.size_fraction;
  o.density_fraction = c.synth.obscuration.density_fraction;
  o.car_length = c.synth.scene.car_length;
  o.car_height = c.synth.scene.car_height;
  o.car_density = c.synth.scene.car_density;
  return o;
}

}  // namespace cargoscan::cli
