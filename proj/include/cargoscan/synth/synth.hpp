#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "cargoscan/common/grid.hpp"
#include "cargoscan/common/rng.hpp"
#include "cargoscan/imagecore/image.hpp"
#include "cargoscan/pipeline/bundle.hpp"
#include "cargoscan/pipeline/dataset.hpp"

namespace cargoscan::synth {

using imagecore::Roi;
using imagecore::TransmissionImage;

// exp and sin/cos built from +, -, *, / and ldexp only, so rendering without
// noise gives the same bits on any IEEE-754 platform.
double portable_exp(double x);
void portable_sincos(double radians, double& s, double& c);

enum class ShapeKind { kRectangle, kEllipse, kPolygon, kTubeBundle, kDiskRow };
std::string to_string(ShapeKind k);

struct SceneObject {
  RealGrid patch;  // transmission in (0, 1]; 1 leaves the scene untouched
  int x = 0;       // placement, top-left
  int y = 0;
  int id = 0;
  double density = 0.0;  // nominal attenuation coefficient (mean -ln T over the shape)
  ShapeKind shape = ShapeKind::kRectangle;

  Roi footprint() const noexcept { return {x, y, patch.width(), patch.height()}; }
};

void validate(const SceneObject& obj);

struct LibraryConfig {
  int size = 196;
  std::uint64_t seed = 196;
  int min_extent = 40;
  int max_width = 520;
  int max_height = 360;
  double min_density = 0.1;  // -ln T range of the shapes
  double max_density = 1.4;
  double confuser_fraction = 0.1;  // share of wheel-like disk rows
  bool operator==(const LibraryConfig&) const = default;
};

struct ObjectLibrary {
  std::vector<SceneObject> objects;
};

ObjectLibrary make_library(const LibraryConfig& cfg);

// Multiplies the object into the image; the footprint must lie inside
// `region` (kPlacement otherwise).
TransmissionImage project_object(const TransmissionImage& img, const SceneObject& obj, const Roi& region);
TransmissionImage project_object(const TransmissionImage& img, const SceneObject& obj);
void project_in_place(TransmissionImage& img, const SceneObject& obj, const Roi& region);

// Procedural car: body with rounded ends, cabin with window cutouts, engine
// block and two dense wheels. Transmission patch, 1 outside the silhouette.
struct CarStyle {
  int length = 1050;
  int height = 350;
  double body_density = 0.9;  // -ln T of the body shell
  double cabin_start = 0.28;  // fractions of the length
  double cabin_end = 0.76;
  double cabin_top = 0.08;    // fraction of the height
  double wheel_radius = 0.19; // fraction of the height
  double front_wheel = 0.18;
  double rear_wheel = 0.81;
  bool facing_left = false;
};

RealGrid render_car(const CarStyle& style);
CarStyle sample_car_style(Rng& rng, int length, int height, double body_density);

// Nearest-neighbour rotation about the centre onto a canvas that holds the
// whole rotated patch; new pixels are 1.
RealGrid rotate_patch(const RealGrid& patch, double degrees);

struct SynthConfig {
  int width = 1290;
  int height = 850;
  double noise_sigma = 0.02;     // multiplicative noise; scaled by sqrt(1 - v)
  double column_gain = 0.03;     // per-column gain drawn from [1 - column_gain, 1]
  int max_cars = 3;
  double max_angle = 15.0;       // degrees
  double angle_probability = 0.2;
  int max_objects = 12;          // noncar scenes draw 0..max_objects
  int car_length = 1050;
  int car_height = 350;
  double car_density = 0.9;      // -ln T of a typical car body
  LibraryConfig library;
  bool operator==(const SynthConfig&) const = default;
};

void validate(const SynthConfig& cfg);

enum class SceneKind { kCar, kNoncar, kEmpty };
std::string to_string(SceneKind k);

struct Scene {
  TransmissionImage image;
  std::vector<Roi> rois;  // one per car
  Roi interior;           // container region where goods may be placed
  SceneKind kind = SceneKind::kEmpty;
  std::string layout;     // e.g. "single", "stacked", "goods", "obscured", "cargo", "empty"
};

// Background (air band, container walls, corrugation, floor) with the
// container interior returned through `interior`. No noise and no gain.
RealGrid container_background(int width, int height, Rng& rng, Roi* interior);

Scene generate_scene(const ObjectLibrary& library, SceneKind kind, std::uint64_t seed, const SynthConfig& cfg);

// Mean over the ROI of (raw - obscured) / raw.
double mean_relative_attenuation(const TransmissionImage& raw, const TransmissionImage& obscured, const Roi& roi);

struct ObscurationConfig {
  int realisations = 5;
  double target_mra = 0.99;
  int max_insertions = 10000;
  double size_fraction = 0.5;        // of the typical car dimensions
  double density_fraction = 1.0 / 3; // of the typical car density
  int car_length = 1050;
  int car_height = 350;
  double car_density = 0.9;
  std::optional<Roi> region;         // object centres are uniform in it and objects are clipped to it; whole image when unset
};

struct TraceRow {
  int realisation = 0;
  int objects = 0;
  double mra = 0.0;
  double p_image = 0.0;
  bool operator==(const TraceRow&) const = default;
};

struct ObscurationTrace {
  int realisations = 0;
  std::vector<TraceRow> rows;           // realisation-major
  std::vector<bool> reached_target;     // per realisation
};

// Library prototype resized to w x h with its attenuation rescaled so the
// mean -ln T over the shape equals `density`.
SceneObject obscuring_object(const SceneObject& proto, int w, int h, double density);

// `car_image` is the preprocessed transmission image (no log transform).
ObscurationTrace obscuration_experiment(const TransmissionImage& car_image, const Roi& roi,
                                        const ObjectLibrary& library, const pipeline::ModelBundle& bundle,
                                        std::uint64_t seed, const ObscurationConfig& cfg, int jobs = 1);

// "realisation object_count mra p_I" table with a header comment.
std::string format_trace(const ObscurationTrace& trace);

struct CorpusCounts {
  int cars = 0;
  int noncars = 0;
  int empties = 0;
};

// Writes car_NNNN.pgm, noncar_NNNN.pgm, empty_NNNN.pgm and manifest.tsv into
// `dir`; scene i of the corpus uses seed Rng(seed).split(i).
pipeline::Dataset write_corpus(const std::filesystem::path& dir, const ObjectLibrary& library,
                               const CorpusCounts& counts, std::uint64_t seed, const SynthConfig& cfg, int jobs = 1);

// The scenes write_corpus would produce, in memory.
std::vector<Scene> generate_corpus(const ObjectLibrary& library, const CorpusCounts& counts, std::uint64_t seed,
                                   const SynthConfig& cfg, int jobs = 1);

}  // namespace cargoscan::synth
