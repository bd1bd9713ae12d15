#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "cargoscan/cli/run_config.hpp"
#include "cargoscan/common/error.hpp"

namespace cargoscan::cli {

namespace fs = std::filesystem;

// Exit statuses.
inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitIo = 2;
inline constexpr int kExitData = 3;

int exit_code(ErrorKind kind) noexcept;

struct Context {
  RunConfig config;
  int jobs = 1;
  std::ostream& out;  // data
  std::ostream& err;  // logs
};

int cmd_preprocess(const Context& ctx, const fs::path& in_dir, const fs::path& out_dir);
int cmd_train(const Context& ctx, const fs::path& manifest, const fs::path& bundle_dir);

struct ClassifyOptions {
  std::optional<fs::path> heatmap_dir;  // <stem>.heatmap.pgm and <stem>.heatmap.txt
  std::optional<double> threshold;      // replaces the bundle's t_car
};
int cmd_classify(const Context& ctx, const fs::path& bundle_dir, const std::vector<fs::path>& images,
                 const ClassifyOptions& opts);

int cmd_synth(const Context& ctx, const fs::path& out_dir);

// Either one manifest, whose noncar entries are dealt round-robin into
// training, validation and test, or one manifest per partition.
struct EvalInputs {
  std::optional<fs::path> manifest;
  std::optional<fs::path> cars;
  std::optional<fs::path> noncar_train;
  std::optional<fs::path> noncar_validation;
  std::optional<fs::path> noncar_test;
  fs::path out_dir;  // report.txt, scores.txt, bundle/
};
int cmd_eval(const Context& ctx, const EvalInputs& in);

struct ObscureOptions {
  std::string roi;                     // "x,y,w,h" in car-image pixels
  std::optional<std::string> region;   // placement region, whole image when unset
  std::optional<fs::path> out;         // trace file; standard output when unset
};
int cmd_obscure(const Context& ctx, const fs::path& bundle_dir, const fs::path& car_image, const ObscureOptions& opts);

}  // namespace cargoscan::cli
