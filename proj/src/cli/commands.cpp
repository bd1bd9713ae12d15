#include "cargoscan/cli/commands.hpp"

#include <algorithm>
#include <charconv>
#include <ostream>
#include <system_error>

#include "cargoscan/eval/loocv.hpp"
#include "cargoscan/imagecore/pgm.hpp"
#include "cargoscan/pipeline/bundle.hpp"
#include "cargoscan/pipeline/dataset.hpp"
#include "cargoscan/pipeline/scoring.hpp"

namespace cargoscan::cli {

int exit_code(ErrorKind kind) noexcept { return kind == ErrorKind::kIo ? kExitIo : kExitData; }

namespace {

template <class F>
int guarded(const Context& ctx, F&& body) {
  try {
    return body();
  } catch (const Error& e) {
    ctx.err << "error: " << e.what() << '\n';
    return exit_code(e.kind());
  } catch (const std::filesystem::filesystem_error& e) {
    ctx.err << "error: " << e.what() << '\n';
    return kExitIo;
  }
}

std::string shortest(double v) {
  char buf[32];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

void make_dirs(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) fail(ErrorKind::kIo, "cannot create " + dir.string() + ": " + ec.message());
}

imagecore::Roi parse_roi(const std::string& text, const char* what) {
  const auto rois = pipeline::parse_rois(text);
  if (rois.size() != 1) fail(ErrorKind::kInput, std::string(what) + " must be a single x,y,w,h rectangle");
  return rois[0];
}

// Heatmap back in raw-image columns: removed stripe columns read 0.
RealGrid expand_columns(const RealGrid& map, const std::vector<int>& removed, int raw_width) {
  if (removed.empty()) return map;
  RealGrid out(raw_width, map.height(), 0.0);
  std::size_t r = 0;
  int src = 0;
  for (int x = 0; x < raw_width; ++x) {
    if (r < removed.size() && removed[r] == x) {
      ++r;
      continue;
    }
    for (int y = 0; y < map.height(); ++y) out(x, y) = map(src, y);
    ++src;
  }
  return out;
}

}  // namespace

int cmd_preprocess(const Context& ctx, const fs::path& in_dir, const fs::path& out_dir) {
  return guarded(ctx, [&] {
    if (!fs::is_directory(in_dir)) fail(ErrorKind::kIo, in_dir.string() + " is not a directory");
    std::vector<fs::path> inputs;
    for (const auto& e : fs::directory_iterator(in_dir)) {
      if (e.is_regular_file() && e.path().extension() == ".pgm") inputs.push_back(e.path());
    }
    std::sort(inputs.begin(), inputs.end());
    if (inputs.empty()) {
      ctx.err << "warning: no .pgm files in " << in_dir.string() << '\n';
      return kExitOk;
    }
    make_dirs(out_dir);
    int status = kExitOk;
    for (const auto& p : inputs) {
      try {
        const auto r = imagecore::preprocess(imagecore::load_image(p), ctx.config.preprocess);
        imagecore::save_image(out_dir / p.filename(), r.image);
        ctx.err << p.filename().string() << ": ok " << r.image.width() << 'x' << r.image.height() << ", "
                << r.removed_columns.size() << " stripe columns removed, " << r.flagged_columns.size()
                << " columns without air reference\n";
      } catch (const Error& e) {
        ctx.err << p.filename().string() << ": failed: " << e.what() << '\n';
        status = std::max(status, exit_code(e.kind()));
      }
    }
    return status;
  });
}

int cmd_train(const Context& ctx, const fs::path& manifest, const fs::path& bundle_dir) {
  return guarded(ctx, [&] {
    const auto data = pipeline::read_manifest(manifest);
    const auto cfg = training_config(ctx.config, ctx.jobs);
    pipeline::TrainingSummary summary;
    const auto bundle = eval::train_streamed(eval::eval_images(data, cfg.preprocess), cfg, &summary);
    pipeline::save_bundle(bundle_dir, bundle);
    for (const auto& w : summary.warnings) ctx.err << "warning: " << w << '\n';
    ctx.out << "positives = " << summary.positives << '\n'
            << "negatives = " << summary.negatives << '\n'
            << "dimension = " << summary.dimension << '\n'
            << "seed = " << summary.seed << '\n';
    return kExitOk;
  });
}

int cmd_classify(const Context& ctx, const fs::path& bundle_dir, const std::vector<fs::path>& images,
                 const ClassifyOptions& opts) {
  return guarded(ctx, [&] {
    const auto bundle = pipeline::load_bundle(bundle_dir);
    if (opts.threshold && !std::isfinite(*opts.threshold)) fail(ErrorKind::kInput, "threshold must be finite");
    const double t_car = opts.threshold.value_or(bundle.t_car);
    if (opts.heatmap_dir) make_dirs(*opts.heatmap_dir);
    int status = kExitOk;
    for (const auto& p : images) {
      try {
        const auto raw = imagecore::load_image(p);
        const auto pre = imagecore::preprocess(raw, bundle.preprocess);
        const auto v = pipeline::score_image(pre.image.pixels, bundle, ctx.jobs);
        const bool car = v.p_image >= t_car;
        ctx.out << p.string() << '\t' << shortest(v.p_image) << '\t' << (car ? "car" : "noncar") << '\n';
        if (opts.heatmap_dir) {
          const RealGrid map = expand_columns(pipeline::heatmap(v, pre.image.width(), pre.image.height()),
                                              pre.removed_columns, raw.width());
          const fs::path stem = *opts.heatmap_dir / p.stem();
          imagecore::save_pgm8(stem.string() + ".heatmap.pgm", pipeline::heatmap_to_gray(map));
          imagecore::write_file(stem.string() + ".heatmap.txt",
                                pipeline::format_heatmap_cells(pipeline::heatmap_cells(v), pre.image.width(),
                                                               pre.image.height()));
        }
      } catch (const Error& e) {
        ctx.err << p.string() << ": failed: " << e.what() << '\n';
        status = std::max(status, exit_code(e.kind()));
      }
    }
    return status;
  });
}

int cmd_synth(const Context& ctx, const fs::path& out_dir) {
  return guarded(ctx, [&] {
    const auto& s = ctx.config.synth;
    const auto lib = synth::make_library(s.scene.library);
    const auto data =
        synth::write_corpus(out_dir, lib, {s.cars, s.noncars, s.empties}, s.seed, s.scene, ctx.jobs);
    ctx.err << "wrote " << data.entries.size() << " images and manifest.tsv to " << out_dir.string() << '\n';
    return kExitOk;
  });
}

int cmd_eval(const Context& ctx, const EvalInputs& in) {
  return guarded(ctx, [&] {
    const auto cfg = training_config(ctx.config, ctx.jobs);
    eval::LoocvData data;
    auto images = [&](const fs::path& m) { return eval::eval_images(pipeline::read_manifest(m), cfg.preprocess); };
    if (in.manifest) {
      if (in.cars || in.noncar_train || in.noncar_validation || in.noncar_test) {
        fail(ErrorKind::kInput, "give either --manifest or the per-partition manifests, not both");
      }
      std::size_t k = 0;
      for (auto& e : images(*in.manifest)) {
        if (e.car) {
          data.cars.push_back(std::move(e));
          continue;
        }
        auto& part = k % 3 == 0 ? data.noncar_train : k % 3 == 1 ? data.noncar_validation : data.noncar_test;
        part.push_back(std::move(e));
        ++k;
      }
    } else {
      if (!in.cars || !in.noncar_train || !in.noncar_test) {
        fail(ErrorKind::kInput, "--cars, --noncar-train and --noncar-test are required without --manifest");
      }
      data.cars = images(*in.cars);
      data.noncar_train = images(*in.noncar_train);
      if (in.noncar_validation) data.noncar_validation = images(*in.noncar_validation);
      data.noncar_test = images(*in.noncar_test);
    }
    const auto r = eval::run_loocv(data, cfg);
    make_dirs(in.out_dir);
    imagecore::write_file(in.out_dir / "report.txt", r.report.to_text());
    imagecore::write_file(in.out_dir / "scores.txt", eval::format_scores(r.scores));
    pipeline::save_bundle(in.out_dir / "bundle", r.bundle);
    ctx.out << r.report.to_text();
    return kExitOk;
  });
}

int cmd_obscure(const Context& ctx, const fs::path& bundle_dir, const fs::path& car_image, const ObscureOptions& opts) {
  return guarded(ctx, [&] {
    const auto bundle = pipeline::load_bundle(bundle_dir);
    const imagecore::Roi roi = parse_roi(opts.roi, "--roi");
    // The scorer applies the bundle's log transform itself.
    imagecore::PreprocessConfig pre = bundle.preprocess;
    pre.apply_log = false;
    const auto r = imagecore::preprocess(imagecore::load_image(car_image), pre);
    if (!r.removed_columns.empty()) {
      fail(ErrorKind::kValidation, "car image has misfire stripes; ROI coordinates would not match");
    }
    auto cfg = obscuration_config(ctx.config);
    if (opts.region) cfg.region = parse_roi(*opts.region, "--region");
    const auto lib = synth::make_library(ctx.config.synth.scene.library);
    const auto trace = synth::obscuration_experiment(r.image, roi, lib, bundle, ctx.config.synth.seed, cfg, ctx.jobs);
    const std::string table = synth::format_trace(trace);
    if (opts.out) {
      imagecore::write_file(*opts.out, table);
    } else {
      ctx.out << table;
    }
    int reached = 0;
    for (bool b : trace.reached_target) reached += b;
    ctx.err << trace.realisations << " realisations, " << reached << " reached mra " << cfg.target_mra << '\n';
    return kExitOk;
  });
}

}  // namespace cargoscan::cli
