#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <sstream>

#include "cargoscan/cli/commands.hpp"
#include "cargoscan/imagecore/pgm.hpp"
#include "cargoscan/pipeline/bundle.hpp"
#include "cargoscan/pipeline/dataset.hpp"

namespace cargoscan::cli {
namespace {

std::string slurp(const fs::path& p) { return imagecore::read_file(p); }

// Small scenes and windows so every command runs in about a second.
RunConfig small_config() {
  RunConfig c;
  c.synth.scene.width = 480;
  c.synth.scene.height = 320;
  c.synth.scene.car_length = 300;
  c.synth.scene.car_height = 100;
  c.synth.scene.max_cars = 1;
  c.synth.scene.max_objects = 5;
  c.synth.scene.library.size = 24;
  c.synth.scene.library.max_width = 150;
  c.synth.scene.library.max_height = 90;
  c.synth.cars = 4;
  c.synth.noncars = 8;
  c.synth.empties = 2;
  c.synth.seed = 9;
  c.windows.width = 128;
  c.windows.height = 128;
  c.sampler.t_roi = 0.5;
  c.forest.num_trees = 10;
  c.synth.obscuration.max_insertions = 40;
  return c;
}

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("cargoscan_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  int run(auto&& f, RunConfig cfg = small_config(), int jobs = 1) {
    out_.str("");
    err_.str("");
    const Context ctx{cfg, jobs, out_, err_};
    return f(ctx);
  }

  fs::path corpus() {
    const fs::path c = dir_ / "corpus";
    EXPECT_EQ(run([&](const Context& ctx) { return cmd_synth(ctx, c); }), kExitOk) << err_.str();
    return c;
  }

  fs::path dir_;
  std::ostringstream out_, err_;
};

TEST(RunConfigIo, EmptyDocumentGivesDefaults) { EXPECT_EQ(parse_run_config("{}"), RunConfig{}); }

TEST(RunConfigIo, RoundTrip) {
  RunConfig c = small_config();
  c.features.family = pipeline::FeatureFamily::kIntensity;
  c.features.intensity.sigmas = {1.5, 3.0};
  c.windows = pipeline::WindowSpec::rectangular();
  c.preprocess.apply_log = true;
  c.eval.t_car = 0.75;
  c.synth.obscuration.density_fraction = 0.3;
  const std::string text = format_run_config(c);
  const RunConfig back = parse_run_config(text);
  EXPECT_EQ(back, c);
  EXPECT_EQ(format_run_config(back), text);
  EXPECT_EQ(format_run_config(parse_run_config(format_run_config(RunConfig{}))), format_run_config(RunConfig{}));
}

TEST(RunConfigIo, RejectsUnknownKeysAndBadValues) {
  auto kind = [](const std::string& text) {
    try {
      parse_run_config(text);
    } catch (const Error& e) {
      return e.kind();
    }
    return ErrorKind::kIo;
  };
  EXPECT_EQ(kind(R"({"bogus": 1})"), ErrorKind::kConfig);
  EXPECT_EQ(kind(R"({"synth": {"library": {"sise": 3}}})"), ErrorKind::kConfig);
  EXPECT_EQ(kind(R"({"synth": {"obscuration": {"realisation": 3}}})"), ErrorKind::kConfig);
  EXPECT_EQ(kind(R"({"eval": {"t_car": "high"}})"), ErrorKind::kConfig);
  EXPECT_EQ(kind(R"({"forest": {"num_trees": 0}})"), ErrorKind::kConfig);
  EXPECT_EQ(kind("{"), ErrorKind::kFormat);
  try {
    parse_run_config(R"({"synth": {"library": {"sise": 3}}})");
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("synth.library.sise"), std::string::npos);
  }
}

TEST_F(Cli, PreprocessDirectory) {
  const fs::path in = dir_ / "in", out = dir_ / "out";
  fs::create_directories(in);
  imagecore::TransmissionImage img(64, 48, 0.5);
  for (int x = 0; x < 64; ++x)
    for (int y = 0; y < 16; ++y) img.pixels(x, y) = 0.9;
  for (const char* name : {"a.pgm", "b.pgm", "c.pgm"}) imagecore::save_image(in / name, img);
  EXPECT_EQ(run([&](const Context& c) { return cmd_preprocess(c, in, out); }), kExitOk);
  EXPECT_TRUE(fs::exists(out / "a.pgm") && fs::exists(out / "b.pgm") && fs::exists(out / "c.pgm"));
  EXPECT_NE(err_.str().find("a.pgm: ok"), std::string::npos);

  imagecore::write_file(in / "b.pgm", "P5 garbage");
  fs::remove_all(out);
  EXPECT_EQ(run([&](const Context& c) { return cmd_preprocess(c, in, out); }), kExitData);
  EXPECT_TRUE(fs::exists(out / "a.pgm"));
  EXPECT_FALSE(fs::exists(out / "b.pgm"));
  EXPECT_TRUE(fs::exists(out / "c.pgm"));

  const fs::path empty = dir_ / "empty";
  fs::create_directories(empty);
  EXPECT_EQ(run([&](const Context& c) { return cmd_preprocess(c, empty, dir_ / "o2"); }), kExitOk);
  EXPECT_NE(err_.str().find("warning"), std::string::npos);
  EXPECT_EQ(run([&](const Context& c) { return cmd_preprocess(c, dir_ / "missing", dir_ / "o3"); }), kExitIo);
}

TEST_F(Cli, SynthCountsAndDeterminism) {
  RunConfig cfg = small_config();
  cfg.synth.cars = 2;
  cfg.synth.noncars = 2;
  cfg.synth.empties = 1;
  const fs::path a = dir_ / "a", b = dir_ / "b";
  ASSERT_EQ(run([&](const Context& c) { return cmd_synth(c, a); }, cfg), kExitOk);
  ASSERT_EQ(run([&](const Context& c) { return cmd_synth(c, b); }, cfg, 3), kExitOk);
  int files = 0;
  for (const auto& e : fs::directory_iterator(a)) {
    ++files;
    EXPECT_EQ(slurp(e.path()), slurp(b / e.path().filename())) << e.path();
  }
  EXPECT_EQ(files, 6);
  cfg.synth.cars = cfg.synth.noncars = cfg.synth.empties = 0;
  const fs::path z = dir_ / "zero";
  ASSERT_EQ(run([&](const Context& c) { return cmd_synth(c, z); }, cfg), kExitOk);
  EXPECT_EQ(std::distance(fs::directory_iterator(z), fs::directory_iterator{}), 1);
  EXPECT_TRUE(fs::exists(z / "manifest.tsv"));
}

TEST_F(Cli, TrainClassifyAndReproducibility) {
  const fs::path c = corpus();
  const fs::path b1 = dir_ / "b1", b2 = dir_ / "b2";
  ASSERT_EQ(run([&](const Context& x) { return cmd_train(x, c / "manifest.tsv", b1); }), kExitOk) << err_.str();
  EXPECT_NE(out_.str().find("dimension = 184"), std::string::npos);
  ASSERT_EQ(run([&](const Context& x) { return cmd_train(x, c / "manifest.tsv", b2); }, small_config(), 4), kExitOk);
  for (const char* f : {"manifest.json", "forest.json"}) EXPECT_EQ(slurp(b1 / f), slurp(b2 / f)) << f;

  const std::vector<fs::path> imgs{c / "car_0000.pgm", c / "noncar_0001.pgm"};
  ASSERT_EQ(run([&](const Context& x) { return cmd_classify(x, b1, imgs, {}); }), kExitOk) << err_.str();
  const std::string one = out_.str();
  EXPECT_EQ(std::count(one.begin(), one.end(), '\n'), 2);
  EXPECT_EQ(one.rfind((c / "car_0000.pgm").string() + "\t", 0), 0u);
  ASSERT_EQ(run([&](const Context& x) { return cmd_classify(x, b1, imgs, {}); }, small_config(), 8), kExitOk);
  EXPECT_EQ(out_.str(), one);

  ClassifyOptions high;
  high.threshold = 1.1;
  high.heatmap_dir = dir_ / "heat";
  ASSERT_EQ(run([&](const Context& x) { return cmd_classify(x, b1, imgs, high); }), kExitOk);
  EXPECT_EQ(out_.str().find("\tcar\n"), std::string::npos);
  const auto heat = imagecore::decode_pgm8(imagecore::read_file(dir_ / "heat" / "car_0000.heatmap.pgm"));
  EXPECT_EQ(heat.width(), 480);
  EXPECT_EQ(heat.height(), 320);
  EXPECT_TRUE(fs::exists(dir_ / "heat" / "car_0000.heatmap.txt"));

  EXPECT_EQ(run([&](const Context& x) { return cmd_classify(x, dir_ / "nope", imgs, {}); }), kExitIo);
}

TEST_F(Cli, TrainWithoutCarsFails) {
  const fs::path c = corpus();
  auto data = pipeline::read_manifest(c / "manifest.tsv");
  std::erase_if(data.entries, [](const auto& e) { return e.car; });
  pipeline::write_manifest(c / "noncars.tsv", data);
  EXPECT_EQ(run([&](const Context& x) { return cmd_train(x, c / "noncars.tsv", dir_ / "b"); }), kExitData);
  EXPECT_NE(err_.str().find("error"), std::string::npos);
}

TEST_F(Cli, EvalReportsAndProtocolErrors) {
  const fs::path c = corpus();
  EvalInputs in;
  in.manifest = c / "manifest.tsv";
  in.out_dir = dir_ / "obifs";
  ASSERT_EQ(run([&](const Context& x) { return cmd_eval(x, in); }), kExitOk) << err_.str();
  EXPECT_NE(out_.str().find("auc = "), std::string::npos);
  EXPECT_TRUE(fs::exists(in.out_dir / "report.txt"));
  EXPECT_TRUE(fs::exists(in.out_dir / "scores.txt"));
  EXPECT_NO_THROW(pipeline::load_bundle(in.out_dir / "bundle"));

  RunConfig intensity = small_config();
  intensity.features.family = pipeline::FeatureFamily::kIntensity;
  in.out_dir = dir_ / "intensity";
  ASSERT_EQ(run([&](const Context& x) { return cmd_eval(x, in); }, intensity), kExitOk);
  EXPECT_NE(slurp(in.out_dir / "report.txt").find("feature_family = intensity"), std::string::npos);
  EXPECT_NE(slurp(dir_ / "obifs" / "report.txt").find("feature_family = obifs"), std::string::npos);

  // Partitions sharing a file.
  auto data = pipeline::read_manifest(c / "manifest.tsv");
  pipeline::Dataset cars, non;
  for (const auto& e : data.entries) (e.car ? cars : non).entries.push_back(e);
  pipeline::write_manifest(c / "cars.tsv", cars);
  pipeline::write_manifest(c / "non.tsv", non);
  EvalInputs bad;
  bad.cars = c / "cars.tsv";
  bad.noncar_train = c / "non.tsv";
  bad.noncar_test = c / "non.tsv";
  bad.out_dir = dir_ / "bad";
  EXPECT_EQ(run([&](const Context& x) { return cmd_eval(x, bad); }), kExitData);
  EXPECT_NE(err_.str().find("more than one partition"), std::string::npos);
}

TEST_F(Cli, ObscureTrace) {
  const fs::path c = corpus();
  ASSERT_EQ(run([&](const Context& x) { return cmd_train(x, c / "manifest.tsv", dir_ / "b"); }), kExitOk);
  const auto data = pipeline::read_manifest(c / "manifest.tsv");
  ObscureOptions opts;
  opts.roi = pipeline::format_rois({data.entries[0].rois[0]});
  RunConfig cfg = small_config();
  cfg.synth.obscuration.realisations = 1;
  ASSERT_EQ(run([&](const Context& x) { return cmd_obscure(x, dir_ / "b", data.entries[0].path, opts); }, cfg), kExitOk)
      << err_.str();
  std::istringstream table(out_.str());
  std::string line;
  std::getline(table, line);
  EXPECT_EQ(line, "# realisation object_count mra p_I");
  int rows = 0;
  double last = -1.0;
  while (std::getline(table, line)) {
    std::istringstream row(line);
    int r = -1, n = -1;
    double mra = -1, p = -1;
    row >> r >> n >> mra >> p;
    EXPECT_EQ(r, 0);
    EXPECT_EQ(n, rows);
    EXPECT_GE(mra, last);
    last = mra;
    ++rows;
  }
  EXPECT_EQ(rows, 41);
  opts.roi = "1,2,3";
  EXPECT_EQ(run([&](const Context& x) { return cmd_obscure(x, dir_ / "b", data.entries[0].path, opts); }, cfg),
            kExitData);
}

int shell(const std::string& args, const fs::path& log) {
  const std::string cmd = std::string(CARGOSCAN_BIN) + " " + args + " > " + log.string() + " 2>&1";
  const int rc = std::system(cmd.c_str());
  return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

TEST_F(Cli, BinaryHelpAndExitCodes) {
  const fs::path log = dir_ / "log.txt";
  EXPECT_EQ(shell("--help", log), 0);
  const std::string help = slurp(log);
  for (const char* flag : {"--config", "--jobs", "--seed", "--feature", "--help"}) {
    EXPECT_NE(help.find(flag), std::string::npos) << flag;
  }
  EXPECT_NE(help.find("[1]"), std::string::npos);  // --jobs default
  EXPECT_EQ(shell("classify --help", log), 0);
  const std::string chelp = slurp(log);
  for (const char* flag : {"--heatmap", "--threshold", "bundle t_car"}) EXPECT_NE(chelp.find(flag), std::string::npos) << flag;
  EXPECT_EQ(shell("--no-such-flag config", log), 1);
  EXPECT_EQ(shell("", log), 1);
  EXPECT_EQ(shell("--config /nonexistent/cfg.json config", log), 2);
  imagecore::write_file(dir_ / "bad.json", R"({"windows": {"widht": 3}})");
  EXPECT_EQ(shell("--config " + (dir_ / "bad.json").string() + " config", log), 1);
  EXPECT_NE(slurp(log).find("windows.widht"), std::string::npos);
  EXPECT_EQ(shell("classify " + (dir_ / "none").string() + " x.pgm", log), 2);
  EXPECT_EQ(shell("--seed 5 --feature intensity config", log), 0);
  const RunConfig echoed = parse_run_config(slurp(log));
  EXPECT_EQ(echoed.sampler.seed, 5u);
  EXPECT_EQ(echoed.forest.seed, 5u);
  EXPECT_EQ(echoed.features.family, pipeline::FeatureFamily::kIntensity);
}

}  // namespace
}  // namespace cargoscan::cli
