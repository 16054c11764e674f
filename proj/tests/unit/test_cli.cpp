#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>
#include <unistd.h>

#include "sbl/analysis/analysis.hpp"
#include "sbl/binary_io.hpp"
#include "sbl/cli/commands.hpp"
#include "sbl/episodes/evaluate.hpp"
#include "sbl/error.hpp"
#include "sbl/numerics/kernels.hpp"
#include "sbl/training/trainers.hpp"

using namespace sbl;
using namespace sbl::cli;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

json tiny_json() {
  return json::parse(R"({
    "name": "tiny", "instances_per_category": 6, "points": 32, "views": 2, "image_size": 16,
    "render_points": 128, "split_train": 4, "split_val": 2, "split_test": 3,
    "embed_dim": 8, "fp_point_widths": [8], "fi_patch": 8, "fi_patch_width": 8, "fi_trunk_hidden": [16],
    "shape_epochs": 2, "shape_batch_size": 8, "image_epochs": 2, "image_batch_size": 8,
    "align_epochs": 2, "align_batch_size": 8, "triplet_epochs": 2, "triplet_batch_size": 8,
    "val_episodes": 3, "val_way": 2, "val_queries": 2,
    "eval_grid": [[3, 1], [2, 2]], "eval_queries": 2, "eval_episodes": 12,
    "eval_methods": ["ptcld-simpleshot", "image-simpleshot", "shape-bias"],
    "histogram_pairs": 500
  })");
}

ErrorKind kind_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  ADD_FAILURE() << "no error raised";
  return ErrorKind::refusal;
}

std::string what_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.what();
  }
  return {};
}

std::map<std::string, std::string> directory_bytes(const fs::path& root) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::recursive_directory_iterator(root)) {
    if (e.is_regular_file()) out[fs::relative(e.path(), root).string()] = read_file(e.path());
  }
  return out;
}

class CliRun : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("sbl_cli_" + std::to_string(::getpid()) + "_" +
            ::testing::UnitTest::GetInstance()->current_test_info()->name());
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  RunConfig config(json overrides = json::object()) const {
    json j = tiny_json();
    j["output_dir"] = (dir_ / "run").string();
    j.update(overrides);
    return parse_config(j, dir_);
  }

  fs::path dir_;
};

}  // namespace

TEST(RunConfigTest, FingerprintIgnoresKeyOrder) {
  const auto a = parse_config(json::parse(R"({"points": 64, "views": 3, "eval_seed": 9})"), ".");
  const auto b = parse_config(json::parse(R"({"eval_seed": 9, "views": 3, "points": 64})"), ".");
  EXPECT_EQ(fingerprint(a), fingerprint(b));
  EXPECT_EQ(fingerprint(a).size(), 64u);
  const auto c = parse_config(json::parse(R"({"eval_seed": 10, "views": 3, "points": 64})"), ".");
  EXPECT_NE(fingerprint(a), fingerprint(c));
}

TEST(RunConfigTest, FingerprintIgnoresOutputDirectory) {
  const auto a = parse_config(json::parse(R"({"output_dir": "x"})"), ".");
  const auto b = parse_config(json::parse(R"({"output_dir": "y"})"), ".");
  EXPECT_EQ(fingerprint(a), fingerprint(b));
}

TEST(RunConfigTest, UnknownKeysAndBadTypesAreConfigErrors) {
  EXPECT_EQ(kind_of([] { parse_config(json::parse(R"({"pionts": 64})"), "."); }), ErrorKind::config);
  EXPECT_EQ(kind_of([] { parse_config(json::parse(R"({"points": "many"})"), "."); }), ErrorKind::config);
  EXPECT_EQ(kind_of([] { parse_config(json::parse(R"({"eval_methods": ["magic"]})"), "."); }),
            ErrorKind::config);
  EXPECT_EQ(kind_of([] { parse_config(json::parse(R"({"align_w2": -1})"), "."); }), ErrorKind::config);
  EXPECT_EQ(kind_of([] { parse_config(json::parse(R"({"shape_optimizer": "rmsprop"})"), "."); }),
            ErrorKind::config);
}

TEST(RunConfigTest, MissingRecipesFileNamesThePath) {
  const auto msg = what_of([] { parse_config(json::parse(R"({"recipes": "nowhere/r.json"})"), "/tmp"); });
  EXPECT_NE(msg.find("/tmp/nowhere/r.json"), std::string::npos) << msg;
  EXPECT_EQ(kind_of([] { parse_config(json::parse(R"({"recipes": "nowhere/r.json"})"), "/tmp"); }),
            ErrorKind::path);
}

TEST(RunConfigTest, SeedOverrideReplacesEverySeed) {
  const auto c = parse_config(json::parse(R"({"data_seed": 1, "split_seed": 2, "train_seed": 3})"), ".", 77);
  EXPECT_EQ(c.data_seed, 77u);
  EXPECT_EQ(c.split_seed, 77u);
  EXPECT_EQ(c.eval_seed, 77u);
  for (const auto* t : {&c.shape, &c.image, &c.align, &c.oracle, &c.triplet}) EXPECT_EQ(t->seed, 77u);
}

TEST(RunConfigTest, OracleInheritsAlignSettings) {
  const auto c = parse_config(json::parse(R"({"align_lr": 0.005, "align_w2": 3, "oracle_epochs": 7})"), ".");
  EXPECT_EQ(c.oracle.optimizer.learning_rate, 0.005);
  EXPECT_EQ(c.oracle.w2, 3.0);
  EXPECT_EQ(c.oracle.epochs, 7);
  EXPECT_EQ(c.align.epochs, 200);
}

TEST_F(CliRun, GenWritesOneFilePerCloudAndView) {
  const auto c = config();
  cmd_gen(c, {});
  const RunPaths paths{c.output_dir};
  std::size_t clouds = 0, images = 0;
  for (const auto& e : fs::directory_iterator(paths.data() / "ptcld")) clouds += e.is_regular_file();
  for (const auto& e : fs::directory_iterator(paths.data() / "img")) images += e.is_regular_file();
  EXPECT_EQ(clouds, 24u * 6u);
  EXPECT_EQ(images, 24u * 6u * 2u);
}

TEST_F(CliRun, GenRefusesExistingDataUnlessForced) {
  const auto c = config();
  cmd_gen(c, {});
  const auto first = directory_bytes(RunPaths{c.output_dir}.data());
  EXPECT_EQ(kind_of([&] { cmd_gen(c, {}); }), ErrorKind::refusal);
  cmd_gen(c, {.force = true});
  EXPECT_EQ(directory_bytes(RunPaths{c.output_dir}.data()), first);
}

TEST_F(CliRun, TrainPrerequisitesAndOracleGate) {
  const auto c = config();
  EXPECT_EQ(kind_of([&] { cmd_train(c, "shape", {}); }), ErrorKind::dependency);
  cmd_gen(c, {});
  const auto msg = what_of([&] { cmd_train(c, "align", {}); });
  EXPECT_NE(msg.find("shape.ckpt"), std::string::npos) << msg;
  EXPECT_EQ(kind_of([&] { cmd_train(c, "align", {}); }), ErrorKind::dependency);
  EXPECT_EQ(kind_of([&] { cmd_train(c, "bogus", {}); }), ErrorKind::config);
  cmd_train(c, "shape", {});
  EXPECT_EQ(kind_of([&] { cmd_train(c, "oracle", {}); }), ErrorKind::refusal);
  cmd_train(c, "oracle", {.oracle_ack = true});
  const RunPaths paths{c.output_dir};
  EXPECT_TRUE(training::load_model(paths.model("oracle")).oracle);
  EXPECT_TRUE(fs::exists(paths.train_log("oracle")));
}

TEST_F(CliRun, AlignL1OnlyAndRepeatableTraining) {
  const auto c = config();
  cmd_gen(c, {});
  cmd_train(c, "shape", {});
  const RunPaths paths{c.output_dir};
  const std::string first = read_file(paths.model("shape"));
  cmd_train(c, "shape", {});
  EXPECT_EQ(read_file(paths.model("shape")), first);
  cmd_train(c, "align-l1only", {});
  EXPECT_EQ(training::load_model(paths.model("align-l1only")).method, "align-l1only");
  cmd_train(c, "align", {});
  EXPECT_EQ(training::load_model(paths.model("align")).method, "align");
}

TEST_F(CliRun, EvalAndAnalyzeEndToEnd) {
  const auto c = config();
  cmd_gen(c, {});
  EXPECT_EQ(kind_of([&] { cmd_eval(c, {}); }), ErrorKind::dependency);
  for (const std::string m : {"shape", "image", "align", "align-l1only"}) cmd_train(c, m, {});
  const auto summary = cmd_eval(c, {});
  const RunPaths paths{c.output_dir};

  // One CSV row per method and grid cell, plus the header.
  const std::string csv = read_file(paths.results());
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 1 + 3 * 2);
  EXPECT_EQ(summary.at("config_fingerprint").get<std::string>(), fingerprint(c));

  // Paired episodes: every method saw the same ids in each cell.
  std::map<std::string, std::vector<std::uint64_t>> ids;
  for (const auto& r : summary.at("results")) {
    const auto report = episodes::report_from_json(
        json::parse(read_file(paths.summary().parent_path() / r.at("report").get<std::string>())));
    const std::string cell = std::to_string(report.shape.n_way) + "/" + std::to_string(report.shape.m_shot);
    if (ids.count(cell)) {
      EXPECT_EQ(ids[cell], report.episode_ids) << r.at("method");
    } else {
      ids[cell] = report.episode_ids;
    }
    EXPECT_EQ(r.at("variants").size(), 3u);
  }

  const auto analyzed = cmd_analyze(c);
  const auto& a = analyzed.at("analysis");
  EXPECT_EQ(a.at("correlations").size(), 2u * 3u);  // unordered pairs per cell
  EXPECT_EQ(a.at("overlaps").size(), 2u * 6u);      // ordered pairs per cell
  const std::string hist = read_file(paths.histograms());
  for (const std::string tag : {"fp,", "fi-image,", "fi-align,", "fi-align-l1only,"}) {
    std::size_t rows = 0;
    std::istringstream in(hist);
    for (std::string line; std::getline(in, line);) rows += line.rfind(tag, 0) == 0;
    EXPECT_EQ(rows, analysis::kHistogramBins) << tag;
  }
}

TEST_F(CliRun, EvalRejectsTooManyWays) {
  const auto c = config({{"eval_grid", {{4, 1}}}});
  cmd_gen(c, {});
  cmd_train(c, "shape", {});
  EXPECT_EQ(kind_of([&] { cmd_eval(c, {"ptcld-simpleshot"}); }), ErrorKind::episode);
}

TEST_F(CliRun, ResultsDoNotDependOnThreadCount) {
  const auto c = config();
  cmd_gen(c, {});
  for (const std::string m : {"shape", "image", "align"}) cmd_train(c, m, {});
  const RunPaths paths{c.output_dir};
  const int saved = kernels::thread_count();
  kernels::set_thread_count(1);
  cmd_eval(c, {});
  const std::string one = read_file(paths.results());
  kernels::set_thread_count(4);
  cmd_eval(c, {});
  kernels::set_thread_count(saved);
  EXPECT_EQ(read_file(paths.results()), one);
}

TEST(CliBinary, ExitCodes) {
  const fs::path dir = fs::temp_directory_path() / ("sbl_cli_exit_" + std::to_string(::getpid()));
  fs::create_directories(dir);
  const auto run = [&](const std::string& args) {
    const int status = std::system((std::string(SBL_BINARY) + " " + args + " >/dev/null 2>&1").c_str());
    return WEXITSTATUS(status);
  };
  std::ofstream(dir / "bad.json") << R"({"pionts": 3})";
  std::ofstream(dir / "ok.json") << R"({"output_dir": "out"})";
  EXPECT_EQ(run("train shape --config " + (dir / "bad.json").string()), 2);
  EXPECT_EQ(run("train align --config " + (dir / "ok.json").string()), 3);
  EXPECT_EQ(run("eval --config " + (dir / "ok.json").string()), 3);
  EXPECT_EQ(run("frobnicate"), 2);
  fs::remove_all(dir);
}
