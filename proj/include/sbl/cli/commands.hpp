#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

#include "sbl/cli/run_config.hpp"
#include "sbl/episodes/data.hpp"
#include "sbl/episodes/episodes.hpp"

namespace sbl::cli {

struct Options {
  bool force = false;       // gen: replace an existing dataset directory
  bool oracle_ack = false;  // train oracle: test classes may be used
};

/// Output layout under RunConfig::output_dir.
struct RunPaths {
  std::filesystem::path root;

  std::filesystem::path data() const { return root / "data"; }
  std::filesystem::path model(const std::string& method) const {
    return root / "models" / (method + ".ckpt");
  }
  std::filesystem::path train_log(const std::string& method) const {
    return root / "models" / (method + "_log.csv");
  }
  std::filesystem::path summary() const { return root / "eval" / "summary.json"; }
  std::filesystem::path results() const { return root / "eval" / "results.csv"; }
  std::filesystem::path reports() const { return root / "eval" / "reports"; }
  std::filesystem::path histograms() const { return root / "analysis" / "histograms.csv"; }
};

/// The generated dataset with its split sections.
struct RunData {
  episodes::LoadedDataset dataset;
  episodes::SplitSpec split;
  episodes::Section train, val, test;
};

/// Loads the dataset written by cmd_gen; a dependency error when absent.
RunData load_run_data(const RunConfig& config);

/// Generates, renders and writes the dataset. Refuses a non-empty dataset
/// directory unless forced.
void cmd_gen(const RunConfig& config, const Options& options);

/// Trains one of train_methods() and writes its checkpoint and log.
void cmd_train(const RunConfig& config, const std::string& method, const Options& options);

/// Evaluates each method (config.eval_methods when `methods` is empty) on the
/// same test episode streams. Writes one report per method, variant and grid
/// cell, the result CSV (best SimpleShot variant per method and cell) and the
/// summary JSON, which is returned.
nlohmann::json cmd_eval(const RunConfig& config, const std::vector<std::string>& methods);

/// Correlations and overlaps between the methods in the summary, interclass
/// distance histograms on val classes for every trained model. Writes the
/// histogram CSV and adds an "analysis" object to the summary.
nlohmann::json cmd_analyze(const RunConfig& config);

/// Runs the gradient-check suite, printing one line per case. True if all pass.
bool cmd_gradcheck(std::uint64_t seed, std::ostream& out);

}  // namespace sbl::cli
