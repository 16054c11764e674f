#pragma once

#include <cstdint>
#include <array>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "sbl/encoders/encoders.hpp"
#include "sbl/episodes/data.hpp"
#include "sbl/episodes/episodes.hpp"
#include "sbl/training/trainers.hpp"

namespace sbl::cli {

/// Everything a run needs, read from one flat JSON object. Unknown keys are
/// config errors. Relative paths resolve against the config file's directory.
struct RunConfig {
  std::string name = "desk";

  std::filesystem::path recipes;  // empty: the built-in 24-category table
  int instances_per_category = 30;
  episodes::DataSettings data;
  std::uint64_t data_seed = 1;

  episodes::SplitCounts split;
  std::uint64_t split_seed = 2;

  encoders::PointEncoderConfig fp;
  encoders::ImageEncoderConfig fi;

  training::TrainConfig shape;
  training::TrainConfig image;
  training::TrainConfig align;    // also align-l1only, with w2 forced to 0
  training::TrainConfig oracle;   // defaults to the align settings
  training::TrainConfig triplet;
  training::TripletConfig triplet_loss;

  std::vector<episodes::EpisodeShape> grid{{5, 1, 10}, {5, 5, 10}};
  std::size_t eval_episodes = 1000;
  std::uint64_t eval_seed = 3;
  std::vector<std::string> eval_methods{"ptcld-simpleshot", "image-simpleshot", "shape-bias"};
  episodes::LogisticSettings logistic;
  std::size_t histogram_pairs = 100000;

  std::filesystem::path output_dir = "runs/desk";
};

/// Parses and validates. `base_dir` anchors relative paths. A set
/// `seed_override` replaces every seed in the file.
RunConfig parse_config(const nlohmann::json& j, const std::filesystem::path& base_dir,
                       std::optional<std::uint64_t> seed_override = std::nullopt);

/// Reads a config file; SBL_SEED_OVERRIDE, when set, overrides all seeds.
RunConfig load_config(const std::filesystem::path& path);

/// Every effective setting with defaults filled in, minus the output
/// directory. The recipes file enters by content, not by path.
nlohmann::json canonical_json(const RunConfig& config);

/// SHA-256 hex digest of the canonical JSON. Key order in the source file
/// does not matter.
std::string fingerprint(const RunConfig& config);

/// Methods `sbl train` accepts and the evaluation methods built on them.
const std::vector<std::string>& train_methods();
const std::vector<std::string>& eval_method_names();

}  // namespace sbl::cli
