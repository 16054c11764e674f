#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "sbl/encoders/encoders.hpp"
#include "sbl/episodes/episodes.hpp"

namespace sbl::episodes {

/// Which embeddings form the class prototypes. Queries are images for `image`
/// and `averaged`; `pointcloud` is the shape-only reference model, whose
/// queries are point clouds.
enum class SupportRule { image, pointcloud, averaged };
enum class Classifier { simpleshot, logistic };

struct MethodSpec {
  std::string name;
  SupportRule rule = SupportRule::image;
  Classifier classifier = Classifier::simpleshot;
  const encoders::ImageEncoder* fi = nullptr;
  const encoders::PointEncoder* fp = nullptr;
  bool oracle = false;
  LogisticSettings logistic;
};

struct Prediction {
  std::uint64_t episode = 0;
  int query = 0;
  int truth = 0;
  int predicted = 0;

  friend bool operator==(const Prediction&, const Prediction&) = default;
};

struct EvalReport {
  std::string method;
  std::string variant;  // normalization mode for SimpleShot, "logistic" otherwise
  EpisodeShape shape;
  std::uint64_t seed = 0;
  bool oracle = false;
  std::string config_fingerprint;
  std::vector<std::uint64_t> episode_ids;
  std::vector<double> accuracies;  // one per episode, in episode_ids order
  double mean = 0.0;
  double ci95 = 0.0;
  std::vector<Prediction> predictions;

  std::size_t episodes() const { return accuracies.size(); }
};

struct EvalRequest {
  std::vector<EpisodeShape> grid{{5, 1, 10}};
  std::size_t episodes = 1000;
  std::uint64_t seed = 0;
};

/// Runs the same seeded episode stream for every grid cell. SimpleShot
/// methods yield one report per normalization mode, logistic methods one.
/// `base` supplies the base-class means for l2_centered.
std::vector<EvalReport> evaluate(const LoadedDataset& ds, const Section& section, const Section& base,
                                 const MethodSpec& method, const EvalRequest& request);

/// The episodes evaluate() uses for one grid cell.
std::vector<Episode> episode_stream(const LoadedDataset& ds, const Section& section,
                                    const EpisodeShape& shape, std::size_t count, std::uint64_t seed);

/// Graph-free embeddings in chunks, parallel across chunks. Rows follow input
/// order and do not depend on the thread count.
Tensor embed_images(const encoders::ImageEncoder& fi, const std::vector<const DepthImage*>& images);
Tensor embed_clouds(const encoders::PointEncoder& fp, const std::vector<const PointCloud*>& clouds);

nlohmann::json report_to_json(const EvalReport& r);
EvalReport report_from_json(const nlohmann::json& j);
// run_id,method,variant,n_way,m_shot,mean,ci,episodes,seed
std::string summary_csv_header();
std::string summary_csv_row(const std::string& run_id, const EvalReport& r);
// episode,query,true,predicted,method
std::string predictions_csv(const EvalReport& r);

}  // namespace sbl::episodes
