#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "sbl/episodes/data.hpp"
#include "sbl/numerics/random.hpp"
#include "sbl/numerics/tensor.hpp"

namespace sbl::episodes {

struct SplitCounts {
  int train = 12;
  int val = 4;
  int test = 8;
};

struct SplitSpec {
  std::vector<int> train, val, test;  // category ids, ascending
  std::uint64_t seed = 0;
};

/// Categories with the most instances go to train (ties by lower category id);
/// the rest are shuffled by `seed` and dealt to val, then test.
SplitSpec make_splits(const LoadedDataset& ds, const SplitCounts& counts, std::uint64_t seed);

/// Config error if any category appears in two sections or not in the dataset.
void check_disjoint(const SplitSpec& split, const LoadedDataset& ds);

/// One split section: its classes and the dataset indices of their instances.
struct Section {
  std::vector<int> classes;
  std::map<int, std::vector<std::size_t>> members;
};

Section make_section(const LoadedDataset& ds, const std::vector<int>& classes);

struct EpisodeShape {
  int n_way = 5;
  int m_shot = 1;
  int q_queries = 10;
};

struct SupportItem {
  int slot = 0;
  std::size_t instance = 0;  // dataset index
  int view = 0;
  const DepthImage* image = nullptr;
  const PointCloud* cloud = nullptr;
};

// Queries carry an image and their hidden slot only; there is no cloud field.
struct QueryItem {
  int slot = 0;
  std::size_t instance = 0;
  int view = 0;
  const DepthImage* image = nullptr;
};

struct Episode {
  std::uint64_t id = 0;
  EpisodeShape shape;
  std::vector<int> classes;  // category id for each slot
  std::vector<SupportItem> supports;
  std::vector<QueryItem> queries;

  std::vector<int> support_labels() const;
  std::vector<int> query_labels() const;
};

/// n_way classes without replacement, then m_shot + q_queries instances per
/// class without replacement, and one random stored view per image slot.
/// Infeasible requests are episode errors naming the limiting class.
Episode sample_episode(const LoadedDataset& ds, const Section& section, const EpisodeShape& shape,
                       Rng& rng, std::uint64_t id = 0);

/// Per-episode seed: depends on the evaluation seed, the grid cell and the
/// episode index only.
std::uint64_t episode_seed(std::uint64_t eval_seed, const EpisodeShape& shape, std::uint64_t index);

enum class NormMode { none, l2, l2_centered };
std::string to_string(NormMode mode);
inline constexpr NormMode kAllNormModes[] = {NormMode::none, NormMode::l2, NormMode::l2_centered};

/// Applies a normalization mode to every row. `base_mean` (length d) is
/// required for l2_centered. A zero row under l2 modes is a degenerate error.
Tensor normalize_rows(const Tensor& rows, NormMode mode, const Tensor* base_mean = nullptr);

/// Row-wise mean of a [N x d] tensor.
Tensor row_mean(const Tensor& rows);

/// Per-class mean of support rows; labels are slots in [0, n_way).
Tensor class_centroids(const Tensor& support, std::span<const int> labels, int n_way);

/// Prototype per class = mean of its 2m vectors {phi_i, phi_p}.
Tensor shape_biased_prototypes(const Tensor& image_support, const Tensor& shape_support,
                               std::span<const int> labels, int n_way);

/// Argmin squared Euclidean distance to each prototype; ties to the lowest slot.
std::vector<int> nearest_prototype(const Tensor& prototypes, const Tensor& queries);

/// SimpleShot rule: normalize, average per class, nearest centroid.
std::vector<int> nearest_centroid_classify(const Tensor& support, std::span<const int> labels,
                                           const Tensor& queries, int n_way, NormMode mode,
                                           const Tensor* base_mean = nullptr);

/// Label of the support with the highest cosine similarity; ties to the lower
/// support index.
std::vector<int> nearest_neighbor_cosine(const Tensor& support, std::span<const int> labels,
                                         const Tensor& queries);

struct LogisticSettings {
  int steps = 500;
  double learning_rate = 0.5;
  double reg_strength = 1e-3;
};

/// Multinomial logistic regression fit on the supports by full-batch gradient
/// descent from zero weights, then argmax over classes.
std::vector<int> logistic_episode_classify(const Tensor& support, std::span<const int> labels,
                                           const Tensor& queries, int n_way,
                                           const LogisticSettings& settings = {});

/// Fraction of predictions equal to the truth.
double accuracy(std::span<const int> predicted, std::span<const int> truth);

/// 1.96 * sample stddev / sqrt(K); zero for K = 1.
double confidence_halfwidth(std::span<const double> accuracies);
double mean(std::span<const double> values);

}  // namespace sbl::episodes
