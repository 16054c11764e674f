#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "sbl/episodes/evaluate.hpp"
#include "sbl/numerics/random.hpp"
#include "sbl/numerics/tensor.hpp"

namespace sbl::analysis {

inline constexpr std::size_t kHistogramBins = 50;

struct DistanceHistogram {
  std::string model;    // e.g. "fp", "fi-align"
  std::string section;  // "train" or "val"
  std::vector<double> edges;         // kHistogramBins + 1 values from 0 to the observed max
  std::vector<std::size_t> counts;   // kHistogramBins values; sum = pairs measured
  double mean = 0.0;                 // mean of the measured distances
  std::size_t pairs() const;
};

/// Squared Euclidean distances between rows with different labels. When the
/// number of such pairs exceeds max_pairs, max_pairs of them are drawn
/// uniformly with replacement; otherwise all are used. A single class is an
/// error.
DistanceHistogram interclass_distances(const Tensor& embeddings, std::span<const int> labels,
                                       std::size_t max_pairs, Rng& rng);

/// 1-Wasserstein distance between two histograms, each read as point masses
/// at its bin centers.
double wasserstein1(const DistanceHistogram& a, const DistanceHistogram& b);

// model,section,bin_lo,bin_hi,count
std::string histogram_csv_header();
std::string histogram_csv_rows(const DistanceHistogram& h);

/// Per-episode accuracies of two models over the same episodes.
struct PairedAccuracySeries {
  std::vector<std::uint64_t> episode_ids;
  std::vector<double> a;
  std::vector<double> b;
};

/// Pairs two reports; episode ids must match in value and order.
PairedAccuracySeries pair_series(const episodes::EvalReport& a, const episodes::EvalReport& b);

struct Correlation {
  double r = 0.0;
  double p_value = 1.0;  // two-sided, Student t with n - 2 degrees of freedom
  std::size_t n = 0;
};

/// Pearson correlation of the two accuracy vectors. Needs n >= 3 and nonzero
/// variance in both.
Correlation pearson(const PairedAccuracySeries& series);
Correlation pearson(std::span<const double> x, std::span<const double> y);

/// Among queries model a gets wrong, the fraction model b gets right. The logs
/// must cover identical (episode, query) keys. Empty when a makes no errors.
std::optional<double> misclassification_overlap(const std::vector<episodes::Prediction>& a,
                                                const std::vector<episodes::Prediction>& b);

}  // namespace sbl::analysis
