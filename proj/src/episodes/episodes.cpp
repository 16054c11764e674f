#include "sbl/episodes/episodes.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "sbl/error.hpp"

namespace sbl::episodes {

namespace {

// First k entries of a partial Fisher-Yates shuffle of `items`.
template <class T>
std::vector<T> choose(std::vector<T> items, std::size_t k, Rng& rng) {
  for (std::size_t i = 0; i < k; ++i) {
    std::swap(items[i], items[uniform_index(rng, i, items.size() - 1)]);
  }
  items.resize(k);
  return items;
}

}  // namespace

SplitSpec make_splits(const LoadedDataset& ds, const SplitCounts& counts, std::uint64_t seed) {
  std::map<int, std::size_t> sizes;
  for (std::size_t i = 0; i < ds.size(); ++i) ++sizes[ds.category(i)];
  if (counts.train < 0 || counts.val < 0 || counts.test < 0 ||
      static_cast<std::size_t>(counts.train + counts.val + counts.test) > sizes.size()) {
    fail(ErrorKind::config, "split counts " + std::to_string(counts.train) + "/" +
                                std::to_string(counts.val) + "/" + std::to_string(counts.test) +
                                " exceed the " + std::to_string(sizes.size()) + " categories");
  }
  std::vector<std::pair<std::size_t, int>> by_size;
  for (const auto& [cat, n] : sizes) by_size.emplace_back(n, cat);
  std::stable_sort(by_size.begin(), by_size.end(),
                   [](const auto& a, const auto& b) { return a.first > b.first; });

  SplitSpec split;
  split.seed = seed;
  std::vector<int> rest;
  for (std::size_t i = 0; i < by_size.size(); ++i) {
    if (i < static_cast<std::size_t>(counts.train)) {
      split.train.push_back(by_size[i].second);
    } else {
      rest.push_back(by_size[i].second);
    }
  }
  std::sort(rest.begin(), rest.end());
  Rng rng = make_rng(seed, {0x5711});
  rest = choose(std::move(rest), static_cast<std::size_t>(counts.val + counts.test), rng);
  split.val.assign(rest.begin(), rest.begin() + counts.val);
  split.test.assign(rest.begin() + counts.val, rest.end());
  for (auto* v : {&split.train, &split.val, &split.test}) std::sort(v->begin(), v->end());
  return split;
}

void check_disjoint(const SplitSpec& split, const LoadedDataset& ds) {
  std::set<int> seen;
  for (const auto* section : {&split.train, &split.val, &split.test}) {
    for (int c : *section) {
      if (!seen.insert(c).second) {
        fail(ErrorKind::config, "category " + std::to_string(c) + " appears in two split sections");
      }
      if (!ds.category_names().count(c)) {
        fail(ErrorKind::config, "split names category " + std::to_string(c) + " absent from the dataset");
      }
    }
  }
}

Section make_section(const LoadedDataset& ds, const std::vector<int>& classes) {
  Section s;
  s.classes = classes;
  for (int c : classes) s.members[c];
  for (std::size_t i = 0; i < ds.size(); ++i) {
    auto it = s.members.find(ds.category(i));
    if (it != s.members.end()) it->second.push_back(i);
  }
  return s;
}

std::vector<int> Episode::support_labels() const {
  std::vector<int> out;
  for (const auto& s : supports) out.push_back(s.slot);
  return out;
}

std::vector<int> Episode::query_labels() const {
  std::vector<int> out;
  for (const auto& q : queries) out.push_back(q.slot);
  return out;
}

std::uint64_t episode_seed(std::uint64_t eval_seed, const EpisodeShape& shape, std::uint64_t index) {
  return derive_seed(eval_seed, {static_cast<std::uint64_t>(shape.n_way),
                                 static_cast<std::uint64_t>(shape.m_shot),
                                 static_cast<std::uint64_t>(shape.q_queries), index});
}

Episode sample_episode(const LoadedDataset& ds, const Section& section, const EpisodeShape& shape,
                       Rng& rng, std::uint64_t id) {
  if (shape.n_way < 1 || shape.m_shot < 1 || shape.q_queries < 1) {
    fail(ErrorKind::config, "episode n_way, m_shot and q_queries must be positive");
  }
  if (section.classes.size() < static_cast<std::size_t>(shape.n_way)) {
    fail(ErrorKind::episode, std::to_string(shape.n_way) + "-way episodes need " +
                                 std::to_string(shape.n_way) + " classes but the section has " +
                                 std::to_string(section.classes.size()));
  }
  const auto per_class = static_cast<std::size_t>(shape.m_shot + shape.q_queries);
  for (int c : section.classes) {
    if (section.members.at(c).size() < per_class) {
      fail(ErrorKind::episode, "class " + std::to_string(c) + " has " +
                                   std::to_string(section.members.at(c).size()) +
                                   " instances; the episode needs " + std::to_string(per_class));
    }
  }
  Episode ep;
  ep.id = id;
  ep.shape = shape;
  ep.classes = choose(section.classes, static_cast<std::size_t>(shape.n_way), rng);
  for (int slot = 0; slot < shape.n_way; ++slot) {
    const auto picked = choose(section.members.at(ep.classes[slot]), per_class, rng);
    for (std::size_t j = 0; j < per_class; ++j) {
      const std::size_t inst = picked[j];
      const auto& views = ds.views(inst);
      const int view = static_cast<int>(uniform_index(rng, 0, views.size() - 1));
      if (j < static_cast<std::size_t>(shape.m_shot)) {
        ep.supports.push_back({slot, inst, view, &views[view], &ds.cloud(inst)});
      } else {
        ep.queries.push_back({slot, inst, view, &views[view]});
      }
    }
  }
  return ep;
}

std::string to_string(NormMode mode) {
  switch (mode) {
    case NormMode::none: return "none";
    case NormMode::l2: return "l2";
    case NormMode::l2_centered: return "l2_centered";
  }
  return "?";
}

Tensor row_mean(const Tensor& rows) {
  Tensor m({rows.cols()}, 0.0);
  for (std::size_t r = 0; r < rows.rows(); ++r)
    for (std::size_t c = 0; c < rows.cols(); ++c) m[c] += rows.at(r, c);
  for (auto& v : m.data()) v /= static_cast<double>(rows.rows());
  return m;
}

Tensor normalize_rows(const Tensor& rows, NormMode mode, const Tensor* base_mean) {
  if (mode == NormMode::none) return rows;
  Tensor out = rows;
  const std::size_t d = rows.cols();
  if (mode == NormMode::l2_centered) {
    if (!base_mean || base_mean->numel() != d) {
      fail(ErrorKind::config, "l2_centered needs a base-class mean of length " + std::to_string(d));
    }
  }
  for (std::size_t r = 0; r < rows.rows(); ++r) {
    double s = 0.0;
    for (std::size_t c = 0; c < d; ++c) {
      double& v = out.data()[r * d + c];
      if (mode == NormMode::l2_centered) v -= (*base_mean)[c];
      s += v * v;
    }
    if (!(s > 0.0)) fail(ErrorKind::degenerate, "cannot L2-normalize a zero embedding");
    const double n = std::sqrt(s);
    for (std::size_t c = 0; c < d; ++c) out.data()[r * d + c] /= n;
  }
  return out;
}

Tensor class_centroids(const Tensor& support, std::span<const int> labels, int n_way) {
  if (labels.size() != support.rows()) fail(ErrorKind::dimension, "one label per support row required");
  const std::size_t d = support.cols();
  Tensor sums({static_cast<std::size_t>(n_way), d}, 0.0);
  std::vector<double> counts(static_cast<std::size_t>(n_way), 0.0);
  for (std::size_t r = 0; r < labels.size(); ++r) {
    const int l = labels[r];
    if (l < 0 || l >= n_way) fail(ErrorKind::label, "support label " + std::to_string(l) + " out of range");
    counts[l] += 1.0;
    for (std::size_t c = 0; c < d; ++c) sums.data()[l * d + c] += support.at(r, c);
  }
  for (int l = 0; l < n_way; ++l) {
    if (counts[l] == 0.0) fail(ErrorKind::empty_set, "class slot " + std::to_string(l) + " has no supports");
    for (std::size_t c = 0; c < d; ++c) sums.data()[l * d + c] /= counts[l];
  }
  return sums;
}

Tensor shape_biased_prototypes(const Tensor& image_support, const Tensor& shape_support,
                               std::span<const int> labels, int n_way) {
  if (image_support.shape() != shape_support.shape()) {
    fail(ErrorKind::dimension, "image supports " + image_support.shape_str() +
                                   " and shape supports " + shape_support.shape_str() + " differ");
  }
  const std::size_t s = image_support.rows(), d = image_support.cols();
  Tensor both({2 * s, d});
  std::vector<int> both_labels(2 * s);
  for (std::size_t r = 0; r < s; ++r) {
    for (std::size_t c = 0; c < d; ++c) {
      both.data()[r * d + c] = image_support.at(r, c);
      both.data()[(s + r) * d + c] = shape_support.at(r, c);
    }
    both_labels[r] = both_labels[s + r] = labels[r];
  }
  return class_centroids(both, both_labels, n_way);
}

std::vector<int> nearest_prototype(const Tensor& prototypes, const Tensor& queries) {
  if (prototypes.cols() != queries.cols()) {
    fail(ErrorKind::dimension, "prototypes " + prototypes.shape_str() + " vs queries " + queries.shape_str());
  }
  const std::size_t d = queries.cols();
  std::vector<int> out(queries.rows());
  for (std::size_t q = 0; q < queries.rows(); ++q) {
    double best = 0.0;
    for (std::size_t k = 0; k < prototypes.rows(); ++k) {
      double s = 0.0;
      for (std::size_t c = 0; c < d; ++c) {
        const double diff = queries.at(q, c) - prototypes.at(k, c);
        s += diff * diff;
      }
      if (k == 0 || s < best) {
        best = s;
        out[q] = static_cast<int>(k);
      }
    }
  }
  return out;
}

std::vector<int> nearest_centroid_classify(const Tensor& support, std::span<const int> labels,
                                           const Tensor& queries, int n_way, NormMode mode,
                                           const Tensor* base_mean) {
  const Tensor s = normalize_rows(support, mode, base_mean);
  const Tensor q = normalize_rows(queries, mode, base_mean);
  return nearest_prototype(class_centroids(s, labels, n_way), q);
}

std::vector<int> nearest_neighbor_cosine(const Tensor& support, std::span<const int> labels,
                                         const Tensor& queries) {
  const Tensor s = normalize_rows(support, NormMode::l2);
  const Tensor q = normalize_rows(queries, NormMode::l2);
  const std::size_t d = s.cols();
  std::vector<int> out(q.rows());
  for (std::size_t i = 0; i < q.rows(); ++i) {
    double best = 0.0;
    for (std::size_t k = 0; k < s.rows(); ++k) {
      double dot = 0.0;
      for (std::size_t c = 0; c < d; ++c) dot += q.at(i, c) * s.at(k, c);
      if (k == 0 || dot > best) {
        best = dot;
        out[i] = labels[k];
      }
    }
  }
  return out;
}

std::vector<int> logistic_episode_classify(const Tensor& support, std::span<const int> labels,
                                           const Tensor& queries, int n_way,
                                           const LogisticSettings& settings) {
  const std::size_t n = support.rows(), d = support.cols(), k = static_cast<std::size_t>(n_way);
  if (labels.size() != n) fail(ErrorKind::dimension, "one label per support row required");
  std::vector<double> W(d * k, 0.0), b(k, 0.0), gW(d * k), gb(k), p(k);
  for (int step = 0; step < settings.steps; ++step) {
    std::fill(gW.begin(), gW.end(), 0.0);
    std::fill(gb.begin(), gb.end(), 0.0);
    for (std::size_t r = 0; r < n; ++r) {
      double peak = -1e300;
      for (std::size_t j = 0; j < k; ++j) {
        double z = b[j];
        for (std::size_t c = 0; c < d; ++c) z += support.at(r, c) * W[c * k + j];
        p[j] = z;
        peak = std::max(peak, z);
      }
      double total = 0.0;
      for (auto& v : p) total += (v = std::exp(v - peak));
      for (std::size_t j = 0; j < k; ++j) {
        const double g = (p[j] / total - (static_cast<int>(j) == labels[r] ? 1.0 : 0.0)) / n;
        gb[j] += g;
        for (std::size_t c = 0; c < d; ++c) gW[c * k + j] += support.at(r, c) * g;
      }
    }
    for (std::size_t i = 0; i < W.size(); ++i) {
      W[i] -= settings.learning_rate * (gW[i] + settings.reg_strength * W[i]);
      if (!std::isfinite(W[i])) fail(ErrorKind::numeric, "logistic regression diverged");
    }
    for (std::size_t j = 0; j < k; ++j) b[j] -= settings.learning_rate * gb[j];
  }
  std::vector<int> out(queries.rows());
  for (std::size_t q = 0; q < queries.rows(); ++q) {
    double best = 0.0;
    for (std::size_t j = 0; j < k; ++j) {
      double z = b[j];
      for (std::size_t c = 0; c < d; ++c) z += queries.at(q, c) * W[c * k + j];
      if (j == 0 || z > best) {
        best = z;
        out[q] = static_cast<int>(j);
      }
    }
  }
  return out;
}

double accuracy(std::span<const int> predicted, std::span<const int> truth) {
  if (predicted.size() != truth.size() || truth.empty()) {
    fail(ErrorKind::dimension, "accuracy needs equal, nonempty prediction and truth lists");
  }
  std::size_t right = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) right += predicted[i] == truth[i];
  return static_cast<double>(right) / static_cast<double>(truth.size());
}

double mean(std::span<const double> values) {
  if (values.empty()) fail(ErrorKind::empty_set, "mean of an empty list");
  double s = 0.0;
  for (double v : values) s += v;
  return s / static_cast<double>(values.size());
}

double confidence_halfwidth(std::span<const double> accuracies) {
  const std::size_t k = accuracies.size();
  if (k == 0) fail(ErrorKind::empty_set, "confidence interval of no episodes");
  if (k == 1) return 0.0;
  const double m = mean(accuracies);
  double ss = 0.0;
  for (double a : accuracies) ss += (a - m) * (a - m);
  return 1.96 * std::sqrt(ss / static_cast<double>(k - 1)) / std::sqrt(static_cast<double>(k));
}

}  // namespace sbl::episodes
