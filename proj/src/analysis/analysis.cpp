#include "sbl/analysis/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <numeric>
#include <sstream>
#include <utility>

#include <boost/math/distributions/students_t.hpp>

#include "sbl/error.hpp"

namespace sbl::analysis {

namespace {

double squared_distance(const Tensor& t, std::size_t k, std::size_t l) {
  double s = 0.0;
  for (std::size_t c = 0; c < t.cols(); ++c) {
    const double d = t.at(k, c) - t.at(l, c);
    s += d * d;
  }
  return s;
}

}  // namespace

std::size_t DistanceHistogram::pairs() const {
  return std::accumulate(counts.begin(), counts.end(), std::size_t{0});
}

DistanceHistogram interclass_distances(const Tensor& embeddings, std::span<const int> labels,
                                       std::size_t max_pairs, Rng& rng) {
  const std::size_t n = embeddings.rows();
  if (embeddings.rank() != 2 || labels.size() != n) {
    fail(ErrorKind::dimension, std::to_string(labels.size()) + " labels for embeddings " +
                                   embeddings.shape_str());
  }
  std::map<int, std::size_t> per_class;
  for (int l : labels) ++per_class[l];
  if (per_class.size() < 2) fail(ErrorKind::degenerate, "interclass distances need at least 2 classes");
  if (max_pairs == 0) fail(ErrorKind::config, "max_pairs must be positive");

  std::size_t same = 0;
  for (const auto& [label, count] : per_class) same += count * (count - 1) / 2;
  const std::size_t total = n * (n - 1) / 2 - same;

  std::vector<double> dist;
  if (total <= max_pairs) {
    dist.reserve(total);
    for (std::size_t k = 0; k < n; ++k)
      for (std::size_t l = k + 1; l < n; ++l)
        if (labels[k] != labels[l]) dist.push_back(squared_distance(embeddings, k, l));
  } else {
    dist.reserve(max_pairs);
    while (dist.size() < max_pairs) {
      const std::size_t k = uniform_index(rng, 0, n - 1);
      const std::size_t l = uniform_index(rng, 0, n - 1);
      if (labels[k] != labels[l]) dist.push_back(squared_distance(embeddings, k, l));
    }
  }

  DistanceHistogram h;
  const double hi = *std::max_element(dist.begin(), dist.end());
  const double top = hi > 0.0 ? hi : 1.0;
  h.edges.resize(kHistogramBins + 1);
  for (std::size_t b = 0; b <= kHistogramBins; ++b) {
    h.edges[b] = top * static_cast<double>(b) / static_cast<double>(kHistogramBins);
  }
  h.counts.assign(kHistogramBins, 0);
  double sum = 0.0;
  for (double d : dist) {
    auto b = static_cast<std::size_t>(d / top * static_cast<double>(kHistogramBins));
    ++h.counts[std::min(b, kHistogramBins - 1)];
    sum += d;
  }
  h.mean = sum / static_cast<double>(dist.size());
  return h;
}

double wasserstein1(const DistanceHistogram& a, const DistanceHistogram& b) {
  // Point masses at bin centers; W1 is the integral of |F_a - F_b|.
  std::vector<std::pair<double, double>> mass;  // (position, signed weight)
  const auto add = [&mass](const DistanceHistogram& h, double sign) {
    const double total = static_cast<double>(h.pairs());
    if (total == 0.0) fail(ErrorKind::empty_set, "histogram '" + h.model + "' is empty");
    for (std::size_t i = 0; i < h.counts.size(); ++i) {
      if (h.counts[i] == 0) continue;
      mass.emplace_back(0.5 * (h.edges[i] + h.edges[i + 1]),
                        sign * static_cast<double>(h.counts[i]) / total);
    }
  };
  add(a, 1.0);
  add(b, -1.0);
  std::sort(mass.begin(), mass.end());
  double cdf_gap = 0.0, w = 0.0;
  for (std::size_t i = 0; i + 1 < mass.size(); ++i) {
    cdf_gap += mass[i].second;
    w += std::abs(cdf_gap) * (mass[i + 1].first - mass[i].first);
  }
  return w;
}

std::string histogram_csv_header() { return "model,section,bin_lo,bin_hi,count\n"; }

std::string histogram_csv_rows(const DistanceHistogram& h) {
  std::ostringstream out;
  char buf[96];
  for (std::size_t i = 0; i < h.counts.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%.9g,%.9g,%zu\n", h.edges[i], h.edges[i + 1], h.counts[i]);
    out << h.model << ',' << h.section << ',' << buf;
  }
  return out.str();
}

PairedAccuracySeries pair_series(const episodes::EvalReport& a, const episodes::EvalReport& b) {
  if (a.episode_ids != b.episode_ids || a.accuracies.size() != b.accuracies.size()) {
    fail(ErrorKind::alignment, "reports " + a.method + " and " + b.method +
                                   " were not evaluated on the same episodes");
  }
  return {a.episode_ids, a.accuracies, b.accuracies};
}

Correlation pearson(const PairedAccuracySeries& s) {
  if (s.a.size() != s.episode_ids.size() || s.b.size() != s.episode_ids.size()) {
    fail(ErrorKind::alignment, "accuracy series lengths differ from the episode list");
  }
  return pearson(s.a, s.b);
}

Correlation pearson(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) {
    fail(ErrorKind::alignment, "series of length " + std::to_string(x.size()) + " and " +
                                   std::to_string(y.size()));
  }
  const std::size_t n = x.size();
  if (n < 3) fail(ErrorKind::config, "correlation needs at least 3 paired values");
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(n);
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(n);
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double dx = x[i] - mx, dy = y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (!(sxx > 0.0) || !(syy > 0.0)) fail(ErrorKind::degenerate, "correlation of a constant series");
  Correlation c;
  c.n = n;
  c.r = std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
  const double dof = static_cast<double>(n - 2);
  if (std::abs(c.r) == 1.0) {
    c.p_value = 0.0;
  } else {
    const double t = c.r * std::sqrt(dof / (1.0 - c.r * c.r));
    const boost::math::students_t dist(dof);
    c.p_value = 2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(t)));
  }
  return c;
}

std::optional<double> misclassification_overlap(const std::vector<episodes::Prediction>& a,
                                                const std::vector<episodes::Prediction>& b) {
  using Key = std::pair<std::uint64_t, int>;
  std::map<Key, const episodes::Prediction*> in_b;
  for (const auto& p : b) in_b[{p.episode, p.query}] = &p;
  if (in_b.size() != a.size() || b.size() != a.size()) {
    fail(ErrorKind::alignment, "prediction logs cover different queries");
  }
  std::size_t wrong_a = 0, right_b = 0;
  for (const auto& p : a) {
    const auto it = in_b.find({p.episode, p.query});
    if (it == in_b.end() || it->second->truth != p.truth) {
      fail(ErrorKind::alignment, "query (" + std::to_string(p.episode) + ", " +
                                     std::to_string(p.query) + ") does not match between logs");
    }
    if (p.predicted != p.truth) {
      ++wrong_a;
      if (it->second->predicted == it->second->truth) ++right_b;
    }
  }
  if (wrong_a == 0) return std::nullopt;
  return static_cast<double>(right_b) / static_cast<double>(wrong_a);
}

}  // namespace sbl::analysis
