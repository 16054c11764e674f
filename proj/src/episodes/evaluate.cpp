#include "sbl/episodes/evaluate.hpp"

#include <algorithm>
#include <cstdio>
#include <map>
#include <sstream>

#include "sbl/error.hpp"

namespace sbl::episodes {

namespace {

constexpr std::size_t kChunk = 64;

template <class T, class Embed>
Tensor embed_chunked(const std::vector<const T*>& items, std::size_t dim, Embed embed) {
  if (items.empty()) fail(ErrorKind::empty_set, "nothing to embed");
  Tensor out({items.size(), dim});
  const auto chunks = static_cast<std::ptrdiff_t>((items.size() + kChunk - 1) / kChunk);
  std::vector<std::string> errors(static_cast<std::size_t>(chunks));
#pragma omp parallel for schedule(dynamic, 1)
  for (std::ptrdiff_t c = 0; c < chunks; ++c) {
    try {
      const std::size_t lo = static_cast<std::size_t>(c) * kChunk;
      const std::size_t hi = std::min(items.size(), lo + kChunk);
      const Tensor e = embed(std::vector<const T*>(items.begin() + lo, items.begin() + hi));
      std::copy(e.values().begin(), e.values().end(), out.data().begin() + lo * dim);
    } catch (const std::exception& e) {
      errors[static_cast<std::size_t>(c)] = e.what();
    }
  }
  for (const auto& e : errors) {
    if (!e.empty()) fail(ErrorKind::numeric, "embedding failed: " + e);
  }
  return out;
}

Tensor gather(const Tensor& table, const std::vector<std::size_t>& rows) {
  const std::size_t d = table.cols();
  Tensor out({rows.size(), d});
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t c = 0; c < d; ++c) out.data()[i * d + c] = table.at(rows[i], c);
  return out;
}

// Embedding rows for images, keyed by (instance, view).
struct ImageTable {
  Tensor rows;
  std::map<std::pair<std::size_t, int>, std::size_t> index;
};

ImageTable embed_all_views(const encoders::ImageEncoder& fi, const LoadedDataset& ds,
                           const Section& section) {
  ImageTable t;
  std::vector<const DepthImage*> images;
  for (int c : section.classes) {
    for (std::size_t inst : section.members.at(c)) {
      for (std::size_t v = 0; v < ds.views(inst).size(); ++v) {
        t.index[{inst, static_cast<int>(v)}] = images.size();
        images.push_back(&ds.views(inst)[v]);
      }
    }
  }
  t.rows = embed_images(fi, images);
  return t;
}

void require(bool ok, const MethodSpec& m, const char* what) {
  if (!ok) fail(ErrorKind::config, "method " + m.name + " needs " + what);
}

}  // namespace

Tensor embed_images(const encoders::ImageEncoder& fi, const std::vector<const DepthImage*>& images) {
  return embed_chunked(images, fi.embed_dim(), [&](const auto& chunk) { return fi.embed(chunk); });
}

Tensor embed_clouds(const encoders::PointEncoder& fp, const std::vector<const PointCloud*>& clouds) {
  return embed_chunked(clouds, fp.embed_dim(), [&](const auto& chunk) { return fp.embed(chunk); });
}

std::vector<Episode> episode_stream(const LoadedDataset& ds, const Section& section,
                                    const EpisodeShape& shape, std::size_t count, std::uint64_t seed) {
  std::vector<Episode> out;
  out.reserve(count);
  for (std::size_t e = 0; e < count; ++e) {
    Rng rng(episode_seed(seed, shape, e));
    out.push_back(sample_episode(ds, section, shape, rng, e));
  }
  return out;
}

std::vector<EvalReport> evaluate(const LoadedDataset& ds, const Section& section, const Section& base,
                                 const MethodSpec& method, const EvalRequest& request) {
  if (request.episodes < 1) fail(ErrorKind::config, "episode count must be at least 1");
  const bool uses_images = method.rule != SupportRule::pointcloud;
  const bool uses_clouds = method.rule != SupportRule::image;
  if (uses_images) require(method.fi != nullptr, method, "an image encoder");
  if (uses_clouds) require(method.fp != nullptr, method, "a point encoder");

  std::vector<std::vector<Episode>> streams;
  for (const auto& shape : request.grid) {
    streams.push_back(episode_stream(ds, section, shape, request.episodes, request.seed));
  }

  // Image embeddings for every stored view of the section, and base means.
  ImageTable images;
  Tensor image_mean, cloud_mean;
  if (uses_images) {
    images = embed_all_views(*method.fi, ds, section);
    image_mean = row_mean(embed_all_views(*method.fi, ds, base).rows);
  }

  // Clouds: supports come through the episode; only the shape reference
  // reads query clouds, and it does so explicitly here.
  std::map<std::size_t, std::size_t> cloud_row;
  Tensor cloud_rows;
  if (uses_clouds) {
    std::vector<const PointCloud*> clouds;
    const auto add = [&](std::size_t inst, const PointCloud* pc) {
      if (cloud_row.emplace(inst, clouds.size()).second) clouds.push_back(pc);
    };
    for (const auto& stream : streams) {
      for (const auto& ep : stream) {
        for (const auto& s : ep.supports) {
          if (!s.cloud) fail(ErrorKind::config, method.name + " needs a point cloud for every support");
          add(s.instance, s.cloud);
        }
        if (method.rule == SupportRule::pointcloud) {
          for (const auto& q : ep.queries) add(q.instance, &ds.cloud(q.instance));
        }
      }
    }
    cloud_rows = embed_clouds(*method.fp, clouds);
    std::vector<const PointCloud*> base_clouds;
    for (int c : base.classes)
      for (std::size_t inst : base.members.at(c)) base_clouds.push_back(&ds.cloud(inst));
    cloud_mean = row_mean(embed_clouds(*method.fp, base_clouds));
  }

  std::vector<std::string> variants;
  if (method.classifier == Classifier::simpleshot) {
    for (auto m : kAllNormModes) variants.push_back(to_string(m));
  } else {
    variants.push_back("logistic");
  }

  std::vector<EvalReport> reports;
  for (std::size_t g = 0; g < request.grid.size(); ++g) {
    const auto& stream = streams[g];
    const auto n_eps = static_cast<std::ptrdiff_t>(stream.size());
    // predictions[variant][episode][query]
    std::vector<std::vector<std::vector<int>>> preds(
        variants.size(), std::vector<std::vector<int>>(stream.size()));
    std::vector<std::string> errors(stream.size());

#pragma omp parallel for schedule(dynamic, 8)
    for (std::ptrdiff_t e = 0; e < n_eps; ++e) {
      const Episode& ep = stream[static_cast<std::size_t>(e)];
      try {
        const int n_way = ep.shape.n_way;
        const auto labels = ep.support_labels();
        std::vector<std::size_t> s_img, q_img, s_pc, q_pc;
        for (const auto& s : ep.supports) {
          if (uses_images) s_img.push_back(images.index.at({s.instance, s.view}));
          if (uses_clouds) s_pc.push_back(cloud_row.at(s.instance));
        }
        for (const auto& q : ep.queries) {
          if (method.rule == SupportRule::pointcloud) {
            q_pc.push_back(cloud_row.at(q.instance));
          } else {
            q_img.push_back(images.index.at({q.instance, q.view}));
          }
        }
        const Tensor* q_mean = method.rule == SupportRule::pointcloud ? &cloud_mean : &image_mean;
        const Tensor queries = method.rule == SupportRule::pointcloud ? gather(cloud_rows, q_pc)
                                                                      : gather(images.rows, q_img);
        for (std::size_t v = 0; v < variants.size(); ++v) {
          auto& out = preds[v][static_cast<std::size_t>(e)];
          if (method.classifier == Classifier::logistic) {
            const Tensor q = normalize_rows(queries, NormMode::l2);
            if (method.rule == SupportRule::averaged) {
              const Tensor a = normalize_rows(gather(images.rows, s_img), NormMode::l2);
              const Tensor b = normalize_rows(gather(cloud_rows, s_pc), NormMode::l2);
              Tensor both({a.rows() + b.rows(), a.cols()});
              std::copy(a.values().begin(), a.values().end(), both.data().begin());
              std::copy(b.values().begin(), b.values().end(), both.data().begin() + a.numel());
              std::vector<int> both_labels = labels;
              both_labels.insert(both_labels.end(), labels.begin(), labels.end());
              out = logistic_episode_classify(both, both_labels, q, n_way, method.logistic);
            } else {
              const Tensor s = normalize_rows(
                  method.rule == SupportRule::image ? gather(images.rows, s_img) : gather(cloud_rows, s_pc),
                  NormMode::l2);
              out = logistic_episode_classify(s, labels, q, n_way, method.logistic);
            }
            continue;
          }
          const NormMode mode = kAllNormModes[v];
          const Tensor q = normalize_rows(queries, mode, q_mean);
          Tensor protos;
          if (method.rule == SupportRule::averaged) {
            protos = shape_biased_prototypes(normalize_rows(gather(images.rows, s_img), mode, &image_mean),
                                             normalize_rows(gather(cloud_rows, s_pc), mode, &cloud_mean),
                                             labels, n_way);
          } else if (method.rule == SupportRule::image) {
            protos = class_centroids(normalize_rows(gather(images.rows, s_img), mode, &image_mean), labels, n_way);
          } else {
            protos = class_centroids(normalize_rows(gather(cloud_rows, s_pc), mode, &cloud_mean), labels, n_way);
          }
          out = nearest_prototype(protos, q);
        }
      } catch (const std::exception& ex) {
        errors[static_cast<std::size_t>(e)] = ex.what();
      }
    }
    for (std::size_t e = 0; e < errors.size(); ++e) {
      if (!errors[e].empty()) fail(ErrorKind::numeric, "episode " + std::to_string(e) + ": " + errors[e]);
    }

    for (std::size_t v = 0; v < variants.size(); ++v) {
      EvalReport r;
      r.method = method.name;
      r.variant = variants[v];
      r.shape = request.grid[g];
      r.seed = request.seed;
      r.oracle = method.oracle;
      for (std::size_t e = 0; e < stream.size(); ++e) {
        const auto truth = stream[e].query_labels();
        const auto& p = preds[v][e];
        r.episode_ids.push_back(stream[e].id);
        r.accuracies.push_back(accuracy(p, truth));
        for (std::size_t q = 0; q < truth.size(); ++q) {
          r.predictions.push_back({stream[e].id, static_cast<int>(q), truth[q], p[q]});
        }
      }
      r.mean = mean(r.accuracies);
      r.ci95 = confidence_halfwidth(r.accuracies);
      reports.push_back(std::move(r));
    }
  }
  return reports;
}

nlohmann::json report_to_json(const EvalReport& r) {
  nlohmann::json preds = nlohmann::json::array();
  for (const auto& p : r.predictions) preds.push_back({p.episode, p.query, p.truth, p.predicted});
  return {{"method", r.method},
          {"variant", r.variant},
          {"n_way", r.shape.n_way},
          {"m_shot", r.shape.m_shot},
          {"q_queries", r.shape.q_queries},
          {"seed", r.seed},
          {"oracle", r.oracle},
          {"config_fingerprint", r.config_fingerprint},
          {"episodes", r.episodes()},
          {"mean", r.mean},
          {"ci95", r.ci95},
          {"episode_ids", r.episode_ids},
          {"accuracies", r.accuracies},
          {"predictions", preds}};
}

EvalReport report_from_json(const nlohmann::json& j) {
  EvalReport r;
  try {
    r.method = j.at("method").get<std::string>();
    r.variant = j.at("variant").get<std::string>();
    r.shape = {j.at("n_way").get<int>(), j.at("m_shot").get<int>(), j.at("q_queries").get<int>()};
    r.seed = j.at("seed").get<std::uint64_t>();
    r.oracle = j.at("oracle").get<bool>();
    r.config_fingerprint = j.at("config_fingerprint").get<std::string>();
    r.episode_ids = j.at("episode_ids").get<std::vector<std::uint64_t>>();
    r.accuracies = j.at("accuracies").get<std::vector<double>>();
    if (r.episode_ids.size() != r.accuracies.size()) {
      fail(ErrorKind::format, "evaluation report has mismatched episode and accuracy counts");
    }
    r.mean = j.at("mean").get<double>();
    r.ci95 = j.at("ci95").get<double>();
    for (const auto& p : j.at("predictions")) {
      r.predictions.push_back({p.at(0).get<std::uint64_t>(), p.at(1).get<int>(), p.at(2).get<int>(),
                               p.at(3).get<int>()});
    }
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::format, std::string("malformed evaluation report: ") + e.what());
  }
  return r;
}

std::string summary_csv_header() { return "run_id,method,variant,n_way,m_shot,mean,ci,episodes,seed\n"; }

std::string summary_csv_row(const std::string& run_id, const EvalReport& r) {
  char buf[256];
  std::snprintf(buf, sizeof buf, "%s,%s,%s,%d,%d,%.6f,%.6f,%zu,%llu\n", run_id.c_str(),
                r.method.c_str(), r.variant.c_str(), r.shape.n_way, r.shape.m_shot, r.mean, r.ci95,
                r.episodes(), static_cast<unsigned long long>(r.seed));
  return buf;
}

std::string predictions_csv(const EvalReport& r) {
  std::ostringstream out;
  out << "episode,query,true,predicted,method\n";
  for (const auto& p : r.predictions) {
    out << p.episode << ',' << p.query << ',' << p.truth << ',' << p.predicted << ',' << r.method;
    if (!r.variant.empty()) out << ':' << r.variant;
    out << '\n';
  }
  return out.str();
}

}  // namespace sbl::episodes
