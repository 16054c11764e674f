#include "sbl/cli/commands.hpp"

#include <algorithm>
#include <cstdio>
#include <map>
#include <ostream>

#include "sbl/analysis/analysis.hpp"
#include "sbl/binary_io.hpp"
#include "sbl/episodes/evaluate.hpp"
#include "sbl/error.hpp"
#include "sbl/shapegen/dataset_io.hpp"
#include "sbl/training/gradcheck_suite.hpp"
#include "sbl/training/trainers.hpp"

namespace sbl::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr std::uint64_t kHistogramStream = 0x4157;

void require_file(const fs::path& path, const std::string& hint) {
  if (!fs::exists(path)) fail(ErrorKind::dependency, "missing " + path.string() + "; " + hint);
}

fs::path require_model(const RunPaths& paths, const std::string& method) {
  const fs::path p = paths.model(method);
  require_file(p, "run `sbl train " + method + "` first");
  return p;
}

json read_json(const fs::path& path) {
  try {
    return json::parse(read_file(path));
  } catch (const json::exception& e) {
    fail(ErrorKind::format, "cannot parse " + path.string() + ": " + e.what());
  }
}

std::string cell_tag(const episodes::EpisodeShape& s) {
  return std::to_string(s.n_way) + "w" + std::to_string(s.m_shot) + "s";
}

// Which checkpoints an evaluation method reads.
struct MethodModels {
  std::string fi;  // empty when the method uses no image encoder
  std::string fp;  // empty when it uses no point encoder
  episodes::SupportRule rule;
  episodes::Classifier classifier = episodes::Classifier::simpleshot;
};

MethodModels models_for(const std::string& m) {
  using episodes::Classifier;
  using episodes::SupportRule;
  if (m == "ptcld-simpleshot") return {"", "shape", SupportRule::pointcloud};
  if (m == "image-simpleshot") return {"image", "", SupportRule::image};
  if (m == "image-rfs") return {"image", "", SupportRule::image, Classifier::logistic};
  if (m == "shape-bias") return {"align", "shape", SupportRule::averaged};
  if (m == "shape-bias-rfs") return {"align", "shape", SupportRule::averaged, Classifier::logistic};
  if (m == "shape-bias-l1only") return {"align-l1only", "shape", SupportRule::averaged};
  if (m == "triplet") return {"triplet", "triplet", SupportRule::averaged};
  if (m == "oracle") return {"oracle", "shape", SupportRule::averaged};
  fail(ErrorKind::config, "unknown evaluation method '" + m + "'");
}

std::string report_file(const episodes::EvalReport& r) {
  return r.method + "__" + r.variant + "__" + cell_tag(r.shape) + ".json";
}

}  // namespace

RunData load_run_data(const RunConfig& config) {
  const RunPaths paths{config.output_dir};
  require_file(paths.data() / "manifest.json", "run `sbl gen` first");
  RunData d;
  d.dataset = episodes::load_dataset(paths.data());
  d.split = episodes::make_splits(d.dataset, config.split, config.split_seed);
  episodes::check_disjoint(d.split, d.dataset);
  d.train = episodes::make_section(d.dataset, d.split.train);
  d.val = episodes::make_section(d.dataset, d.split.val);
  d.test = episodes::make_section(d.dataset, d.split.test);
  return d;
}

void cmd_gen(const RunConfig& config, const Options& options) {
  const RunPaths paths{config.output_dir};
  const fs::path dir = paths.data();
  if (fs::exists(dir) && !fs::is_empty(dir)) {
    if (!options.force) {
      fail(ErrorKind::refusal, "dataset directory " + dir.string() + " is not empty; pass --force to replace it");
    }
    fs::remove_all(dir);
  }
  const auto recipes = config.recipes.empty() ? shapegen::builtin_recipes() : shapegen::load_recipes(config.recipes);
  const auto shapes = shapegen::generate_dataset(recipes, config.instances_per_category, config.data_seed, config.name);
  const auto loaded = episodes::materialize(shapes, config.data);
  fs::create_directories(dir);
  episodes::save_dataset(dir, loaded);
}

void cmd_train(const RunConfig& config, const std::string& method, const Options& options) {
  const auto& known = train_methods();
  if (std::find(known.begin(), known.end(), method) == known.end()) {
    fail(ErrorKind::config, "unknown training method '" + method + "'");
  }
  if (method == "oracle" && !options.oracle_ack) {
    fail(ErrorKind::refusal, "the oracle trains on test classes; pass --oracle-ack to confirm");
  }
  const RunPaths paths{config.output_dir};
  const bool needs_shape = method == "align" || method == "align-l1only" || method == "oracle";
  fs::path shape_path;
  if (needs_shape) shape_path = require_model(paths, "shape");
  const RunData d = load_run_data(config);

  training::TrainedModel model;
  if (method == "shape") {
    model = training::train_shape_embedding(d.dataset, d.train, d.val, config.fp, config.shape);
  } else if (method == "image") {
    model = training::train_image_embedding(d.dataset, d.train, d.val, config.fi, config.image);
  } else if (method == "triplet") {
    model = training::train_triplet(d.dataset, d.train, d.val, config.fp, config.fi, config.triplet,
                                    config.triplet_loss);
  } else {
    const auto fp = training::make_point_encoder(config.fp, training::load_model(shape_path).parameters);
    training::TrainConfig align = config.align;
    if (method == "align-l1only") align.w2 = 0.0;
    if (method == "oracle") {
      std::vector<int> all = d.split.train;
      all.insert(all.end(), d.split.val.begin(), d.split.val.end());
      all.insert(all.end(), d.split.test.begin(), d.split.test.end());
      std::sort(all.begin(), all.end());
      model = training::train_oracle(d.dataset, episodes::make_section(d.dataset, all), d.val, fp, config.fi,
                                     config.oracle, {.test_classes_used = true});
    } else {
      model = training::train_shape_biased_image(d.dataset, d.train, d.val, fp, config.fi, align);
    }
  }
  training::save_model(paths.model(method), model);
  write_file(paths.train_log(method), training::log_csv(model.log));
}

json cmd_eval(const RunConfig& config, const std::vector<std::string>& requested) {
  const std::vector<std::string> methods = requested.empty() ? config.eval_methods : requested;
  if (methods.empty()) fail(ErrorKind::config, "no evaluation methods given");
  const RunPaths paths{config.output_dir};
  // Check every prerequisite before doing any work.
  for (const auto& m : methods) {
    const auto need = models_for(m);
    if (!need.fi.empty()) require_model(paths, need.fi);
    if (!need.fp.empty()) require_model(paths, need.fp);
  }
  const RunData d = load_run_data(config);
  const std::string fp_hash = fingerprint(config);

  std::map<std::string, training::TrainedModel> loaded;
  const auto model = [&](const std::string& name) -> const training::TrainedModel& {
    auto it = loaded.find(name);
    if (it == loaded.end()) it = loaded.emplace(name, training::load_model(paths.model(name))).first;
    return it->second;
  };

  const episodes::EvalRequest request{config.grid, config.eval_episodes, config.eval_seed};
  json results = json::array();
  std::string csv = episodes::summary_csv_header();
  fs::create_directories(paths.reports());
  for (const auto& m : methods) {
    const auto need = models_for(m);
    std::optional<encoders::ImageEncoder> fi;
    std::optional<encoders::PointEncoder> fp;
    episodes::MethodSpec spec{m, need.rule, need.classifier};
    spec.logistic = config.logistic;
    if (!need.fi.empty()) {
      fi.emplace(training::make_image_encoder(config.fi, model(need.fi).parameters));
      spec.fi = &*fi;
      spec.oracle = model(need.fi).oracle;
    }
    if (!need.fp.empty()) {
      fp.emplace(training::make_point_encoder(config.fp, model(need.fp).parameters));
      spec.fp = &*fp;
    }
    auto reports = episodes::evaluate(d.dataset, d.test, d.train, spec, request);
    for (const auto& cell : config.grid) {
      json entry{{"method", m}, {"n_way", cell.n_way}, {"m_shot", cell.m_shot}, {"oracle", spec.oracle}};
      json variants = json::array();
      const episodes::EvalReport* best = nullptr;
      for (auto& r : reports) {
        if (r.shape.n_way != cell.n_way || r.shape.m_shot != cell.m_shot) continue;
        r.config_fingerprint = fp_hash;
        write_file(paths.reports() / report_file(r), episodes::report_to_json(r).dump());
        variants.push_back({{"variant", r.variant},
                            {"mean", r.mean},
                            {"ci95", r.ci95},
                            {"report", "reports/" + report_file(r)}});
        if (!best || r.mean > best->mean) best = &r;
      }
      entry["variants"] = variants;
      entry["best_variant"] = best->variant;
      entry["mean"] = best->mean;
      entry["ci95"] = best->ci95;
      entry["report"] = "reports/" + report_file(*best);
      results.push_back(entry);
      csv += episodes::summary_csv_row(fp_hash.substr(0, 12), *best);
    }
  }
  json grid = json::array();
  for (const auto& g : config.grid) grid.push_back({g.n_way, g.m_shot, g.q_queries});
  json summary{{"name", config.name},
               {"config_fingerprint", fp_hash},
               {"eval_seed", config.eval_seed},
               {"episodes", config.eval_episodes},
               {"grid", grid},
               {"methods", methods},
               {"results", results}};
  write_file(paths.results(), csv);
  write_file(paths.summary(), summary.dump(2) + "\n");
  return summary;
}

json cmd_analyze(const RunConfig& config) {
  const RunPaths paths{config.output_dir};
  require_file(paths.summary(), "run `sbl eval` first");
  json summary = read_json(paths.summary());
  const fs::path eval_dir = paths.summary().parent_path();

  // Best-variant report per (cell, method), in summary order.
  std::map<std::pair<int, int>, std::vector<episodes::EvalReport>> by_cell;
  for (const auto& entry : summary.at("results")) {
    const fs::path file = eval_dir / entry.at("report").get<std::string>();
    require_file(file, "the evaluation reports are incomplete; rerun `sbl eval`");
    by_cell[{entry.at("n_way").get<int>(), entry.at("m_shot").get<int>()}].push_back(
        episodes::report_from_json(read_json(file)));
  }

  json correlations = json::array(), overlaps = json::array();
  for (const auto& [cell, reports] : by_cell) {
    for (std::size_t a = 0; a < reports.size(); ++a) {
      for (std::size_t b = 0; b < reports.size(); ++b) {
        if (a == b) continue;
        const auto& ra = reports[a];
        const auto& rb = reports[b];
        const auto series = analysis::pair_series(ra, rb);
        if (a < b) {
          json c{{"a", ra.method}, {"b", rb.method}, {"n_way", cell.first}, {"m_shot", cell.second}};
          try {
            const auto r = analysis::pearson(series);
            c["r"] = r.r;
            c["p_value"] = r.p_value;
            c["n"] = r.n;
          } catch (const Error& e) {
            if (e.kind() != ErrorKind::degenerate) throw;
            c["r"] = nullptr;
            c["note"] = e.what();
          }
          correlations.push_back(c);
        }
        const auto o = analysis::misclassification_overlap(ra.predictions, rb.predictions);
        overlaps.push_back({{"a", ra.method},
                            {"b", rb.method},
                            {"n_way", cell.first},
                            {"m_shot", cell.second},
                            {"overlap", o ? json(*o) : json("n/a")}});
      }
    }
  }

  // Interclass distances on val classes: f_p over clouds, each f_i over all views.
  const RunData d = load_run_data(config);
  std::vector<const shapegen::PointCloud*> clouds;
  std::vector<int> cloud_labels;
  std::vector<const render::DepthImage*> images;
  std::vector<int> image_labels;
  for (int c : d.val.classes) {
    for (std::size_t inst : d.val.members.at(c)) {
      clouds.push_back(&d.dataset.cloud(inst));
      cloud_labels.push_back(c);
      for (const auto& v : d.dataset.views(inst)) {
        images.push_back(&v);
        image_labels.push_back(c);
      }
    }
  }
  std::vector<analysis::DistanceHistogram> hists;
  const auto add = [&](const std::string& tag, const Tensor& emb, const std::vector<int>& labels) {
    Rng rng = make_rng(config.eval_seed, {kHistogramStream, hists.size()});
    auto h = analysis::interclass_distances(emb, labels, config.histogram_pairs, rng);
    h.model = tag;
    h.section = "val";
    hists.push_back(std::move(h));
  };
  if (fs::exists(paths.model("shape"))) {
    const auto fp = training::make_point_encoder(config.fp, training::load_model(paths.model("shape")).parameters);
    add("fp", episodes::embed_clouds(fp, clouds), cloud_labels);
  }
  for (const std::string m : {"image", "align", "align-l1only", "triplet", "oracle"}) {
    if (!fs::exists(paths.model(m))) continue;
    const auto fi = training::make_image_encoder(config.fi, training::load_model(paths.model(m)).parameters);
    add("fi-" + m, episodes::embed_images(fi, images), image_labels);
  }
  std::string csv = analysis::histogram_csv_header();
  json hist_json = json::array();
  const analysis::DistanceHistogram* ref = nullptr;
  for (const auto& h : hists)
    if (h.model == "fp") ref = &h;
  for (const auto& h : hists) {
    csv += analysis::histogram_csv_rows(h);
    json hj{{"model", h.model}, {"section", h.section}, {"pairs", h.pairs()}, {"mean", h.mean},
            {"max", h.edges.back()}};
    if (ref && &h != ref) {
      hj["mean_gap_to_fp"] = std::abs(h.mean - ref->mean);
      hj["w1_to_fp"] = analysis::wasserstein1(h, *ref);
    }
    hist_json.push_back(hj);
  }
  write_file(paths.histograms(), csv);

  summary["analysis"] = {{"correlations", correlations},
                         {"overlaps", overlaps},
                         {"histograms", hist_json},
                         {"histogram_csv", "../analysis/histograms.csv"}};
  write_file(paths.summary(), summary.dump(2) + "\n");
  return summary;
}

bool cmd_gradcheck(std::uint64_t seed, std::ostream& out) {
  bool ok = true;
  char line[160];
  for (const auto& c : training::run_gradcheck_suite(seed)) {
    std::snprintf(line, sizeof line, "%-4s %-24s max_rel_err=%.3e checked=%zu kinks_skipped=%zu runs=%d\n",
                  c.passed ? "PASS" : "FAIL", c.name.c_str(), c.max_rel_error, c.checked, c.skipped_kinks,
                  c.instantiations);
    out << line;
    ok = ok && c.passed;
  }
  return ok;
}

}  // namespace sbl::cli
