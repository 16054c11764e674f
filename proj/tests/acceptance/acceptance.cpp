// Acceptance run: criteria 1-9, one PASS/FAIL line each. Criteria 3-7 and 9
// run the desk pipeline (configs/desk.json) from scratch; `--reuse` keeps
// stages whose outputs already exist.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <functional>
#include <iostream>
#include <numeric>
#include <random>
#include <set>
#include <string>

#include "sbl/analysis/analysis.hpp"
#include "sbl/binary_io.hpp"
#include "sbl/cli/commands.hpp"
#include "sbl/episodes/evaluate.hpp"
#include "sbl/error.hpp"
#include "sbl/numerics/kernels.hpp"
#include "sbl/training/gradcheck_suite.hpp"
#include "sbl/training/losses.hpp"
#include "sbl/training/trainers.hpp"

using namespace sbl;
namespace fs = std::filesystem;
using nlohmann::json;
using Clock = std::chrono::steady_clock;

namespace {

int failures = 0;

void report(int id, bool pass, const std::string& what) {
  std::printf("[%s] criterion %d: %s\n", pass ? "PASS" : "FAIL", id, what.c_str());
  std::fflush(stdout);
  failures += pass ? 0 : 1;
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

double seconds_since(Clock::time_point t) {
  return std::chrono::duration<double>(Clock::now() - t).count();
}

Tensor random_tensor(Shape shape, std::mt19937_64& rng) {
  Tensor t(std::move(shape));
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (auto& v : t.data()) v = u(rng);
  return t;
}

// ---------------------------------------------------------------- criterion 1

void criterion_gradients() {
  const auto t0 = Clock::now();
  const auto cases = training::run_gradcheck_suite(2024);
  const double secs = seconds_since(t0);
  double worst = 0.0;
  std::string failed;
  for (const auto& c : cases) {
    worst = std::max(worst, c.max_rel_error);
    if (!c.passed || c.instantiations < 5) failed += " " + c.name;
  }
  report(1, failed.empty() && secs < 60.0,
         fmt("gradient suite, %zu cases x 5 instantiations, max rel err %.2e (< 1e-4), %.1f s (< 60 s)%s",
             cases.size(), worst, secs, failed.empty() ? "" : (" failed:" + failed).c_str()));
}

// ---------------------------------------------------------------- criterion 2

void criterion_brute_force() {
  std::mt19937_64 rng(99);
  // Pairwise loss against a direct double loop.
  double worst_pair = 0.0;
  for (int t = 0; t < 100; ++t) {
    const std::size_t b = 2 + rng() % 15, d = 1 + rng() % 8;
    const Tensor x = random_tensor({b, d}, rng), y = random_tensor({b, d}, rng);
    const double got = training::loss_align_pairwise(Var::leaf(x), y).value()[0];
    long double sum = 0;
    for (std::size_t k = 0; k < b; ++k)
      for (std::size_t l = k + 1; l < b; ++l) {
        long double di = 0, dp = 0;
        for (std::size_t c = 0; c < d; ++c) {
          di += (long double)(x.at(k, c) - x.at(l, c)) * (x.at(k, c) - x.at(l, c));
          dp += (long double)(y.at(k, c) - y.at(l, c)) * (y.at(k, c) - y.at(l, c));
        }
        sum += (dp - di) * (dp - di);
      }
    const double want = static_cast<double>(sum / (b * (b - 1) / 2));
    worst_pair = std::max(worst_pair, std::abs(got - want) / std::max(1.0, std::abs(want)));
  }

  // Nearest centroid against exhaustive argmin over recomputed centroids.
  int mismatched = 0;
  for (int t = 0; t < 100; ++t) {
    const int n = 2 + static_cast<int>(rng() % 7), m = 1 + static_cast<int>(rng() % 5), q = 1 + static_cast<int>(rng() % 10);
    const std::size_t d = 2 + rng() % 10;
    const Tensor s = random_tensor({static_cast<std::size_t>(n * m), d}, rng);
    const Tensor qs = random_tensor({static_cast<std::size_t>(q), d}, rng);
    std::vector<int> labels;
    for (int i = 0; i < n * m; ++i) labels.push_back(i % n);
    const auto mode = t % 2 ? episodes::NormMode::l2 : episodes::NormMode::none;
    const auto got = episodes::nearest_centroid_classify(s, labels, qs, n, mode);
    const auto norm = [&](std::vector<double> v) {
      if (mode == episodes::NormMode::l2) {
        double z = 0;
        for (double e : v) z += e * e;
        for (auto& e : v) e /= std::sqrt(z);
      }
      return v;
    };
    std::vector<std::vector<double>> cent(n, std::vector<double>(d, 0.0));
    for (int i = 0; i < n * m; ++i) {
      const auto v = norm(std::vector<double>(s.row(i).begin(), s.row(i).end()));
      for (std::size_t c = 0; c < d; ++c) cent[labels[i]][c] += v[c] / m;
    }
    for (int j = 0; j < q; ++j) {
      const auto v = norm(std::vector<double>(qs.row(j).begin(), qs.row(j).end()));
      int best = 0;
      double best_d = INFINITY;
      for (int k = 0; k < n; ++k) {
        double dist = 0;
        for (std::size_t c = 0; c < d; ++c) dist += (v[c] - cent[k][c]) * (v[c] - cent[k][c]);
        if (dist < best_d) best_d = dist, best = k;
      }
      mismatched += got[j] != best;
    }
  }

  // CI half-width against a two-pass recomputation.
  double worst_ci = 0.0;
  for (int t = 0; t < 100; ++t) {
    std::vector<double> acc(2 + rng() % 500);
    for (auto& a : acc) a = static_cast<double>(rng() % 11) / 10.0;
    long double mean = 0;
    for (double a : acc) mean += a;
    mean /= acc.size();
    long double ss = 0;
    for (double a : acc) ss += (a - mean) * (a - mean);
    const double want = static_cast<double>(1.96L * std::sqrt(ss / (acc.size() - 1)) / std::sqrt((long double)acc.size()));
    worst_ci = std::max(worst_ci, std::abs(episodes::confidence_halfwidth(acc) - want));
  }
  report(2, worst_pair <= 1e-12 && mismatched == 0 && worst_ci <= 1e-12,
         fmt("brute force: pairwise loss max rel err %.1e, nearest centroid %d mismatches, CI max err %.1e "
             "(100 cases each)",
             worst_pair, mismatched, worst_ci));
}

// ------------------------------------------------------------- desk pipeline

struct Desk {
  cli::RunConfig config;
  json summary;
  double seconds = 0.0;

  const json& entry(const std::string& method, int n, int m) const {
    for (const auto& e : summary.at("results")) {
      if (e.at("method") == method && e.at("n_way") == n && e.at("m_shot") == m) return e;
    }
    fail(ErrorKind::config, "no result for " + method);
  }
  episodes::EvalReport report_for(const std::string& method, int n, int m) const {
    const auto file = cli::RunPaths{config.output_dir}.summary().parent_path() /
                      entry(method, n, m).at("report").get<std::string>();
    return episodes::report_from_json(json::parse(read_file(file)));
  }
};

Desk run_desk(bool reuse) {
  Desk d;
  d.config = cli::load_config(fs::path(SBL_SOURCE_DIR) / "configs" / "desk.json");
  d.config.output_dir = fs::path(SBL_ACCEPT_DIR) / "desk";
  const cli::RunPaths paths{d.config.output_dir};
  const auto t0 = Clock::now();
  if (!(reuse && fs::exists(paths.data() / "manifest.json"))) cli::cmd_gen(d.config, {.force = true});
  for (const std::string m : {"shape", "image", "align", "align-l1only", "triplet", "oracle"}) {
    if (reuse && fs::exists(paths.model(m))) continue;
    const auto t = Clock::now();
    cli::cmd_train(d.config, m, {.oracle_ack = true});
    std::printf("  trained %-13s %6.1f s\n", m.c_str(), seconds_since(t));
  }
  if (!(reuse && fs::exists(paths.summary()))) cli::cmd_eval(d.config, {});
  d.summary = cli::cmd_analyze(d.config);
  d.seconds = seconds_since(t0);
  std::printf("  desk pipeline %.1f s\n", d.seconds);
  return d;
}

void criterion_table1(const Desk& d) {
  const auto& pc = d.entry("ptcld-simpleshot", 5, 1);
  const auto& im = d.entry("image-simpleshot", 5, 1);
  const double p = pc.at("mean"), pci = pc.at("ci95"), i = im.at("mean"), ici = im.at("ci95");
  report(3, p - i >= 0.03 && p - pci > i + ici && d.seconds < 1800.0,
         fmt("5-way 1-shot point cloud %.2f +- %.2f vs image %.2f +- %.2f (gap %.2f >= 3, CIs disjoint), "
             "pipeline %.0f s (< 1800 s)",
             100 * p, 100 * pci, 100 * i, 100 * ici, 100 * (p - i), d.seconds));
}

void criterion_oracle(const Desk& d) {
  const double o = d.entry("oracle", 5, 1).at("mean"), p = d.entry("ptcld-simpleshot", 5, 1).at("mean");
  report(4, std::abs(o - p) <= 0.03,
         fmt("5-way 1-shot oracle %.2f vs point cloud %.2f (|diff| %.2f <= 3)", 100 * o, 100 * p,
             100 * std::abs(o - p)));
}

void criterion_shape_bias(const Desk& d) {
  const double s5 = d.entry("shape-bias", 5, 1).at("mean"), i5 = d.entry("image-simpleshot", 5, 1).at("mean");
  const double s8 = d.entry("shape-bias", 8, 1).at("mean"), i8 = d.entry("image-simpleshot", 8, 1).at("mean");
  report(5, s5 >= i5 && s8 > i8,
         fmt("1-shot shape bias vs image: 5-way %.2f vs %.2f (>=), 8-way %.2f vs %.2f (>)", 100 * s5, 100 * i5,
             100 * s8, 100 * i8));
}

void criterion_l2_effect(const Desk& d) {
  json both, l1;
  for (const auto& h : d.summary.at("analysis").at("histograms")) {
    if (h.at("model") == "fi-align") both = h;
    if (h.at("model") == "fi-align-l1only") l1 = h;
  }
  const double gb = both.at("mean_gap_to_fp"), gl = l1.at("mean_gap_to_fp");
  const double wb = both.at("w1_to_fp"), wl = l1.at("w1_to_fp");
  report(6, gb < gl && wb < wl,
         fmt("val interclass distances vs f_p: |mean gap| L1+L2 %.3f < L1-only %.3f, W1 %.3f < %.3f", gb, gl, wb,
             wl));
}

void criterion_correlation(const Desk& d) {
  const auto pc = d.report_for("ptcld-simpleshot", 5, 1);
  const auto sb = analysis::pearson(analysis::pair_series(pc, d.report_for("shape-bias", 5, 1)));
  const auto im = analysis::pearson(analysis::pair_series(pc, d.report_for("image-simpleshot", 5, 1)));
  report(7, sb.r > im.r && sb.p_value < 0.05 && im.p_value < 0.05,
         fmt("5-way 1-shot Pearson r with point cloud: shape bias %.3f (p %.1e) > image %.3f (p %.1e), n %zu",
             sb.r, sb.p_value, im.r, im.p_value, sb.n));
}

void criterion_overlap(const Desk& d) {
  const auto sb = d.report_for("shape-bias", 5, 1);
  const auto pc = d.report_for("ptcld-simpleshot", 5, 1);
  bool self_zero = true;
  for (const auto& m : {"shape-bias", "image-simpleshot", "ptcld-simpleshot"}) {
    const auto r = d.report_for(m, 5, 1);
    const auto o = analysis::misclassification_overlap(r.predictions, r.predictions);
    self_zero = self_zero && (!o || *o == 0.0);
  }
  const auto o = analysis::misclassification_overlap(sb.predictions, pc.predictions);
  report(9, self_zero && o && *o > 0.0 && *o < 1.0,
         fmt("overlap(model, itself) = 0 for 3 models; overlap(shape bias, point cloud) 5-way 1-shot = %s",
             o ? fmt("%.4f", *o).c_str() : "n/a"));
}

// ---------------------------------------------------------------- criterion 8

bool permutation_invariance(const Desk& d, const cli::RunData& data, std::string& note) {
  const auto fp = training::make_point_encoder(
      d.config.fp, training::load_model(cli::RunPaths{d.config.output_dir}.model("shape")).parameters);
  std::mt19937_64 rng(8);
  for (int t = 0; t < 100; ++t) {
    const auto& cloud = data.dataset.cloud(rng() % data.dataset.size());
    shapegen::PointCloud shuffled = cloud;
    std::shuffle(shuffled.points.begin(), shuffled.points.end(), rng);
    const Tensor a = fp.embed({&cloud}), b = fp.embed({&shuffled});
    if (std::memcmp(a.values().data(), b.values().data(), a.numel() * sizeof(double)) != 0) {
      note = "permutation changed f_p bits at trial " + std::to_string(t);
      return false;
    }
  }
  return true;
}

bool prototype_order(std::string& note) {
  std::mt19937_64 rng(81);
  double worst = 0.0;
  for (int t = 0; t < 100; ++t) {
    const int n = 2 + static_cast<int>(rng() % 7), m = 1 + static_cast<int>(rng() % 5);
    const std::size_t rows = n * m, dim = 3 + rng() % 8;
    const Tensor img = random_tensor({rows, dim}, rng), shp = random_tensor({rows, dim}, rng);
    std::vector<int> labels;
    for (std::size_t i = 0; i < rows; ++i) labels.push_back(static_cast<int>(i % n));
    std::vector<std::size_t> order(rows);
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), rng);
    Tensor img2({rows, dim}), shp2({rows, dim});
    std::vector<int> labels2;
    for (std::size_t r = 0; r < rows; ++r) {
      for (std::size_t c = 0; c < dim; ++c) {
        img2.at(r, c) = img.at(order[r], c);
        shp2.at(r, c) = shp.at(order[r], c);
      }
      labels2.push_back(labels[order[r]]);
    }
    const Tensor p1 = episodes::shape_biased_prototypes(img, shp, labels, n);
    const Tensor p2 = episodes::shape_biased_prototypes(img2, shp2, labels2, n);
    const Tensor c1 = episodes::class_centroids(img, labels, n), c2 = episodes::class_centroids(img2, labels2, n);
    for (std::size_t i = 0; i < p1.numel(); ++i) {
      worst = std::max(worst, std::abs(p1[i] - p2[i]));
      worst = std::max(worst, std::abs(c1[i] - c2[i]));
    }
  }
  note = fmt("prototype reorder max diff %.1e", worst);
  return worst <= 1e-12;
}

bool split_disjoint(const Desk& d, const cli::RunData& data, std::string& note) {
  episodes::check_disjoint(data.split, data.dataset);
  std::set<int> train(data.split.train.begin(), data.split.train.end());
  std::set<int> val(data.split.val.begin(), data.split.val.end());
  std::set<int> test(data.split.test.begin(), data.split.test.end());
  for (int c : val)
    if (train.count(c) || test.count(c)) return note = "val overlaps", false;
  for (int c : test)
    if (train.count(c)) return note = "test overlaps train", false;
  for (const auto& cell : d.config.grid) {
    for (const auto& ep : episodes::episode_stream(data.dataset, data.test, cell, 50, d.config.eval_seed)) {
      for (int c : ep.classes)
        if (!test.count(c)) return note = "episode drew a non-test class", false;
    }
  }
  return true;
}

bool no_query_clouds(const Desk& d, cli::RunData& data, std::string& note) {
  const cli::RunPaths paths{d.config.output_dir};
  const auto fi = training::make_image_encoder(d.config.fi, training::load_model(paths.model("align")).parameters);
  const auto fp = training::make_point_encoder(d.config.fp, training::load_model(paths.model("shape")).parameters);
  const episodes::EpisodeShape cell{8, 1, 10};
  const episodes::EvalRequest req{{cell}, 20, d.config.eval_seed};
  std::set<std::size_t> supports, queries;
  for (const auto& ep : episodes::episode_stream(data.dataset, data.test, cell, 20, d.config.eval_seed)) {
    for (const auto& s : ep.supports) supports.insert(s.instance);
    for (const auto& q : ep.queries) queries.insert(q.instance);
  }
  std::vector<std::size_t> query_only;
  for (auto q : queries)
    if (!supports.count(q)) query_only.push_back(q);
  if (query_only.empty()) return note = "no query-only instances to audit", false;
  using episodes::Classifier;
  using episodes::SupportRule;
  for (auto rule : {SupportRule::image, SupportRule::averaged}) {
    for (auto c : {Classifier::simpleshot, Classifier::logistic}) {
      data.dataset.enable_cloud_audit();
      episodes::evaluate(data.dataset, data.test, data.train, {"audit", rule, c, &fi, &fp, false, {}}, req);
      const auto reads = data.dataset.cloud_reads();
      for (auto q : query_only)
        if (reads[q] != 0) return note = "query cloud read by a non-oracle method", false;
    }
  }
  note = fmt("ok (%zu query-only instances never read)", query_only.size());
  return true;
}

bool thread_determinism(std::string& note) {
  auto config = cli::load_config(fs::path(SBL_SOURCE_DIR) / "configs" / "smoke.json");
  std::string csv[2];
  std::string ckpt[2];
  const int threads[2] = {1, 8};
  const int saved = kernels::thread_count();
  for (int k = 0; k < 2; ++k) {
    kernels::set_thread_count(threads[k]);
    config.output_dir = fs::path(SBL_ACCEPT_DIR) / ("smoke_threads" + std::to_string(threads[k]));
    cli::cmd_gen(config, {.force = true});
    for (const std::string m : {"shape", "image", "align", "align-l1only", "triplet"}) cli::cmd_train(config, m, {});
    cli::cmd_eval(config, {});
    const cli::RunPaths paths{config.output_dir};
    csv[k] = read_file(paths.results());
    ckpt[k] = read_file(paths.model("align"));
  }
  kernels::set_thread_count(saved);
  note = "; results CSV and checkpoint " + std::string(csv[0] == csv[1] && ckpt[0] == ckpt[1] ? "identical" : "DIFFER") +
         " at 1 vs 8 threads";
  return csv[0] == csv[1] && ckpt[0] == ckpt[1];
}

void criterion_invariants(const Desk& d) {
  cli::RunData data = cli::load_run_data(d.config);
  std::string a, b, c, e, f;
  const bool perm = permutation_invariance(d, data, a);
  const bool proto = prototype_order(b);
  const bool split = split_disjoint(d, data, c);
  const bool audit = no_query_clouds(d, data, e);
  const bool threads = thread_determinism(f);
  report(8, perm && proto && split && audit && threads,
         fmt("f_p permutation invariance (100 perms, bitwise) %s; %s; split disjointness %s; query-cloud audit "
             "%s%s",
             perm ? "ok" : a.c_str(), b.c_str(), split ? "ok" : c.c_str(), e.c_str(), f.c_str()));
}

}  // namespace

int main(int argc, char** argv) {
  const bool reuse = argc > 1 && std::string(argv[1]) == "--reuse";
  const auto guarded = [](int id, const std::function<void()>& f) {
    try {
      f();
    } catch (const std::exception& e) {
      report(id, false, std::string("raised: ") + e.what());
    }
  };
  guarded(1, criterion_gradients);
  guarded(2, criterion_brute_force);
  Desk desk;
  try {
    desk = run_desk(reuse);
  } catch (const std::exception& e) {
    for (int id : {3, 4, 5, 6, 7, 8, 9}) report(id, false, std::string("desk pipeline raised: ") + e.what());
    return 1;
  }
  guarded(3, [&] { criterion_table1(desk); });
  guarded(4, [&] { criterion_oracle(desk); });
  guarded(5, [&] { criterion_shape_bias(desk); });
  guarded(6, [&] { criterion_l2_effect(desk); });
  guarded(7, [&] { criterion_correlation(desk); });
  guarded(8, [&] { criterion_invariants(desk); });
  guarded(9, [&] { criterion_overlap(desk); });
  std::printf("%d of 9 criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
