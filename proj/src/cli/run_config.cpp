#include "sbl/cli/run_config.hpp"

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <set>

#include <openssl/evp.h>

#include "sbl/error.hpp"
#include "sbl/shapegen/dataset_io.hpp"

namespace sbl::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// Consumes keys from a copy of the config so leftovers can be reported.
class Reader {
 public:
  explicit Reader(const json& j) : rest_(j) {
    if (!j.is_object()) fail(ErrorKind::config, "config must be a JSON object");
  }

  template <class T>
  void get(const char* key, T& out) {
    const auto it = rest_.find(key);
    if (it == rest_.end()) return;
    try {
      out = it->template get<T>();
    } catch (const json::exception&) {
      fail(ErrorKind::config, std::string("config key '") + key + "' has the wrong type: " + it->dump());
    }
    rest_.erase(it);
  }

  void finish() const {
    if (rest_.empty()) return;
    std::string keys;
    for (const auto& [k, v] : rest_.items()) keys += (keys.empty() ? "" : ", ") + k;
    fail(ErrorKind::config, "unknown config keys: " + keys);
  }

 private:
  json rest_;
};

OptimizerKind optimizer_from(const std::string& name, const std::string& prefix) {
  if (name == "sgd") return OptimizerKind::sgd;
  if (name == "adam") return OptimizerKind::adam;
  fail(ErrorKind::config, prefix + "_optimizer must be \"sgd\" or \"adam\", got \"" + name + "\"");
}

void read_trainer(Reader& r, const std::string& prefix, training::TrainConfig& t) {
  const auto key = [&](const char* k) { return prefix + "_" + k; };
  std::string kind = t.optimizer.kind == OptimizerKind::sgd ? "sgd" : "adam";
  std::vector<int> milestones;
  for (const auto& m : t.optimizer.schedule) milestones.push_back(m.epoch);
  double decay = t.optimizer.schedule.empty() ? 0.1 : t.optimizer.schedule.front().multiplier;
  bool augment = t.augment.jitter_sigma > 0.0;
  bool so3 = t.augment.so3_rotation;

  r.get(key("epochs").c_str(), t.epochs);
  r.get(key("batch_size").c_str(), t.batch_size);
  r.get(key("batches_per_epoch").c_str(), t.batches_per_epoch);
  r.get(key("optimizer").c_str(), kind);
  r.get(key("lr").c_str(), t.optimizer.learning_rate);
  r.get(key("momentum").c_str(), t.optimizer.momentum);
  r.get(key("weight_decay").c_str(), t.optimizer.weight_decay);
  r.get(key("lr_milestones").c_str(), milestones);
  r.get(key("lr_decay").c_str(), decay);
  if (prefix == "shape" || prefix == "triplet") {
    r.get(key("augment").c_str(), augment);
    r.get(key("so3").c_str(), so3);
  }
  t.optimizer.kind = optimizer_from(kind, prefix);
  t.optimizer.schedule.clear();
  std::sort(milestones.begin(), milestones.end());
  for (int m : milestones) t.optimizer.schedule.push_back({m, decay});
  t.augment = augment ? shapegen::AugmentPolicy::training_default() : shapegen::AugmentPolicy::none();
  t.augment.so3_rotation = so3;
}

json trainer_json(const training::TrainConfig& t) {
  std::vector<int> milestones;
  for (const auto& m : t.optimizer.schedule) milestones.push_back(m.epoch);
  return {{"epochs", t.epochs},
          {"batch_size", t.batch_size},
          {"batches_per_epoch", t.batches_per_epoch},
          {"optimizer", t.optimizer.kind == OptimizerKind::sgd ? "sgd" : "adam"},
          {"lr", t.optimizer.learning_rate},
          {"momentum", t.optimizer.momentum},
          {"weight_decay", t.optimizer.weight_decay},
          {"lr_milestones", milestones},
          {"lr_decay", t.optimizer.schedule.empty() ? 0.1 : t.optimizer.schedule.front().multiplier},
          {"augment", t.augment.jitter_sigma > 0.0},
          {"so3", t.augment.so3_rotation},
          {"w1", t.w1},
          {"w2", t.w2},
          {"val_episodes", t.val_episodes},
          {"val_shape", {t.val_shape.n_way, t.val_shape.m_shot, t.val_shape.q_queries}},
          {"seed", t.seed}};
}

std::string sha256_hex(const std::string& text) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(text.data(), text.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
    fail(ErrorKind::dependency, "SHA-256 digest failed");
  }
  static const char* hex = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out += hex[digest[i] >> 4];
    out += hex[digest[i] & 15];
  }
  return out;
}

}  // namespace

const std::vector<std::string>& train_methods() {
  static const std::vector<std::string> m{"shape", "image", "align", "align-l1only", "triplet", "oracle"};
  return m;
}

const std::vector<std::string>& eval_method_names() {
  static const std::vector<std::string> m{"ptcld-simpleshot", "image-simpleshot", "image-rfs",
                                          "shape-bias",       "shape-bias-rfs",   "shape-bias-l1only",
                                          "triplet",          "oracle"};
  return m;
}

RunConfig parse_config(const json& j, const fs::path& base_dir, std::optional<std::uint64_t> seed_override) {
  RunConfig c;
  // Defaults that differ per trainer.
  c.shape.optimizer = {.kind = OptimizerKind::sgd, .learning_rate = 0.01, .momentum = 0.9,
                       .weight_decay = 1e-4, .schedule = {{300, 0.1}, {360, 0.1}}};
  c.shape.epochs = 400;
  c.shape.augment = shapegen::AugmentPolicy::training_default();
  c.shape.augment.so3_rotation = true;
  c.image.optimizer = {.kind = OptimizerKind::adam, .learning_rate = 1e-3, .weight_decay = 1e-4};
  c.align.optimizer = {.kind = OptimizerKind::adam, .learning_rate = 1e-4, .weight_decay = 1e-4};
  c.align.batch_size = 256;
  c.triplet.optimizer = {.kind = OptimizerKind::adam, .learning_rate = 1e-4, .weight_decay = 1e-4};
  c.triplet.augment = shapegen::AugmentPolicy::training_default();

  Reader r(j);
  std::string recipes;
  r.get("name", c.name);
  r.get("recipes", recipes);
  r.get("instances_per_category", c.instances_per_category);
  r.get("points", c.data.points);
  r.get("views", c.data.views);
  int image_size = c.data.render.width;
  r.get("image_size", image_size);
  c.data.render.width = c.data.render.height = image_size;
  r.get("render_points", c.data.render.render_points);
  r.get("splat_radius", c.data.render.splat_radius);
  r.get("data_seed", c.data_seed);

  r.get("split_train", c.split.train);
  r.get("split_val", c.split.val);
  r.get("split_test", c.split.test);
  r.get("split_seed", c.split_seed);

  r.get("embed_dim", c.fp.embed_dim);
  c.fi.embed_dim = c.fp.embed_dim;
  r.get("fp_point_widths", c.fp.point_widths);
  r.get("fp_post_hidden", c.fp.post_hidden);
  r.get("fi_patch", c.fi.patch);
  r.get("fi_patch_width", c.fi.patch_width);
  r.get("fi_trunk_hidden", c.fi.trunk_hidden);
  c.fi.width = c.fi.height = image_size;

  read_trainer(r, "shape", c.shape);
  read_trainer(r, "image", c.image);
  read_trainer(r, "align", c.align);
  read_trainer(r, "triplet", c.triplet);
  r.get("align_w1", c.align.w1);
  r.get("align_w2", c.align.w2);
  // The oracle inherits every alignment setting it does not override.
  c.oracle = c.align;
  read_trainer(r, "oracle", c.oracle);
  r.get("triplet_margin", c.triplet_loss.margin);

  std::size_t val_episodes = 200;
  episodes::EpisodeShape val_shape{5, 1, 10};
  std::uint64_t train_seed = 4;
  r.get("val_episodes", val_episodes);
  r.get("val_way", val_shape.n_way);
  r.get("val_shot", val_shape.m_shot);
  r.get("val_queries", val_shape.q_queries);
  r.get("train_seed", train_seed);

  std::vector<std::array<int, 2>> grid;
  for (const auto& g : c.grid) grid.push_back({g.n_way, g.m_shot});
  int queries = 10;
  r.get("eval_grid", grid);
  r.get("eval_queries", queries);
  r.get("eval_episodes", c.eval_episodes);
  r.get("eval_seed", c.eval_seed);
  r.get("eval_methods", c.eval_methods);
  r.get("rfs_steps", c.logistic.steps);
  r.get("rfs_lr", c.logistic.learning_rate);
  r.get("rfs_reg", c.logistic.reg_strength);
  r.get("histogram_pairs", c.histogram_pairs);
  std::string out = c.output_dir.string();
  r.get("output_dir", out);
  r.finish();

  if (seed_override) {
    c.data_seed = c.split_seed = train_seed = c.eval_seed = *seed_override;
  }
  for (auto* t : {&c.shape, &c.image, &c.align, &c.oracle, &c.triplet}) {
    t->val_episodes = val_episodes;
    t->val_shape = val_shape;
    t->seed = train_seed;
    training::validate(*t);
  }
  c.grid.clear();
  for (const auto& [n, m] : grid) c.grid.push_back({n, m, queries});

  if (!recipes.empty()) {
    c.recipes = fs::path(recipes).is_absolute() ? fs::path(recipes) : (base_dir / recipes).lexically_normal();
    if (!fs::exists(c.recipes)) fail(ErrorKind::path, "recipes file not found: " + c.recipes.string());
  }
  c.output_dir = fs::path(out).is_absolute() ? fs::path(out) : (base_dir / out).lexically_normal();

  if (c.instances_per_category < 1) fail(ErrorKind::config, "instances_per_category must be positive");
  if (c.data.views < 1) fail(ErrorKind::config, "views must be positive");
  if (image_size < 1 || image_size % c.fi.patch != 0) {
    fail(ErrorKind::config, "image_size must be a positive multiple of fi_patch");
  }
  if (c.split.train < 2 || c.split.val < 1 || c.split.test < 1) {
    fail(ErrorKind::config, "splits need at least 2 train classes and 1 val and test class");
  }
  if (c.grid.empty() || c.eval_episodes == 0) fail(ErrorKind::config, "evaluation grid and episode count must be non-empty");
  for (const auto& g : c.grid) {
    if (g.n_way < 2 || g.m_shot < 1 || g.q_queries < 1) {
      fail(ErrorKind::config, "grid cells need n_way >= 2, m_shot >= 1 and queries >= 1");
    }
  }
  const auto& known = eval_method_names();
  std::set<std::string> seen;
  for (const auto& m : c.eval_methods) {
    if (std::find(known.begin(), known.end(), m) == known.end()) {
      fail(ErrorKind::config, "unknown evaluation method '" + m + "'");
    }
    if (!seen.insert(m).second) fail(ErrorKind::config, "evaluation method '" + m + "' listed twice");
  }
  if (c.triplet_loss.margin < 0.0) fail(ErrorKind::config, "triplet_margin must be non-negative");
  if (c.histogram_pairs == 0) fail(ErrorKind::config, "histogram_pairs must be positive");
  return c;
}

RunConfig load_config(const fs::path& path) {
  if (!fs::exists(path)) fail(ErrorKind::path, "config file not found: " + path.string());
  std::ifstream in(path);
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    fail(ErrorKind::config, "cannot parse " + path.string() + ": " + e.what());
  }
  std::optional<std::uint64_t> override;
  if (const char* env = std::getenv("SBL_SEED_OVERRIDE"); env && *env) {
    char* end = nullptr;
    const auto v = std::strtoull(env, &end, 10);
    if (*end != '\0') fail(ErrorKind::config, std::string("SBL_SEED_OVERRIDE is not an integer: ") + env);
    override = v;
  }
  return parse_config(j, fs::absolute(path).parent_path(), override);
}

json canonical_json(const RunConfig& c) {
  json grid = json::array();
  for (const auto& g : c.grid) grid.push_back({g.n_way, g.m_shot, g.q_queries});
  json recipes = c.recipes.empty() ? json("builtin")
                                   : json(sha256_hex(shapegen::recipes_to_json(
                                                         shapegen::load_recipes(c.recipes))
                                                         .dump()));
  return {
      {"name", c.name},
      {"recipes", recipes},
      {"instances_per_category", c.instances_per_category},
      {"points", c.data.points},
      {"views", c.data.views},
      {"image_size", c.data.render.width},
      {"render_points", c.data.render.render_points},
      {"splat_radius", c.data.render.splat_radius},
      {"data_seed", c.data_seed},
      {"split", {c.split.train, c.split.val, c.split.test}},
      {"split_seed", c.split_seed},
      {"fp", {{"point_widths", c.fp.point_widths}, {"post_hidden", c.fp.post_hidden}, {"embed_dim", c.fp.embed_dim}}},
      {"fi",
       {{"patch", c.fi.patch}, {"patch_width", c.fi.patch_width}, {"trunk_hidden", c.fi.trunk_hidden},
        {"embed_dim", c.fi.embed_dim}}},
      {"shape", trainer_json(c.shape)},
      {"image", trainer_json(c.image)},
      {"align", trainer_json(c.align)},
      {"oracle", trainer_json(c.oracle)},
      {"triplet", trainer_json(c.triplet)},
      {"triplet_margin", c.triplet_loss.margin},
      {"grid", grid},
      {"eval_episodes", c.eval_episodes},
      {"eval_seed", c.eval_seed},
      {"eval_methods", c.eval_methods},
      {"rfs", {c.logistic.steps, c.logistic.learning_rate, c.logistic.reg_strength}},
      {"histogram_pairs", c.histogram_pairs},
  };
}

std::string fingerprint(const RunConfig& config) { return sha256_hex(canonical_json(config).dump()); }

}  // namespace sbl::cli
