#include "sbl/training/trainers.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <sstream>

#include <json.hpp>

#include "sbl/binary_io.hpp"
#include "sbl/episodes/evaluate.hpp"
#include "sbl/error.hpp"
#include "sbl/numerics/ops.hpp"
#include "sbl/training/losses.hpp"

namespace sbl::training {

namespace {

using encoders::ClassifierHead;
using encoders::ImageEncoder;
using encoders::PointEncoder;
using episodes::Episode;
using render::DepthImage;
using shapegen::PointCloud;

// Stream tags for derive_seed; fixed so runs stay reproducible.
constexpr std::uint64_t kInitStream = 0x1417;
constexpr std::uint64_t kEpochStream = 0xE90C;
constexpr std::uint64_t kValStream = 0x7A1;

std::vector<std::size_t> section_instances(const Section& s) {
  std::vector<std::size_t> out;
  for (int c : s.classes) {
    const auto& m = s.members.at(c);
    out.insert(out.end(), m.begin(), m.end());
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::map<int, int> class_index(const Section& s) {
  std::map<int, int> out;
  for (std::size_t i = 0; i < s.classes.size(); ++i) out[s.classes[i]] = static_cast<int>(i);
  return out;
}

// Shuffled minibatches for one epoch. A trailing batch of one instance joins
// the previous batch so pairwise terms always have a pair.
std::vector<std::vector<std::size_t>> epoch_batches(const std::vector<std::size_t>& pool,
                                                    const TrainConfig& config, Rng& rng) {
  std::vector<std::vector<std::size_t>> batches;
  const auto want = static_cast<std::size_t>(config.batches_per_epoch);
  do {
    std::vector<std::size_t> order = pool;
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t lo = 0; lo < order.size(); lo += config.batch_size) {
      const std::size_t hi = std::min(order.size(), lo + config.batch_size);
      if (hi - lo == 1 && !batches.empty()) {
        // With a fixed batch count the singleton is dropped and the next pass
        // starts instead.
        if (want == 0) batches.back().push_back(order[lo]);
        break;
      }
      batches.emplace_back(order.begin() + lo, order.begin() + hi);
      if (want > 0 && batches.size() == want) return batches;
    }
  } while (want > 0);
  return batches;
}

const DepthImage* random_view(const LoadedDataset& ds, std::size_t inst, Rng& rng) {
  const auto& views = ds.views(inst);
  return &views[uniform_index(rng, 0, views.size() - 1)];
}

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

struct EpochStats {
  double loss_sum = 0.0;
  std::size_t batches = 0;
  std::size_t correct = 0;
  std::size_t seen = 0;
  bool classifies = false;

  void add_loss(double v) {
    loss_sum += v;
    ++batches;
  }
  void add_predictions(const Tensor& logits, const std::vector<int>& labels) {
    classifies = true;
    for (std::size_t r = 0; r < labels.size(); ++r) {
      const auto row = logits.row(r);
      const auto top = std::max_element(row.begin(), row.end()) - row.begin();
      correct += top == labels[r];
      ++seen;
    }
  }
  double loss() const { return loss_sum / static_cast<double>(batches); }
  double accuracy() const {
    return classifies ? static_cast<double>(correct) / static_cast<double>(seen) : kNaN;
  }
};

double checked_loss(const Var& loss, int epoch) {
  const double v = loss.value()[0];
  if (!std::isfinite(v)) {
    fail(ErrorKind::numeric, "training loss became non-finite in epoch " + std::to_string(epoch));
  }
  return v;
}

// Validation episodes are drawn once and reused every epoch, so accuracy
// differences between epochs come from the model only.
class Validator {
 public:
  enum class Rule { points, image, averaged };

  Validator(const LoadedDataset& ds, const Section& val, const TrainConfig& config, Rule rule)
      : ds_(ds), rule_(rule) {
    if (val.classes.empty()) fail(ErrorKind::empty_set, "validation split has no classes");
    episodes_ = episodes::episode_stream(ds, val, config.val_shape, config.val_episodes,
                                         derive_seed(config.seed, {kValStream}));
    for (const auto& e : episodes_) {
      for (const auto& s : e.supports) {
        add_image(s.instance, s.view);
        add_cloud(s.instance);
      }
      for (const auto& q : e.queries) {
        add_image(q.instance, q.view);
        // Shape validation classifies clouds; val classes are not test classes.
        if (rule_ == Rule::points) add_cloud(q.instance);
      }
    }
  }

  double accuracy(const ImageEncoder* fi, const PointEncoder* fp) const {
    Tensor img_rows, cloud_rows;
    if (rule_ != Rule::points) img_rows = episodes::embed_images(*fi, images_);
    if (rule_ != Rule::image) {
      std::vector<const PointCloud*> clouds;
      for (std::size_t inst : cloud_order_) clouds.push_back(&ds_.cloud(inst));
      cloud_rows = episodes::embed_clouds(*fp, clouds);
    }
    std::vector<double> acc(episodes_.size());
    for (std::size_t k = 0; k < episodes_.size(); ++k) {
      const Episode& e = episodes_[k];
      const auto labels = e.support_labels();
      const auto truth = e.query_labels();
      std::vector<std::size_t> s_img, s_cloud, q_img, q_cloud;
      const bool images = rule_ != Rule::points, clouds = rule_ != Rule::image;
      for (const auto& s : e.supports) {
        if (images) s_img.push_back(image_index_.at({s.instance, s.view}));
        if (clouds) s_cloud.push_back(cloud_index_.at(s.instance));
      }
      for (const auto& q : e.queries) {
        if (images) q_img.push_back(image_index_.at({q.instance, q.view}));
        if (rule_ == Rule::points) q_cloud.push_back(cloud_index_.at(q.instance));
      }
      std::vector<int> pred;
      switch (rule_) {
        case Rule::points:
          pred = episodes::nearest_neighbor_cosine(rows(cloud_rows, s_cloud), labels,
                                                   rows(cloud_rows, q_cloud));
          break;
        case Rule::image:
          pred = episodes::nearest_centroid_classify(rows(img_rows, s_img), labels,
                                                     rows(img_rows, q_img), e.shape.n_way,
                                                     episodes::NormMode::l2);
          break;
        case Rule::averaged: {
          const auto l2 = episodes::NormMode::l2;
          const Tensor protos = episodes::shape_biased_prototypes(
              episodes::normalize_rows(rows(img_rows, s_img), l2),
              episodes::normalize_rows(rows(cloud_rows, s_cloud), l2), labels, e.shape.n_way);
          pred = episodes::nearest_prototype(protos,
                                             episodes::normalize_rows(rows(img_rows, q_img), l2));
          break;
        }
      }
      acc[k] = episodes::accuracy(pred, truth);
    }
    return episodes::mean(acc);
  }

 private:
  static Tensor rows(const Tensor& table, const std::vector<std::size_t>& idx) {
    Tensor out({idx.size(), table.cols()});
    for (std::size_t i = 0; i < idx.size(); ++i) {
      std::copy(table.row(idx[i]).begin(), table.row(idx[i]).end(), out.row(i).begin());
    }
    return out;
  }

  void add_image(std::size_t inst, int view) {
    if (rule_ == Rule::points) return;
    if (image_index_.emplace(std::make_pair(inst, view), images_.size()).second) {
      images_.push_back(&ds_.views(inst)[static_cast<std::size_t>(view)]);
    }
  }
  void add_cloud(std::size_t inst) {
    if (rule_ == Rule::image) return;
    if (cloud_index_.emplace(inst, cloud_order_.size()).second) cloud_order_.push_back(inst);
  }

  const LoadedDataset& ds_;
  Rule rule_;
  std::vector<Episode> episodes_;
  std::vector<const DepthImage*> images_;
  std::map<std::pair<std::size_t, int>, std::size_t> image_index_;
  std::vector<std::size_t> cloud_order_;
  std::map<std::size_t, std::size_t> cloud_index_;
};

// Shared epoch loop: records epoch 0, runs `train_epoch` for each epoch and
// keeps the snapshot with the strictly best validation accuracy.
template <class EpochFn, class ValFn>
TrainedModel run_epochs(std::string method, const TrainConfig& config, ParameterSet& params,
                        Optimizer& opt, EpochFn train_epoch, ValFn validate_now) {
  TrainedModel m;
  m.method = std::move(method);
  const double initial = validate_now();
  m.parameters = snapshot(params);
  m.best_val_accuracy = initial;
  m.best_epoch = 0;
  m.log.push_back({0, kNaN, kNaN, initial, initial, opt.learning_rate()});
  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    opt.set_epoch(epoch);
    Rng rng = make_rng(config.seed, {kEpochStream, static_cast<std::uint64_t>(epoch)});
    const EpochStats stats = train_epoch(epoch, rng);
    const double val = validate_now();
    // The initialization is only kept when no epoch runs.
    if (epoch == 1 || val > m.best_val_accuracy) {
      m.best_val_accuracy = val;
      m.best_epoch = epoch;
      m.parameters = snapshot(params);
    }
    m.log.push_back(
        {epoch, stats.loss(), stats.accuracy(), val, m.best_val_accuracy, opt.learning_rate()});
  }
  return m;
}

void require_train(const Section& train, const char* what) {
  if (train.classes.empty()) fail(ErrorKind::empty_set, std::string(what) + ": training split is empty");
}

void require_views(const LoadedDataset& ds, const std::vector<std::size_t>& pool) {
  for (std::size_t inst : pool) {
    if (ds.views(inst).empty()) {
      fail(ErrorKind::config, "instance " + std::to_string(ds.instance_id(inst)) +
                                  " has no image paired with its point cloud");
    }
  }
}

TrainedModel align_impl(std::string method, const LoadedDataset& ds, const Section& pool_section,
                        const Section& val, const PointEncoder& fp,
                        const encoders::ImageEncoderConfig& fi_config, const TrainConfig& config,
                        const BatchHook& hook) {
  validate(config);
  require_train(pool_section, "alignment");
  const auto pool = section_instances(pool_section);
  if (pool.size() < 2 && config.w2 > 0.0) {
    fail(ErrorKind::empty_set, "alignment needs at least 2 training instances");
  }
  require_views(ds, pool);
  if (fp.embed_dim() != fi_config.embed_dim) {
    fail(ErrorKind::config, "image embedding width " + std::to_string(fi_config.embed_dim) +
                                " differs from shape embedding width " +
                                std::to_string(fp.embed_dim()));
  }

  std::vector<const PointCloud*> clouds;
  std::map<std::size_t, std::size_t> target_row;
  for (std::size_t inst : pool) {
    target_row[inst] = clouds.size();
    clouds.push_back(&ds.cloud(inst));
  }
  const Tensor targets = episodes::embed_clouds(fp, clouds);

  Rng init = make_rng(config.seed, {kInitStream});
  ImageEncoder fi(fi_config, init);
  Optimizer opt(config.optimizer);
  const Validator validator(ds, val, config, Validator::Rule::averaged);

  auto train_epoch = [&](int epoch, Rng& rng) {
    const auto batches = epoch_batches(pool, config, rng);
    EpochStats stats;
    for (std::size_t b = 0; b < batches.size(); ++b) {
      std::vector<const DepthImage*> images;
      Tensor phi_p({batches[b].size(), targets.cols()});
      for (std::size_t k = 0; k < batches[b].size(); ++k) {
        const std::size_t inst = batches[b][k];
        images.push_back(random_view(ds, inst, rng));
        const auto src = targets.row(target_row.at(inst));
        std::copy(src.begin(), src.end(), phi_p.row(k).begin());
      }
      const Var phi_i = fi.forward(images);
      const Var loss = loss_align(phi_i, phi_p, config.w1, config.w2);
      const double v = checked_loss(loss, epoch);
      if (hook) hook({epoch, b, phi_i.value(), phi_p, v});
      fi.parameters().zero_grad();
      loss.backward();
      opt.step(fi.parameters());
      stats.add_loss(v);
    }
    return stats;
  };
  return run_epochs(std::move(method), config, fi.parameters(), opt, train_epoch,
                    [&] { return validator.accuracy(&fi, &fp); });
}

}  // namespace

void validate(const TrainConfig& c) {
  if (c.epochs < 0) fail(ErrorKind::config, "epochs must be nonnegative");
  if (c.batches_per_epoch < 0) fail(ErrorKind::config, "batches_per_epoch must be nonnegative");
  if (c.batch_size < 1) fail(ErrorKind::config, "batch size must be at least 1");
  if (c.w1 < 0.0 || c.w2 < 0.0) fail(ErrorKind::config, "loss weights must be nonnegative");
  if (c.val_episodes < 1) fail(ErrorKind::config, "validation needs at least one episode");
  if (!(c.optimizer.learning_rate > 0.0)) fail(ErrorKind::config, "learning rate must be positive");
}

TrainedModel train_shape_embedding(const LoadedDataset& ds, const Section& train,
                                   const Section& val, const encoders::PointEncoderConfig& fp_config,
                                   const TrainConfig& config) {
  validate(config);
  require_train(train, "shape embedding");
  if (train.classes.size() < 2) fail(ErrorKind::config, "shape embedding needs at least 2 classes");
  const auto pool = section_instances(train);
  const auto label_of = class_index(train);

  Rng init = make_rng(config.seed, {kInitStream});
  PointEncoder fp(fp_config, init);
  ClassifierHead head(fp.embed_dim(), train.classes.size(), init);
  ParameterSet params;
  params.extend(fp.parameters());
  params.extend(head.parameters());
  Optimizer opt(config.optimizer);
  const Validator validator(ds, val, config, Validator::Rule::points);

  auto train_epoch = [&](int epoch, Rng& rng) {
    const auto batches = epoch_batches(pool, config, rng);
    EpochStats stats;
    for (const auto& batch : batches) {
      std::vector<PointCloud> augmented;
      std::vector<int> labels;
      augmented.reserve(batch.size());
      for (std::size_t inst : batch) {
        augmented.push_back(shapegen::augment_pointcloud(ds.cloud(inst), config.augment, rng));
        labels.push_back(label_of.at(ds.category(inst)));
      }
      std::vector<const PointCloud*> ptrs;
      for (const auto& pc : augmented) ptrs.push_back(&pc);
      const Var logits = head.logits(fp.forward(ptrs));
      const Var loss = softmax_cross_entropy(logits, labels);
      stats.add_loss(checked_loss(loss, epoch));
      stats.add_predictions(logits.value(), labels);
      params.zero_grad();
      loss.backward();
      opt.step(params);
    }
    return stats;
  };
  return run_epochs("shape", config, params, opt, train_epoch,
                    [&] { return validator.accuracy(nullptr, &fp); });
}

TrainedModel train_image_embedding(const LoadedDataset& ds, const Section& train,
                                   const Section& val, const encoders::ImageEncoderConfig& fi_config,
                                   const TrainConfig& config) {
  validate(config);
  require_train(train, "image embedding");
  if (train.classes.size() < 2) fail(ErrorKind::config, "image embedding needs at least 2 classes");
  const auto pool = section_instances(train);
  require_views(ds, pool);
  const auto label_of = class_index(train);

  Rng init = make_rng(config.seed, {kInitStream});
  ImageEncoder fi(fi_config, init);
  ClassifierHead head(fi.embed_dim(), train.classes.size(), init);
  ParameterSet params;
  params.extend(fi.parameters());
  params.extend(head.parameters());
  Optimizer opt(config.optimizer);
  const Validator validator(ds, val, config, Validator::Rule::image);

  auto train_epoch = [&](int epoch, Rng& rng) {
    const auto batches = epoch_batches(pool, config, rng);
    EpochStats stats;
    for (const auto& batch : batches) {
      std::vector<const DepthImage*> images;
      std::vector<int> labels;
      for (std::size_t inst : batch) {
        images.push_back(random_view(ds, inst, rng));
        labels.push_back(label_of.at(ds.category(inst)));
      }
      const Var logits = head.logits(fi.forward(images));
      const Var loss = softmax_cross_entropy(logits, labels);
      stats.add_loss(checked_loss(loss, epoch));
      stats.add_predictions(logits.value(), labels);
      params.zero_grad();
      loss.backward();
      opt.step(params);
    }
    return stats;
  };
  return run_epochs("image", config, params, opt, train_epoch,
                    [&] { return validator.accuracy(&fi, nullptr); });
}

TrainedModel train_shape_biased_image(const LoadedDataset& ds, const Section& train,
                                      const Section& val, const PointEncoder& fp,
                                      const encoders::ImageEncoderConfig& fi_config,
                                      const TrainConfig& config, const BatchHook& hook) {
  return align_impl(config.w2 == 0.0 ? "align-l1only" : "align", ds, train, val, fp, fi_config,
                    config, hook);
}

TrainedModel train_oracle(const LoadedDataset& ds, const Section& pool, const Section& val,
                          const PointEncoder& fp, const encoders::ImageEncoderConfig& fi_config,
                          const TrainConfig& config, OracleAck ack) {
  if (!ack.test_classes_used) {
    fail(ErrorKind::refusal,
         "the oracle trains on test classes; pass the oracle acknowledgment to run it");
  }
  TrainedModel m = align_impl("oracle", ds, pool, val, fp, fi_config, config, {});
  m.oracle = true;
  return m;
}

TrainedModel train_triplet(const LoadedDataset& ds, const Section& train, const Section& val,
                           const encoders::PointEncoderConfig& fp_config,
                           const encoders::ImageEncoderConfig& fi_config, const TrainConfig& config,
                           const TripletConfig& triplet) {
  validate(config);
  require_train(train, "triplet");
  if (config.batch_size < 2) fail(ErrorKind::config, "triplet batches need at least 2 instances");
  if (!(triplet.margin >= 0.0)) fail(ErrorKind::config, "triplet margin must be nonnegative");
  const auto pool = section_instances(train);
  if (pool.size() < 2) fail(ErrorKind::empty_set, "triplet training needs at least 2 instances");
  require_views(ds, pool);

  Rng init = make_rng(config.seed, {kInitStream});
  encoders::EncoderPair pair(fp_config, fi_config, init);
  ParameterSet params;
  params.extend(pair.fp.parameters());
  params.extend(pair.fi.parameters());
  Optimizer opt(config.optimizer);
  const Validator validator(ds, val, config, Validator::Rule::averaged);

  auto train_epoch = [&](int epoch, Rng& rng) {
    const auto batches = epoch_batches(pool, config, rng);
    EpochStats stats;
    for (const auto& batch : batches) {
      std::vector<PointCloud> augmented;
      std::vector<const DepthImage*> images;
      augmented.reserve(batch.size());
      for (std::size_t inst : batch) {
        augmented.push_back(shapegen::augment_pointcloud(ds.cloud(inst), config.augment, rng));
        images.push_back(random_view(ds, inst, rng));
      }
      std::vector<const PointCloud*> ptrs;
      for (const auto& pc : augmented) ptrs.push_back(&pc);
      const auto negatives = sample_negatives(batch.size(), rng);
      const Var phi_p = pair.fp.forward(ptrs);
      const Var phi_i = pair.fi.forward(images);
      const Var loss = loss_triplet(phi_i, phi_p, gather_rows(phi_p, negatives), triplet.margin);
      stats.add_loss(checked_loss(loss, epoch));
      params.zero_grad();
      loss.backward();
      opt.step(params);
    }
    return stats;
  };
  return run_epochs("triplet", config, params, opt, train_epoch,
                    [&] { return validator.accuracy(&pair.fi, &pair.fp); });
}

std::vector<std::size_t> sample_negatives(std::size_t batch, Rng& rng) {
  if (batch < 2) fail(ErrorKind::config, "triplet batches need at least 2 instances");
  std::vector<std::size_t> out(batch);
  for (std::size_t k = 0; k < batch; ++k) {
    const std::size_t l = uniform_index(rng, 0, batch - 2);
    out[k] = l >= k ? l + 1 : l;
  }
  return out;
}

encoders::PointEncoder make_point_encoder(const encoders::PointEncoderConfig& config,
                                          const std::vector<NamedTensor>& params) {
  Rng unused(0);
  PointEncoder fp(config, unused);
  restore(fp.parameters(), params);
  return fp;
}

encoders::ImageEncoder make_image_encoder(const encoders::ImageEncoderConfig& config,
                                          const std::vector<NamedTensor>& params) {
  Rng unused(0);
  ImageEncoder fi(config, unused);
  restore(fi.parameters(), params);
  return fi;
}

void save_model(const std::filesystem::path& path, const TrainedModel& model) {
  save_checkpoint(path, model.parameters);
  nlohmann::json meta{{"method", model.method},
                      {"oracle", model.oracle},
                      {"best_val_accuracy", model.best_val_accuracy},
                      {"best_epoch", model.best_epoch},
                      {"epochs", model.log.empty() ? 0 : model.log.back().epoch}};
  write_file(std::filesystem::path(path.string() + ".json"), meta.dump(2) + "\n");
}

TrainedModel load_model(const std::filesystem::path& path) {
  TrainedModel m;
  m.parameters = load_checkpoint(path);
  const std::filesystem::path meta_path(path.string() + ".json");
  const std::string text = read_file(meta_path);
  try {
    const auto meta = nlohmann::json::parse(text);
    m.method = meta.at("method").get<std::string>();
    m.oracle = meta.at("oracle").get<bool>();
    m.best_val_accuracy = meta.at("best_val_accuracy").get<double>();
    m.best_epoch = meta.at("best_epoch").get<int>();
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::format, meta_path.string() + ": " + e.what());
  }
  return m;
}

std::string log_csv(const std::vector<EpochRecord>& log) {
  std::ostringstream out;
  out << "epoch,train_loss,train_acc,val_acc,best_val_acc,lr\n";
  // Undefined values (epoch 0, heads that do not exist) are left empty.
  const auto field = [](double v, const char* fmt) {
    if (std::isnan(v)) return std::string();
    char buf[64];
    std::snprintf(buf, sizeof buf, fmt, v);
    return std::string(buf);
  };
  for (const auto& r : log) {
    out << r.epoch << ',' << field(r.train_loss, "%.9g") << ',' << field(r.train_accuracy, "%.6f")
        << ',' << field(r.val_accuracy, "%.6f") << ',' << field(r.best_val_accuracy, "%.6f") << ','
        << field(r.learning_rate, "%.6g") << '\n';
  }
  return out.str();
}

}  // namespace sbl::training
