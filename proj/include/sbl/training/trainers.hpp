#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "sbl/encoders/encoders.hpp"
#include "sbl/episodes/data.hpp"
#include "sbl/episodes/episodes.hpp"
#include "sbl/numerics/optimizer.hpp"
#include "sbl/shapegen/pointcloud.hpp"

namespace sbl::training {

using episodes::EpisodeShape;
using episodes::LoadedDataset;
using episodes::Section;

struct TrainConfig {
  int epochs = 200;
  // 0 means one pass over the shuffled training instances per epoch.
  int batches_per_epoch = 0;
  std::size_t batch_size = 64;
  OptimizerSpec optimizer;
  double w1 = 1.0;  // L1 weight
  double w2 = 1.0;  // L2 weight
  std::size_t val_episodes = 200;
  EpisodeShape val_shape{5, 1, 10};
  // Applied to training point clouds (shape and triplet trainers).
  shapegen::AugmentPolicy augment;
  std::uint64_t seed = 0;
};

// Config errors for negative weights, a zero batch size, negative epochs or
// a zero validation episode count.
void validate(const TrainConfig& config);

struct TripletConfig {
  double margin = 0.1;
};

struct EpochRecord {
  int epoch = 0;            // 0 is the initialization, before any update
  double train_loss = 0.0;  // mean batch loss; NaN for epoch 0
  // Fraction of training items the head classified correctly during the
  // epoch; NaN for trainers without a classification head.
  double train_accuracy = 0.0;
  double val_accuracy = 0.0;
  double best_val_accuracy = 0.0;
  double learning_rate = 0.0;
};

/// Best-validation snapshot of a training run. Only trained epochs compete;
/// the initialization is returned when no epoch runs.
struct TrainedModel {
  std::string method;
  bool oracle = false;
  std::vector<NamedTensor> parameters;
  double best_val_accuracy = 0.0;
  int best_epoch = 0;
  std::vector<EpochRecord> log;
};

/// What the alignment trainers see for each minibatch, for tests and tracing.
struct BatchProbe {
  int epoch;
  std::size_t batch;
  const Tensor& phi_i;
  const Tensor& phi_p;
  double loss;
};
using BatchHook = std::function<void(const BatchProbe&)>;

/// f_p plus a linear head trained with cross-entropy on augmented clouds of
/// the train classes. After every epoch, val episodes are classified by
/// nearest neighbor under cosine similarity and the best snapshot is kept.
TrainedModel train_shape_embedding(const LoadedDataset& ds, const Section& train,
                                   const Section& val, const encoders::PointEncoderConfig& fp_config,
                                   const TrainConfig& config);

/// Image-only baseline: f_i plus a head trained with cross-entropy on one
/// random view per instance occurrence. Validation is SimpleShot (l2).
TrainedModel train_image_embedding(const LoadedDataset& ds, const Section& train,
                                   const Section& val, const encoders::ImageEncoderConfig& fi_config,
                                   const TrainConfig& config);

/// f_i trained to match the frozen f_p by w1*L1 + w2*L2. Targets are
/// unaugmented shape embeddings computed once. Validation averages image and
/// shape support embeddings and classifies image queries by nearest centroid.
TrainedModel train_shape_biased_image(const LoadedDataset& ds, const Section& train,
                                      const Section& val, const encoders::PointEncoder& fp,
                                      const encoders::ImageEncoderConfig& fi_config,
                                      const TrainConfig& config, const BatchHook& hook = {});

/// f_p and f_i trained jointly from scratch. Each image embedding is the
/// anchor, its own cloud's embedding the positive and another batch
/// instance's cloud embedding the negative.
TrainedModel train_triplet(const LoadedDataset& ds, const Section& train, const Section& val,
                           const encoders::PointEncoderConfig& fp_config,
                           const encoders::ImageEncoderConfig& fi_config, const TrainConfig& config,
                           const TripletConfig& triplet);

/// Explicit acknowledgment that the oracle trains on evaluation classes.
struct OracleAck {
  bool test_classes_used = false;
};

/// train_shape_biased_image over `pool`, which the caller builds from all
/// splits. The result is tagged oracle. Refused without the acknowledgment.
TrainedModel train_oracle(const LoadedDataset& ds, const Section& pool, const Section& val,
                          const encoders::PointEncoder& fp,
                          const encoders::ImageEncoderConfig& fi_config, const TrainConfig& config,
                          OracleAck ack);

/// Negative row for each anchor of a triplet batch: uniform over the other
/// rows. Needs at least 2 rows.
std::vector<std::size_t> sample_negatives(std::size_t batch, Rng& rng);

// Encoders rebuilt from a parameter list (extra entries are ignored).
encoders::PointEncoder make_point_encoder(const encoders::PointEncoderConfig& config,
                                          const std::vector<NamedTensor>& params);
encoders::ImageEncoder make_image_encoder(const encoders::ImageEncoderConfig& config,
                                          const std::vector<NamedTensor>& params);

/// Writes the parameters to `path` in the checkpoint format and the metadata
/// (method, oracle tag, best accuracy and epoch) to `path` + ".json".
void save_model(const std::filesystem::path& path, const TrainedModel& model);
TrainedModel load_model(const std::filesystem::path& path);

// epoch,train_loss,train_acc,val_acc,best_val_acc,lr
std::string log_csv(const std::vector<EpochRecord>& log);

}  // namespace sbl::training
